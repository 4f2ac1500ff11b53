"""Fully connected tanh networks with exact input derivatives.

A forward pass propagates a second-order jet ``(value, d/ds, d^2/ds^2)`` along
one input direction ``s``. The pass is recorded layer by layer (a
:class:`JetTrace`) so that any loss built from values, slopes and curvatures can
be pulled back to the weights and biases in reverse mode, either summed over
the batch (a gradient) or per sample (a Jacobian).

Parameters are flattened layer-major: ``W_1`` (row-major), ``b_1``, ``W_2``,
``b_2``, ... This ordering is used by every optimizer and by the tangent kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericError, ShapeError

__all__ = [
    "MLPParams",
    "Jet",
    "JetTrace",
    "init_xavier",
    "forward",
    "forward_jet",
    "trace",
    "param_gradient",
    "param_jacobian",
    "flatten",
    "unflatten",
    "n_params",
    "save_params",
    "load_params",
]

_UINT64 = 2**64


def _check_dims(dims):
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ConfigError(f"invalid layer widths {dims}")
    if dims[0] not in (1, 2):
        raise ConfigError(f"input width must be 1 or 2, got {dims[0]}")
    if dims[-1] != 1:
        raise ConfigError(f"output width must be 1, got {dims[-1]}")
    return dims


@dataclass(frozen=True)
class MLPParams:
    """Weights ``W_l`` of shape ``(d_l, d_{l+1})`` and bias rows of length ``d_{l+1}``."""

    dims: tuple
    weights: tuple
    biases: tuple

    def __post_init__(self):
        dims = _check_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        ws = tuple(np.asarray(w, dtype=np.float64) for w in self.weights)
        bs = tuple(np.asarray(b, dtype=np.float64).reshape(-1) for b in self.biases)
        if len(ws) != len(dims) - 1 or len(bs) != len(dims) - 1:
            raise ShapeError("need one weight matrix and one bias row per layer")
        for l, (w, b) in enumerate(zip(ws, bs)):
            if w.shape != (dims[l], dims[l + 1]) or b.shape != (dims[l + 1],):
                raise ShapeError(
                    f"layer {l + 1}: got W{w.shape}, b{b.shape} for widths {dims[l]}->{dims[l + 1]}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NumericError("non-finite parameter", layer=l + 1)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def depth(self):
        """Number of hidden layers."""
        return len(self.dims) - 2

    @property
    def size(self):
        return n_params(self.dims)

    def flat(self):
        return flatten(self)


@dataclass(frozen=True)
class Jet:
    """Value with first and second derivative along one input direction."""

    v: np.ndarray
    d1: np.ndarray
    d2: np.ndarray


def n_params(dims):
    return sum(a * b + b for a, b in zip(dims[:-1], dims[1:]))


def flatten(p):
    parts = []
    for w, b in zip(p.weights, p.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def _split(dims, vec):
    """Views into ``vec`` as (W, b) per layer; no validation."""
    layers = []
    k = 0
    for a, b in zip(dims[:-1], dims[1:]):
        w = vec[k : k + a * b].reshape(a, b)
        k += a * b
        layers.append((w, vec[k : k + b]))
        k += b
    return layers


def unflatten(dims, vec):
    dims = _check_dims(dims)
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (n_params(dims),):
        raise ShapeError(f"expected {n_params(dims)} parameters, got shape {vec.shape}")
    layers = _split(dims, vec.copy())
    return MLPParams(dims, tuple(w for w, _ in layers), tuple(b for _, b in layers))


def _layer_rng(seed, n_layers):
    ss = np.random.SeedSequence(int(seed) % _UINT64)
    return [np.random.Generator(np.random.PCG64(child)) for child in ss.spawn(n_layers)]


def _box_muller(rng, size):
    m = (size + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1], keeps log finite
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    return np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:size]


def init_xavier(dims, seed):
    """Xavier-normal weights, zero biases.

    Layer ``l`` draws from its own PCG64 stream spawned from ``seed``, so its
    weights do not depend on the sizes of the other layers. Normal deviates
    come from the Box-Muller transform.
    """
    dims = _check_dims(dims)
    rngs = _layer_rng(seed, len(dims) - 1)
    weights, biases = [], []
    for rng, a, b in zip(rngs, dims[:-1], dims[1:]):
        std = np.sqrt(2.0 / (a + b))
        weights.append(std * _box_muller(rng, a * b).reshape(a, b))
        biases.append(np.zeros(b))
    return MLPParams(dims, tuple(weights), tuple(biases))


def _as_batch(dims, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if dims[0] == 1 else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != dims[0]:
        raise ShapeError(f"input has shape {x.shape}, network expects {dims[0]} columns")
    return x


def _layers(p):
    if isinstance(p, MLPParams):
        return p.dims, list(zip(p.weights, p.biases))
    dims, vec = p
    return dims, _split(dims, vec)


def forward(p, x):
    """Network output for a batch of points; returns shape ``(n,)``."""
    dims, layers = _layers(p)
    y = _as_batch(dims, x)
    last = len(layers) - 1
    with np.errstate(over="ignore", invalid="ignore"):
        for l, (w, b) in enumerate(layers):
            z = y @ w + b
            y = z if l == last else np.tanh(z)
    if not np.all(np.isfinite(y)):
        raise NumericError("non-finite network output", layer=last + 1)
    return y[:, 0]


class JetTrace:
    """Recorded second-order forward pass along one input direction.

    ``direction`` is the input-space tangent: ``e_k`` for a plain partial
    derivative, ``a_k e_k`` when the inputs pass through an affine map first.
    """

    def __init__(self, p, x, direction):
        dims, layers = _layers(p)
        self.dims = dims
        self._layers = layers
        y = _as_batch(dims, x)
        n = y.shape[0]
        direction = np.asarray(direction, dtype=np.float64).reshape(-1)
        if direction.shape != (dims[0],):
            raise ShapeError(f"direction must have {dims[0]} entries")
        dy = np.broadcast_to(direction, (n, dims[0]))
        d2y = None  # second derivative of an affine input is zero
        self._cache = []
        last = len(layers) - 1
        # overflow shows up as inf/nan and is reported by the finiteness checks
        with np.errstate(over="ignore", invalid="ignore"):
            for l, (w, b) in enumerate(layers):
                z = y @ w + b
                dz = dy @ w
                d2z = None if d2y is None else d2y @ w
                if l == last:
                    self._cache.append((y, dy, d2y, None, None, None, None))
                    y, dy, d2y = z, dz, d2z
                    break
                t = np.tanh(z)
                s = 1.0 - t * t
                dzz = dz * dz
                d2 = -2.0 * t * s * dzz
                if d2z is not None:
                    d2 = d2 + s * d2z
                self._cache.append((y, dy, d2y, t, s, dz, d2z))
                y, dy, d2y = t, s * dz, d2
                if not (np.all(np.isfinite(d2y)) and np.all(np.isfinite(dy))):
                    raise NumericError("non-finite jet", layer=l + 1)
        if d2y is None:
            d2y = np.zeros_like(z)
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(dy)) and np.all(np.isfinite(d2y))):
            raise NumericError("non-finite network output", layer=last + 1)
        self.v = y[:, 0]
        self.d1 = dy[:, 0]
        self.d2 = d2y[:, 0]

    @property
    def jet(self):
        return Jet(self.v, self.d1, self.d2)

    def vjp(self, gv=None, gd1=None, gd2=None, per_sample=False):
        """Pull cotangents on ``(v, d1, d2)`` back to the flat parameter vector.

        With ``per_sample`` the batch is not summed and the result has shape
        ``(n, P)``; row ``i`` is the gradient of ``gv_i v_i + gd1_i d1_i + gd2_i d2_i``.
        """
        n = self.v.shape[0]
        zero = np.zeros(n)
        g_y = (zero if gv is None else np.asarray(gv, dtype=np.float64))[:, None]
        g_dy = (zero if gd1 is None else np.asarray(gd1, dtype=np.float64))[:, None]
        g_d2y = (zero if gd2 is None else np.asarray(gd2, dtype=np.float64))[:, None]
        if per_sample:
            outer = lambda a, g: np.einsum("ni,nj->nij", a, g).reshape(n, -1)
            bsum = lambda g: g
        else:
            outer = lambda a, g: (a.T @ g).ravel()
            bsum = lambda g: g.sum(axis=0)
        pieces = []
        last = len(self._layers) - 1
        for l in range(last, -1, -1):
            w, _ = self._layers[l]
            y, dy, d2y, t, s, dz, d2z = self._cache[l]
            if l == last:
                g_z, g_dz, g_d2z = g_y, g_dy, g_d2y
            else:
                # y = t, dy = s dz, d2y = s d2z - 2 t s dz^2 with t = tanh(z), s = 1 - t^2
                ts = t * s
                g_z = g_y * s - 2.0 * g_dy * ts * dz + g_d2y * (4.0 * t * ts - 2.0 * s * s) * dz * dz
                if d2z is not None:
                    g_z = g_z - 2.0 * g_d2y * ts * d2z
                g_dz = g_dy * s - 4.0 * g_d2y * ts * dz
                g_d2z = g_d2y * s
            g_w = outer(y, g_z) + outer(dy, g_dz)
            if d2y is not None:
                g_w = g_w + outer(d2y, g_d2z)
            pieces.append(bsum(g_z))
            pieces.append(g_w)
            if l > 0:
                g_y = g_z @ w.T
                g_dy = g_dz @ w.T
                g_d2y = g_d2z @ w.T
        pieces.reverse()
        return np.concatenate(pieces, axis=-1)


def trace(p, x, coord=0, scale=1.0):
    """Record a jet pass along input coordinate ``coord`` (tangent scaled by ``scale``)."""
    dims, _ = _layers(p)
    if not 0 <= coord < dims[0]:
        raise ShapeError(f"coordinate {coord} out of range for input width {dims[0]}")
    direction = np.zeros(dims[0])
    direction[coord] = scale
    return JetTrace(p, x, direction)


def forward_jet(p, x, coord=0):
    """``(c, dc/dx_coord, d^2c/dx_coord^2)`` at a point or batch of points."""
    t = trace(p, x, coord)
    x = np.asarray(x)
    if x.ndim == 0 or (x.ndim == 1 and t.v.shape[0] == 1):
        return Jet(t.v[0], t.d1[0], t.d2[0])
    return t.jet


def param_gradient(p, loss, x, coord=0, scale=1.0):
    """Gradient of ``loss(jet)`` with respect to all parameters.

    ``loss`` maps a batch :class:`Jet` to ``(value, (gv, gd1, gd2))`` where the
    ``g`` arrays are the partial derivatives of the loss with respect to the
    jet components (``None`` for components it does not use).
    Returns ``(value, flat_gradient)``.
    """
    t = trace(p, x, coord, scale)
    value, (gv, gd1, gd2) = loss(t.jet)
    return value, t.vjp(gv, gd1, gd2)


def param_jacobian(p, x, terms):
    """Rows ``d(observable_i)/d(theta)`` for linear observables of jets.

    Observable ``i`` is ``sum over terms of cv_i v_i + cd1_i d1_i + cd2_i d2_i``
    where each term is ``(direction, cv, cd1, cd2)`` and the jet is taken along
    ``direction`` at ``x_i``.
    """
    rows = None
    for direction, cv, cd1, cd2 in terms:
        t = JetTrace(p, x, direction)
        r = t.vjp(cv, cd1, cd2, per_sample=True)
        rows = r if rows is None else rows + r
    return rows


def save_params(p, path):
    """Write ``dims`` and one line per weight row / bias row, 17 significant digits."""
    fmt = lambda row: " ".join(format(float(v), ".17g") for v in row)
    lines = ["dims = " + " ".join(str(d) for d in p.dims)]
    for l, (w, b) in enumerate(zip(p.weights, p.biases), start=1):
        for i, row in enumerate(w):
            lines.append(f"W{l}.{i} = {fmt(row)}")
        lines.append(f"b{l} = {fmt(b)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_params(path):
    entries = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, _, value = line.partition("=")
        entries[key.strip()] = [float(v) for v in value.split()]
    if "dims" not in entries:
        raise ConfigError("parameter file has no dims line")
    dims = _check_dims(int(d) for d in entries["dims"])
    weights, biases = [], []
    for l in range(1, len(dims)):
        try:
            weights.append(np.array([entries[f"W{l}.{i}"] for i in range(dims[l - 1])]))
            biases.append(np.array(entries[f"b{l}"]))
        except KeyError as exc:
            raise ConfigError(f"parameter file is missing {exc.args[0]}") from None
    return MLPParams(dims, tuple(weights), tuple(biases))
