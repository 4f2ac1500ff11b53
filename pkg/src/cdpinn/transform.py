"""Affine input maps T(x) = a (x + b), one (a, b) pair per input coordinate.

Samples always hold physical coordinates; the map is applied inside evaluation
and enters the jets as the tangent ``a_k e_k``, so derivatives stay with
respect to the physical coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import net
from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class AffineTransform:
    scale: tuple
    shift: tuple

    def __post_init__(self):
        a = tuple(float(v) for v in np.atleast_1d(self.scale))
        b = tuple(float(v) for v in np.atleast_1d(self.shift))
        if len(a) != len(b):
            raise ConfigError("transform scale and shift need the same length")
        if any(v == 0.0 for v in a):
            raise ConfigError("transform scale must be nonzero")
        object.__setattr__(self, "scale", a)
        object.__setattr__(self, "shift", b)

    @classmethod
    def identity(cls, dim=1):
        return cls((1.0,) * dim, (0.0,) * dim)

    @property
    def dim(self):
        return len(self.scale)

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1 and self.dim == 1:
            x = x[:, None]
        if x.shape[-1] != self.dim:
            raise ShapeError(f"point has {x.shape[-1]} coordinates, transform expects {self.dim}")
        return np.asarray(self.scale) * (x + np.asarray(self.shift))

    def direction(self, coord):
        d = np.zeros(self.dim)
        d[coord] = self.scale[coord]
        return d


def apply(t, x):
    return t.apply(x)


def evaluate(p, t, x):
    """Corrector values c(T(x))."""
    return net.forward(p, t.apply(x))


def jet_trace(p, t, x, coord=0):
    """Recorded jet of x -> c(T(x)) along physical coordinate ``coord``."""
    return net.JetTrace(p, t.apply(x), t.direction(coord))


def jet(p, t, x, coord=0):
    return jet_trace(p, t, x, coord).jet
