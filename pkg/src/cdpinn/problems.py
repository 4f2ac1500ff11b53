"""Singularly perturbed convection-diffusion test problems.

1D, primary:  -eps u'' + u' = 0 on (0,1),  u(0) = 1 - exp(-1/eps), u(1) = 0.
1D, forced:   -eps u'' + u' = 1 on (0,1),  u(0) = u(1) = 0.
2D:           -eps Lap(u) + u_y = 0 on (-1,1)^2, layer at the outflow edge y = 1.

The corrector ``c`` is trained so that ``reduced + c`` solves the full problem;
for every problem here the corrector obeys the homogeneous operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

PRIMARY = "primary"
FORCED = "forced"
KINDS_1D = (PRIMARY, FORCED)

# exp(t) for t <= -700 is flushed to exactly 0
_EXP_FLOOR = -700.0


def _exp_neg(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.exp(np.maximum(t, _EXP_FLOOR))
    return np.where(t <= _EXP_FLOOR, 0.0, out)


def _check_eps(eps):
    if not eps > 0:
        raise DomainError(f"epsilon must be positive, got {eps}")


@dataclass(frozen=True)
class Problem1D:
    epsilon: float
    kind: str = PRIMARY

    def __post_init__(self):
        _check_eps(self.epsilon)
        if self.kind not in KINDS_1D:
            raise ConfigError(f"unknown 1D problem kind {self.kind!r}")

    @property
    def dim(self):
        return 1

    @property
    def velocity(self):
        return np.array([1.0])

    @property
    def rhs(self):
        return 1.0 if self.kind == FORCED else 0.0

    @property
    def boundary(self):
        """((0, u(0)), (1, u(1)))."""
        if self.kind == PRIMARY:
            return ((0.0, float(1.0 - _exp_neg(-1.0 / self.epsilon))), (1.0, 0.0))
        return ((0.0, 0.0), (1.0, 0.0))

    def exact(self, x):
        if self.kind == PRIMARY:
            return exact_u_1d(x, self.epsilon)
        return exact_forced_1d(x, self.epsilon)

    def reduced(self, x):
        return reduced_u_1d(x, self.kind)


@dataclass(frozen=True)
class Problem2D:
    epsilon: float

    def __post_init__(self):
        _check_eps(self.epsilon)

    @property
    def dim(self):
        return 2

    @property
    def velocity(self):
        return np.array([0.0, 1.0])

    @property
    def rhs(self):
        return 0.0

    def exact(self, x, y):
        return exact_u_2d(x, y, self.epsilon)

    def reduced(self, x, y):
        return np.asarray(x, dtype=np.float64) + 0.0 * np.asarray(y, dtype=np.float64)


def exact_u_1d(x, eps):
    """1 - exp((x - 1)/eps)."""
    _check_eps(eps)
    x = np.asarray(x, dtype=np.float64)
    return 1.0 - _exp_neg((x - 1.0) / eps)


def exact_forced_1d(x, eps):
    """Solution of -eps u'' + u' = 1 with homogeneous Dirichlet data."""
    _check_eps(eps)
    x = np.asarray(x, dtype=np.float64)
    # x - (exp((x-1)/eps) - exp(-1/eps)) / (1 - exp(-1/eps))
    e1 = _exp_neg(-1.0 / eps)
    return x - (_exp_neg((x - 1.0) / eps) - e1) / (1.0 - e1)


def reduced_u_1d(x, kind=PRIMARY):
    x = np.asarray(x, dtype=np.float64)
    if kind == PRIMARY:
        return np.ones_like(x)
    if kind == FORCED:
        return x.copy()
    raise ConfigError(f"unknown 1D problem kind {kind!r}")


def exact_u_2d(x, y, eps):
    """x (1 - exp((y-1)/eps)) / (1 - exp(-2/eps))."""
    _check_eps(eps)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return x * (1.0 - _exp_neg((y - 1.0) / eps)) / (1.0 - _exp_neg(-2.0 / eps))


def boundary_points_2d(n_edge=129):
    """Points on the four edges of [-1,1]^2, each edge sampled at ``n_edge`` points, corners once."""
    s = np.linspace(-1.0, 1.0, n_edge)
    bottom = np.column_stack([s, np.full(n_edge, -1.0)])
    top = np.column_stack([s, np.full(n_edge, 1.0)])
    left = np.column_stack([np.full(n_edge - 2, -1.0), s[1:-1]])
    right = np.column_stack([np.full(n_edge - 2, 1.0), s[1:-1]])
    return np.vstack([bottom, top, left, right])


def corrector_boundary_targets(problem, n_edge=129):
    """Boundary points and the values the corrector must take there.

    Returns ``(x_u, c_u)`` with ``x_u`` of shape ``(n_u, dim)``; ``c_u`` is the
    exact boundary value minus the reduced solution.
    """
    if isinstance(problem, Problem1D):
        (x0, g0), (x1, g1) = problem.boundary
        x_u = np.array([[x0], [x1]])
        c_u = np.array([g0, g1]) - problem.reduced(x_u[:, 0])
        return x_u, c_u
    if isinstance(problem, Problem2D):
        x_u = boundary_points_2d(n_edge)
        xs, ys = x_u[:, 0], x_u[:, 1]
        return x_u, problem.exact(xs, ys) - problem.reduced(xs, ys)
    raise ConfigError(f"unsupported problem {problem!r}")


def residual_reduced(jet, eps):
    """-eps c'' + c'."""
    return -eps * jet.d2 + jet.d1


def residual_correct_fdm(jet, uhat_slope, eps):
    """-eps c'' + c' + uhat' for a piecewise-linear baseline (uhat'' = 0 off the nodes)."""
    return -eps * jet.d2 + jet.d1 + uhat_slope


def residual_2d(jet_x, jet_y, eps):
    """-eps (c_xx + c_yy) + c_y for velocity (0, 1)."""
    return -eps * (jet_x.d2 + jet_y.d2) + jet_y.d1
