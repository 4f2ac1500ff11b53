"""Central finite differences on a uniform mesh and the piecewise-linear baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError, SamplingError

PIVOT_TOL = 1e-14
DENSE_FALLBACK_MAX_N = 1024
NODE_TOL = 1e-12


@dataclass(frozen=True)
class FdmSolution:
    nodes: np.ndarray
    values: np.ndarray
    h: float
    epsilon: float

    @property
    def N(self):
        return len(self.nodes) - 1

    @property
    def peclet(self):
        return mesh_peclet(self.h, self.epsilon)


def mesh_peclet(h, eps):
    return h / (2.0 * eps)


def thomas(lower, diag, upper, rhs):
    """Solve a tridiagonal system without pivoting.

    ``lower[i]`` multiplies ``u[i-1]`` and ``upper[i]`` multiplies ``u[i+1]`` in
    row ``i``; ``lower[0]`` and ``upper[-1]`` are ignored.
    """
    n = len(diag)
    c = np.empty(n)
    d = np.empty(n)
    pivot = diag[0]
    if abs(pivot) < PIVOT_TOL:
        raise NumericError("singular pivot in tridiagonal solve at row 0")
    c[0] = upper[0] / pivot
    d[0] = rhs[0] / pivot
    for i in range(1, n):
        pivot = diag[i] - lower[i] * c[i - 1]
        if abs(pivot) < PIVOT_TOL:
            raise NumericError(f"singular pivot in tridiagonal solve at row {i}")
        c[i] = upper[i] / pivot if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot
    u = np.empty(n)
    u[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        u[i] = d[i] - c[i] * u[i + 1]
    return u


def central_system(problem, N):
    """Interior rows of the central scheme: (lower, diag, upper, rhs) with boundary terms moved right."""
    eps = problem.epsilon
    h = 1.0 / N
    lo = -eps / h**2 - 1.0 / (2 * h)
    di = 2 * eps / h**2
    up = 1.0 / (2 * h) - eps / h**2
    n = N - 1
    lower = np.full(n, lo)
    diag = np.full(n, di)
    upper = np.full(n, up)
    rhs = np.full(n, problem.rhs)
    (_, g0), (_, g1) = problem.boundary
    rhs[0] -= lo * g0
    rhs[-1] -= up * g1
    return lower, diag, upper, rhs


def solve_central(problem, N):
    """Central-difference solution on ``N`` uniform intervals of [0, 1]."""
    if N < 2:
        raise ConfigError(f"need at least 2 intervals, got N={N}")
    lower, diag, upper, rhs = central_system(problem, N)
    try:
        interior = thomas(lower, diag, upper, rhs)
    except NumericError:
        if N > DENSE_FALLBACK_MAX_N:
            raise
        A = np.diag(diag) + np.diag(lower[1:], -1) + np.diag(upper[:-1], 1)
        interior = np.linalg.solve(A, rhs)
    (_, g0), (_, g1) = problem.boundary
    values = np.concatenate([[g0], interior, [g1]])
    nodes = np.arange(N + 1) / N
    return FdmSolution(nodes, values, 1.0 / N, problem.epsilon)


def system_residual(problem, sol):
    """Max-norm residual of the central linear system at the interior nodes."""
    lower, diag, upper, rhs = central_system(problem, sol.N)
    u = sol.values
    (_, g0), (_, g1) = problem.boundary
    Au = diag * u[1:-1] + lower * u[:-2] + upper * u[2:]
    Au[0] -= lower[0] * g0
    Au[-1] -= upper[-1] * g1
    return float(np.max(np.abs(Au - rhs)))


def detect_oscillation(sol, rel_tol=1e-12):
    """Whether the nodal differences change sign at least twice.

    Differences below ``rel_tol * max|U|`` are treated as rounding noise and
    skipped. Returns ``(oscillates, first_index)`` where ``first_index`` is the
    node at which the first sign change occurs (``None`` if there is none).
    """
    values = sol.values if isinstance(sol, FdmSolution) else np.asarray(sol, dtype=np.float64)
    diffs = np.diff(values)
    floor = rel_tol * max(float(np.max(np.abs(values))), 1e-300)
    changes = []
    prev_sign, prev_idx = 0, None
    for i, d in enumerate(diffs):
        if abs(d) <= floor:
            continue
        sign = 1 if d > 0 else -1
        if prev_sign and sign != prev_sign:
            changes.append(prev_idx + 1)
        prev_sign, prev_idx = sign, i
    return len(changes) >= 2, (changes[0] if changes else None)


@dataclass(frozen=True)
class PiecewiseLinear:
    nodes: np.ndarray
    values: np.ndarray

    @property
    def h(self):
        return float(self.nodes[1] - self.nodes[0])

    @property
    def slopes(self):
        return np.diff(self.values) / self.h

    def evaluate(self, x):
        return np.interp(np.asarray(x, dtype=np.float64), self.nodes, self.values)

    def slope_at(self, x):
        x = np.asarray(x, dtype=np.float64)
        pos = (x - self.nodes[0]) / self.h
        nearest = np.rint(pos)
        if np.any(np.abs(pos - nearest) * self.h <= NODE_TOL):
            raise SamplingError("slope requested at a mesh node")
        idx = np.floor(pos).astype(int)
        if np.any(idx < 0) or np.any(idx >= len(self.nodes) - 1):
            raise SamplingError("slope requested outside the mesh")
        return self.slopes[idx]


def interpolant(sol):
    return PiecewiseLinear(np.asarray(sol.nodes), np.asarray(sol.values))
