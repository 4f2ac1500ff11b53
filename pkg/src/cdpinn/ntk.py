"""Tangent kernel of the PINN observables and its spectrum.

Observables are ordered boundary values first, then residual values. With
``J`` the parameter Jacobian of the stacked observables, ``K = J J^T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import net
from .errors import NumericError, ShapeError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class TangentKernel:
    K: np.ndarray
    n_u: int
    n_r: int
    points: np.ndarray  # (N, dim) physical coordinates of each observable

    @property
    def N(self):
        return self.n_u + self.n_r

    @property
    def K_uu(self):
        return self.K[: self.n_u, : self.n_u]

    @property
    def K_ur(self):
        return self.K[: self.n_u, self.n_u :]

    @property
    def K_rr(self):
        return self.K[self.n_u :, self.n_u :]

    @property
    def trace_uu(self):
        return math.fsum(np.diag(self.K_uu))

    @property
    def trace_rr(self):
        return math.fsum(np.diag(self.K_rr))


@dataclass(frozen=True)
class KernelSpectrum:
    values: np.ndarray  # descending, clipped at zero
    vectors: np.ndarray  # columns, aligned with values
    raw_values: np.ndarray

    @property
    def lambda_max(self):
        return float(self.raw_values[0])

    @property
    def lambda_min(self):
        return float(self.raw_values[-1])


def observable_jacobian(params, transform, samples):
    """Rows: d c(x_u)/d theta for boundary points, d N[c](x_r)/d theta for residual points."""
    nu, nr = samples.n_u, samples.n_r
    z = transform.apply(samples.points)
    terms = []
    for k in range(samples.dim):
        cv = np.r_[np.ones(nu), np.zeros(nr)] if k == 0 else None
        cd1 = np.r_[np.zeros(nu), np.full(nr, samples.velocity[k])]
        cd2 = np.r_[np.zeros(nu), np.full(nr, -samples.epsilon)]
        terms.append((transform.direction(k), cv, cd1, cd2))
    return net.param_jacobian(params, z, terms)


def assemble_kernel(params, transform, samples):
    J = observable_jacobian(params, transform, samples)
    K = J @ J.T
    K = 0.5 * (K + K.T)  # matmul rounding can leave ulp-level asymmetry
    return TangentKernel(K, samples.n_u, samples.n_r, samples.points)


def convergence_rate(kernel):
    """Mean eigenvalue, Tr(K)/N."""
    K = kernel.K if isinstance(kernel, TangentKernel) else np.asarray(kernel)
    return math.fsum(np.diag(K)) / K.shape[0]


def kernel_checks(kernel, spectrum=None):
    """Symmetry, PSD and trace-identity diagnostics for an assembled kernel."""
    K = kernel.K
    scale = max(float(np.max(np.abs(K))), 1e-300)
    spectrum = spectrum or eig_sym(K)
    lmax = spectrum.lambda_max
    return {
        "symmetry": float(np.max(np.abs(K - K.T))) / scale,
        "psd_ratio": spectrum.lambda_min / lmax if lmax > 0 else 0.0,
        "trace_identity": math.fsum(np.diag(K)) == math.fsum(np.r_[np.diag(kernel.K_uu), np.diag(kernel.K_rr)]),
        "reconstruction": float(np.max(np.abs(K - (spectrum.vectors * spectrum.raw_values) @ spectrum.vectors.T)))
        / max(lmax, 1e-300),
    }


def _round_robin(n):
    """Rounds of disjoint index pairs covering every pair once (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        top, bot = players[:half], players[half:][::-1]
        rounds.append((np.array(top), np.array(bot)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def eig_sym(K, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Each round applies n/2 disjoint rotations at once (round-robin ordering),
    which is the same cyclic sweep reordered. Stops when the off-diagonal
    Frobenius norm drops below ``tol * ||K||_F``.
    """
    if isinstance(K, TangentKernel):
        K = K.K
    A = np.array(K, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"need a square matrix, got {A.shape}")
    n0 = A.shape[0]
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10 * max(np.max(np.abs(A), initial=0.0), 1e-300):
        raise ShapeError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    n = n0 + (n0 % 2)
    if n != n0:
        A = np.pad(A, ((0, 1), (0, 1)))
    V = np.eye(n)
    fro = np.linalg.norm(A)
    target = tol * fro
    rounds = _round_robin(n) if n > 1 else []

    def off(M):
        # direct sum; subtracting the diagonal from ||M||^2 cancels catastrophically
        D = M - np.diag(np.diag(M))
        return float(np.linalg.norm(D))

    sweeps = 0
    while off(A) > target:
        if sweeps >= max_sweeps:
            raise NumericError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")
        for P, Q in rounds:
            apq = A[P, Q]
            active = np.abs(apq) > 1e-300
            if not np.any(active):
                continue
            app, aqq = A[P, P], A[Q, Q]
            with np.errstate(divide="ignore", invalid="ignore"):
                tau = np.where(active, (aqq - app) / (2.0 * np.where(active, apq, 1.0)), 0.0)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            rp, rq = A[P, :], A[Q, :]
            A[P, :] = c[:, None] * rp - s[:, None] * rq
            A[Q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = A[:, P], A[:, Q]
            A[:, P] = cp * c - cq * s
            A[:, Q] = cp * s + cq * c
            A[P, Q] = 0.0
            A[Q, P] = 0.0
            vp, vq = V[:, P], V[:, Q]
            V[:, P] = vp * c - vq * s
            V[:, Q] = vp * s + vq * c
        sweeps += 1
    w = np.diag(A)[:n0]
    V = V[:n0, :n0]  # a zero pad row never couples, so its column stays e_n
    order = np.argsort(-w, kind="stable")
    w = w[order]
    V = V[:, order]
    pick = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[pick, np.arange(n0)] < 0, -1.0, 1.0)
    V = V * signs
    return KernelSpectrum(np.maximum(w, 0.0), V, w)


@dataclass(frozen=True)
class EigenvectorTable:
    points: np.ndarray  # (N, dim)
    block: np.ndarray  # "u" or "r" per row
    values: np.ndarray  # eigenvalues of the selected columns
    vectors: np.ndarray  # (N, k)

    def residual_part(self):
        mask = self.block == "r"
        return self.points[mask], self.vectors[mask]


def top_eigenvectors(spectrum, kernel, k):
    if not 1 <= k <= kernel.N:
        raise ShapeError(f"k must be in [1, {kernel.N}]")
    block = np.array(["u"] * kernel.n_u + ["r"] * kernel.n_r)
    return EigenvectorTable(kernel.points, block, spectrum.values[:k], spectrum.vectors[:, :k])


def steepest_gradient_location(x, v):
    """Midpoint of the interval with the largest |dv/dx| (1D, points sorted by x)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    order = np.argsort(x)
    x, v = x[order], v[order]
    g = np.abs(np.diff(v) / np.diff(x))
    i = int(np.argmax(g))
    return 0.5 * (x[i] + x[i + 1])


def decay_prediction(spectrum, targets, t):
    """-exp(-Lambda t) Q^T targets: predicted training error in the eigenbasis.

    Component ``i`` decays like ``exp(-lambda_i t)``. This is a qualitative
    linearized predictor, valid while the kernel stays near its initial value.
    """
    if t < 0:
        raise ValueError("pseudo-time must be non-negative")
    proj = spectrum.vectors.T @ np.asarray(targets, dtype=np.float64)
    return -np.exp(-spectrum.values * t) * proj
