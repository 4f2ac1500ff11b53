"""Full-batch Adam and L-BFGS over flat parameter vectors.

``fun(x) -> (f, g)`` is the objective used throughout: loss value and its
gradient as a float and a 1-D array.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

CURVATURE_MIN = 1e-10


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n, **kw):
        return cls(np.zeros(n), np.zeros(n), **kw)


def adam_step(state, params, grad):
    """One bias-corrected Adam update; mutates ``state`` and returns new params."""
    grad = np.asarray(grad, dtype=np.float64)
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient in Adam", epoch=state.step)
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    state.m = b1 * state.m + (1 - b1) * grad
    state.v = b2 * state.v + (1 - b2) * grad * grad
    m_hat = state.m / (1 - b1**state.step)
    v_hat = state.v / (1 - b2**state.step)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class LbfgsState:
    history: int = 10
    c1: float = 1e-4
    c2: float = 0.9
    max_trials: int = 25
    pairs: deque = field(default_factory=deque)
    # objective cache at the current iterate
    x: np.ndarray | None = None
    f: float | None = None
    g: np.ndarray | None = None
    n_evals: int = 0

    def push(self, s, y):
        if s @ y > CURVATURE_MIN:
            self.pairs.append((s, y))
            while len(self.pairs) > self.history:
                self.pairs.popleft()

    def reset(self):
        self.pairs.clear()


def two_loop(pairs, g):
    """Search direction -H g from the stored (s, y) pairs."""
    q = g.copy()
    alphas = []
    for s, y in reversed(pairs):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        q -= a * y
        alphas.append((rho, a))
    if pairs:
        s, y = pairs[-1]
        q *= (s @ y) / (y @ y)
    for (s, y), (rho, a) in zip(pairs, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def _cubic_min(a0, f0, d0, a1, f1, d1):
    """Minimizer of the cubic interpolating two points with slopes, or None."""
    d_1 = d0 + d1 - 3 * (f0 - f1) / (a0 - a1)
    rad = d_1 * d_1 - d0 * d1
    if rad < 0:
        return None
    d_2 = np.sign(a1 - a0) * np.sqrt(rad)
    denom = d1 - d0 + 2 * d_2
    if denom == 0:
        return None
    return a1 - (a1 - a0) * (d1 + d_2 - d_1) / denom


class _Trials:
    def __init__(self, fun, x, d, budget):
        self.fun, self.x, self.d, self.left = fun, x, d, budget

    def __call__(self, a):
        self.left -= 1
        f, g = self.fun(self.x + a * self.d)
        dphi = float(g @ self.d) if np.all(np.isfinite(g)) else np.nan
        return float(f), g, dphi


def strong_wolfe(fun, x, f0, g0, d, step0=1.0, c1=1e-4, c2=0.9, max_trials=25):
    """Bracketing line search with cubic-interpolation zoom.

    Returns ``(step, f, g, n_trials)`` or ``None`` if no point satisfying the
    strong Wolfe conditions was found within ``max_trials`` evaluations.
    """
    phi = _Trials(fun, x, d, max_trials)
    dphi0 = float(g0 @ d)
    bad = lambda f: not np.isfinite(f)

    def zoom(lo, hi):
        # lo/hi are (a, f, g, dphi); lo satisfies sufficient decrease
        while phi.left > 0:
            a_lo, f_lo, _, d_lo = lo
            a_hi, f_hi, _, d_hi = hi
            width = a_hi - a_lo
            a = None
            if np.isfinite(f_hi) and np.isfinite(d_hi):
                a = _cubic_min(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
            lo_b, hi_b = sorted((a_lo + 0.1 * width, a_hi - 0.1 * width))
            if a is None or not np.isfinite(a) or not lo_b <= a <= hi_b:
                a = a_lo + 0.5 * width
            if abs(a - a_lo) <= 1e-16 * max(1.0, abs(a_lo)):
                return None
            f, g, dphi = phi(a)
            if bad(f) or f > f0 + c1 * a * dphi0 or f >= f_lo:
                hi = (a, f, g, dphi)
            else:
                if abs(dphi) <= -c2 * dphi0:
                    return a, f, g
                if dphi * (a_hi - a_lo) >= 0:
                    hi = lo
                lo = (a, f, g, dphi)
        return None

    prev = (0.0, f0, g0, dphi0)
    a = step0
    first = True
    while phi.left > 0:
        f, g, dphi = phi(a)
        if bad(f) or bad(dphi) or f > f0 + c1 * a * dphi0 or (not first and f >= prev[1]):
            res = zoom(prev, (a, f, g, dphi))
            break
        if abs(dphi) <= -c2 * dphi0:
            res = (a, f, g)
            break
        if dphi >= 0:
            res = zoom((a, f, g, dphi), prev)
            break
        prev = (a, f, g, dphi)
        a *= 2.0
        first = False
    else:
        res = None
    if res is None:
        return None
    return res[0], res[1], res[2], max_trials - phi.left


def _backtrack(fun, x, f0, g0, d, step0, c1, max_trials):
    dphi0 = float(g0 @ d)
    a = step0
    for k in range(max_trials):
        f, g = fun(x + a * d)
        if np.isfinite(f) and f <= f0 + c1 * a * dphi0:
            return a, f, g, k + 1
        a *= 0.5
    return None


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    step: float
    stalled: bool


def lbfgs_step(state, x, fun):
    """One L-BFGS iteration from ``x``.

    Falls back to steepest descent with backtracking if the quasi-Newton
    direction is not a descent direction or the line search fails. If that
    fails too (or the gradient vanishes) the result is flagged ``stalled`` and
    ``x`` is returned unchanged.
    """
    x = np.asarray(x, dtype=np.float64)
    if state.x is None or state.x.shape != x.shape or not np.array_equal(state.x, x):
        f, g = fun(x)
        state.n_evals += 1
        state.x, state.f, state.g = x.copy(), float(f), np.asarray(g, dtype=np.float64)
    f, g = state.f, state.g
    if not np.isfinite(f):
        raise NumericError("non-finite loss at L-BFGS iterate")
    gnorm = float(np.max(np.abs(g)))
    if gnorm == 0.0:
        return LbfgsResult(x, f, g, 0.0, True)

    found = None
    if state.pairs:
        d = two_loop(list(state.pairs), g)
        if g @ d < 0:
            found = strong_wolfe(fun, x, f, g, d, 1.0, state.c1, state.c2, state.max_trials)
    if found is None:
        state.reset()
        d = -g
        step0 = min(1.0, 1.0 / float(np.sum(np.abs(g))))
        found = strong_wolfe(fun, x, f, g, d, step0, state.c1, state.c2, state.max_trials)
        if found is None:
            found = _backtrack(fun, x, f, g, d, step0, state.c1, state.max_trials)
    if found is None:
        return LbfgsResult(x, f, g, 0.0, True)
    step, f_new, g_new, n = found
    state.n_evals += n
    x_new = x + step * d
    state.push(x_new - x, g_new - g)
    state.x, state.f, state.g = x_new, float(f_new), np.asarray(g_new, dtype=np.float64)
    return LbfgsResult(x_new, float(f_new), state.g, step, False)
