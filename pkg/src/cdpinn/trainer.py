"""Samples, PINN loss, training runs, FDM correction and seed sweeps."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import fdm, net
from .errors import ConfigError, NumericError, SamplingError, ShapeError
from .optim import AdamState, LbfgsState, adam_step, lbfgs_step
from .problems import Problem1D, Problem2D, corrector_boundary_targets
from .transform import AffineTransform

MODES = ("fdm-correction", "reduced-correction", "2d")
EVAL_POINTS = 1025


@dataclass(frozen=True)
class SampleSet:
    """Boundary points with corrector targets and interior residual points.

    ``c_target`` is ``u_bc - uhat`` at the boundary points and ``shift`` is the
    constant part of the residual at each residual point (``uhat'`` for FDM
    correction, zero otherwise).
    """

    x_u: np.ndarray
    c_target: np.ndarray
    x_r: np.ndarray
    shift: np.ndarray
    epsilon: float
    velocity: np.ndarray
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown sample mode {self.mode!r}")

    @property
    def n_u(self):
        return len(self.x_u)

    @property
    def n_r(self):
        return len(self.x_r)

    @property
    def dim(self):
        return self.x_u.shape[1]

    @property
    def points(self):
        return np.vstack([self.x_u, self.x_r])


def _lattice(res_step):
    step = Fraction(res_step).limit_denominator(1 << 20)
    if step <= 0 or step.numerator != 1:
        raise ConfigError(f"residual step must be 1/n, got {res_step}")
    return step.denominator


def build_samples_fdm(problem, uhat, res_step=Fraction(1, 128)):
    """Residual lattice k*res_step with the mesh nodes of ``uhat`` removed."""
    n_fine = _lattice(res_step)
    n_fdm = len(uhat.nodes) - 1
    if n_fine % n_fdm:
        raise ConfigError(f"mesh with {n_fdm} intervals does not divide the 1/{n_fine} lattice")
    k = np.arange(1, n_fine)
    k = k[k % (n_fine // n_fdm) != 0]
    x_r = k / n_fine
    try:
        slope = uhat.slope_at(x_r)
    except SamplingError:
        raise ConfigError("residual point coincides with a mesh node") from None
    (x0, g0), (x1, g1) = problem.boundary
    x_u = np.array([[x0], [x1]])
    c_target = np.array([g0, g1]) - uhat.evaluate(x_u[:, 0])
    return SampleSet(x_u, c_target, x_r[:, None], slope, problem.epsilon, problem.velocity, "fdm-correction")


def build_samples_reduced(problem, res_step=Fraction(1, 128)):
    n_fine = _lattice(res_step)
    x_r = (np.arange(1, n_fine) / n_fine)[:, None]
    x_u, c_target = corrector_boundary_targets(problem)
    return SampleSet(x_u, c_target, x_r, np.zeros(len(x_r)), problem.epsilon, problem.velocity, "reduced-correction")


def build_samples_2d(problem, n=129):
    """Interior of an n-by-n lattice on [-1,1]^2 plus n points per edge."""
    s = np.linspace(-1.0, 1.0, n)[1:-1]
    xx, yy = np.meshgrid(s, s, indexing="ij")
    x_r = np.column_stack([xx.ravel(), yy.ravel()])
    x_u, c_target = corrector_boundary_targets(problem, n)
    return SampleSet(x_u, c_target, x_r, np.zeros(len(x_r)), problem.epsilon, problem.velocity, "2d")


class PinnLoss:
    """L = mean (c(x_u) - c_target)^2 + mean r(x_r)^2 as a function of flat parameters.

    ``r = -eps * sum_k c_kk + velocity . grad c + shift``, derivatives taken in
    physical coordinates through the affine input map.
    """

    def __init__(self, dims, transform, samples):
        self.dims = tuple(dims)
        self.transform = transform
        self.samples = samples
        if transform.dim != samples.dim or self.dims[0] != samples.dim:
            raise ConfigError("network input width, transform and samples disagree on dimension")
        self._z = transform.apply(samples.points)
        self._dirs = [transform.direction(k) for k in range(samples.dim)]
        self.n_evals = 0
        self._last = None

    def _traces(self, vec):
        return [net.JetTrace((self.dims, vec), self._z, d) for d in self._dirs]

    def _parts(self, traces):
        s = self.samples
        nu = s.n_u
        c_u = traces[0].v[:nu]
        lap = sum(t.d2[nu:] for t in traces)
        adv = sum(w * t.d1[nu:] for w, t in zip(s.velocity, traces))
        r = -s.epsilon * lap + adv + s.shift
        e_u = c_u - s.c_target
        return e_u, r

    def components(self, vec):
        """(L_u, L_r)."""
        if self._last is not None and np.array_equal(self._last[0], vec):
            return self._last[1]
        e_u, r = self._parts(self._traces(vec))
        comps = (float(np.mean(e_u * e_u)), float(np.mean(r * r)))
        return comps

    def residual(self, vec):
        return self._parts(self._traces(vec))[1]

    def __call__(self, vec):
        vec = np.asarray(vec, dtype=np.float64)
        self.n_evals += 1
        s = self.samples
        nu, nr = s.n_u, s.n_r
        try:
            traces = self._traces(vec)
        except NumericError:
            return np.inf, np.full(len(vec), np.nan)
        e_u, r = self._parts(traces)
        l_u = float(np.mean(e_u * e_u))
        l_r = float(np.mean(r * r))
        self._last = (vec.copy(), (l_u, l_r))
        gr = 2.0 * r / nr
        grad = None
        for k, t in enumerate(traces):
            gv = np.zeros(nu + nr)
            if k == 0:
                gv[:nu] = 2.0 * e_u / nu
            gd1 = np.zeros(nu + nr)
            gd1[nu:] = s.velocity[k] * gr
            gd2 = np.zeros(nu + nr)
            gd2[nu:] = -s.epsilon * gr
            g = t.vjp(gv, gd1 if s.velocity[k] != 0 else None, gd2)
            grad = g if grad is None else grad + g
        return l_u + l_r, grad


def pinn_loss(params, transform, samples):
    """Returns ``(L, (L_u, L_r))`` for an :class:`~cdpinn.net.MLPParams`."""
    loss = PinnLoss(params.dims, transform, samples)
    l_u, l_r = loss.components(params.flat())
    return l_u + l_r, (l_u, l_r)


@dataclass(frozen=True)
class Schedule:
    adam_epochs: int = 10000
    lbfgs_epochs: int = 10000
    lr: float = 1e-3
    history: int = 10


@dataclass
class TrainResult:
    params: net.MLPParams
    history: list  # (epoch, L_u, L_r, total)
    stalled: bool = False
    stall_epoch: int | None = None
    adam_final_loss: float | None = None

    @property
    def final_loss(self):
        return self.history[-1][3] if self.history else None


def train(params, transform, samples, schedule):
    """Full-batch Adam then L-BFGS. Loss is recorded once per epoch.

    Adam epochs record the loss at the parameters the step starts from; L-BFGS
    epochs record the loss at the accepted iterate. An L-BFGS stall ends the run.
    """
    loss = PinnLoss(params.dims, transform, samples)
    x = params.flat()
    history = []
    adam = AdamState.zeros(len(x), lr=schedule.lr)
    for epoch in range(schedule.adam_epochs):
        f, g = loss(x)
        if not np.isfinite(f):
            raise NumericError("loss overflow", epoch=epoch)
        l_u, l_r = loss.components(x)
        history.append((epoch, l_u, l_r, f))
        x = adam_step(adam, x, g)
    adam_final = None
    if schedule.adam_epochs:
        l_u, l_r = loss.components(x)
        adam_final = l_u + l_r
    state = LbfgsState(history=schedule.history)
    stalled, stall_epoch = False, None
    for k in range(schedule.lbfgs_epochs):
        res = lbfgs_step(state, x, loss)
        if res.stalled:
            stalled, stall_epoch = True, schedule.adam_epochs + k
            break
        x = res.x
        l_u, l_r = loss.components(x)
        history.append((schedule.adam_epochs + k, l_u, l_r, res.f))
    return TrainResult(net.unflatten(params.dims, x), history, stalled, stall_epoch, adam_final)


def derive_seed(seed, index):
    """64-bit stream key for run ``index`` under master ``seed``."""
    ss = np.random.SeedSequence([int(seed) % 2**64, int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def eval_grid(n=EVAL_POINTS):
    return np.linspace(0.0, 1.0, n)


def l2_distance(x, a, b):
    d = np.asarray(a) - np.asarray(b)
    return float(np.sqrt(np.trapezoid(d * d, x)))


@dataclass
class CorrectionRun:
    nodes: np.ndarray
    iterates: list  # U^0, U^1, ..., U^J at the nodes
    params: list
    histories: list
    max_errors: list
    l2_errors: list
    stalled: list = field(default_factory=list)

    @property
    def final(self):
        return self.iterates[-1]

    @property
    def converged(self):
        """Errors decrease at every iteration."""
        e = self.max_errors
        return all(b < a for a, b in zip(e, e[1:]))


def _errors(problem, nodes, values):
    x = eval_grid()
    approx = np.interp(x, nodes, values)
    return (
        float(np.max(np.abs(values - problem.exact(nodes)))),
        l2_distance(x, approx, problem.exact(x)),
    )


def correct_fdm_iteratively(problem, N, iterations, dims, transform, schedule, seed, res_step=Fraction(1, 128)):
    """Iterated PINN correction of the central FDM solution.

    Iteration ``j`` trains a fresh network ``c^j`` (seeded by ``derive_seed(seed, j)``)
    against the piecewise-linear interpolant of ``U^{j-1}`` and sets
    ``U^j = U^{j-1} + c^j(T(nodes))``.
    """
    if iterations < 1:
        raise ConfigError("need at least one correction iteration")
    sol = fdm.solve_central(problem, N)
    nodes = sol.nodes
    U = sol.values.copy()
    m, l2 = _errors(problem, nodes, U)
    run = CorrectionRun(nodes, [U.copy()], [], [], [m], [l2])
    for j in range(1, iterations + 1):
        uhat = fdm.PiecewiseLinear(nodes, U)
        samples = build_samples_fdm(problem, uhat, res_step)
        p0 = net.init_xavier(dims, derive_seed(seed, j))
        result = train(p0, transform, samples, schedule)
        if not np.isfinite(result.final_loss if result.history else 0.0):
            raise NumericError("correction training diverged", epoch=j)
        c = net.forward(result.params, transform.apply(nodes[:, None]))
        U = U + c
        m, l2 = _errors(problem, nodes, U)
        run.iterates.append(U.copy())
        run.params.append(result.params)
        run.histories.append(result.history)
        run.max_errors.append(m)
        run.l2_errors.append(l2)
        run.stalled.append(result.stalled)
    return run


LABELS = ("accurate", "opposite-flow", "linear")


@dataclass(frozen=True)
class Outcome:
    label: str
    d_exact: float
    d_opposite: float
    d_linear: float


def _trap_weights(x):
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def best_fit_line(x, values):
    """Least-squares line in the same trapezoidal norm used for the distances."""
    w = np.sqrt(_trap_weights(x))
    A = np.column_stack([np.ones_like(x), x]) * w[:, None]
    coef, *_ = np.linalg.lstsq(A, np.asarray(values) * w, rcond=None)
    return coef[0] + coef[1] * x


def reference_shapes(x, problem, approx):
    """Exact solution, its mirror with the layer at the inflow, and the best-fit line of ``approx``."""
    (_, g0), (_, g1) = problem.boundary
    exact = problem.exact(x)
    mirror = problem.exact(1.0 - x)
    m0, m1 = problem.exact(1.0), problem.exact(0.0)
    opposite = g0 + (g1 - g0) * (mirror - m0) / (m1 - m0)
    return exact, opposite, best_fit_line(x, approx)


def classify_outcome(x, approx, problem):
    """Nearest of the three reference shapes in the trapezoidal L2 norm."""
    x = np.asarray(x, dtype=np.float64)
    approx = np.asarray(approx, dtype=np.float64)
    if len(x) < 257:
        raise ConfigError("classification needs at least 257 evaluation points")
    if approx.shape != x.shape:
        raise ShapeError("approximation must be sampled on the evaluation grid")
    dists = [l2_distance(x, approx, ref) for ref in reference_shapes(x, problem, approx)]
    return Outcome(LABELS[int(np.argmin(dists))], *dists)


@dataclass
class ReducedRun:
    seed: int
    result: TrainResult
    x: np.ndarray
    approx: np.ndarray
    outcome: Outcome


def run_reduced(problem, dims, transform, schedule, seed, res_step=Fraction(1, 128)):
    """Train one corrector of the reduced solution and classify it."""
    samples = build_samples_reduced(problem, res_step)
    p0 = net.init_xavier(dims, seed)
    result = train(p0, transform, samples, schedule)
    x = eval_grid()
    approx = problem.reduced(x) + net.forward(result.params, transform.apply(x[:, None]))
    return ReducedRun(seed, result, x, approx, classify_outcome(x, approx, problem))


@dataclass(frozen=True)
class SweepRow:
    seed: int
    outcome: Outcome | None
    final_loss: float | None
    elapsed: float
    error: str | None = None


def _sweep_one(args):
    problem, dims, transform, schedule, seed = args
    t0 = time.perf_counter()
    try:
        run = run_reduced(problem, dims, transform, schedule, seed)
        return SweepRow(seed, run.outcome, run.result.final_loss, time.perf_counter() - t0)
    except Exception as exc:  # one failed seed must not end the sweep
        return SweepRow(seed, None, None, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}")


def seed_sweep(problem, dims, transform, schedule, seeds, workers=1):
    """Independent reduced-correction runs, one per seed, in seed order."""
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ConfigError("a sweep needs at least two seeds")
    jobs = [(problem, tuple(dims), transform, schedule, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(j) for j in jobs]


def sweep_counts(rows):
    counts = {label: 0 for label in LABELS}
    counts["failed"] = 0
    for row in rows:
        counts[row.outcome.label if row.outcome else "failed"] += 1
    return counts


def train_2d(problem, dims, transform, schedule, seed, n=129):
    samples = build_samples_2d(problem, n)
    p0 = net.init_xavier(dims, seed)
    return samples, train(p0, transform, samples, schedule)


def evaluate_2d(problem, params, transform, n=129):
    """Grid coordinates, exact and approximate solutions and the trapezoidal L2 error."""
    s = np.linspace(-1.0, 1.0, n)
    xx, yy = np.meshgrid(s, s, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    approx = (problem.reduced(xx, yy).ravel() + net.forward(params, transform.apply(pts))).reshape(n, n)
    exact = problem.exact(xx, yy)
    d2 = (approx - exact) ** 2
    err = float(np.sqrt(np.trapezoid(np.trapezoid(d2, s, axis=1), s)))
    return xx, yy, exact, approx, err
