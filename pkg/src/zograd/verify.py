"""Monte Carlo risk measurement and brute-force verification oracles.

``mc_mse`` measures the mean squared error of an estimator against a fixed
function with known gradient, with the bias/variance split and a standard
error for the MSE estimate itself.  Replications are processed in fixed-size
blocks, each drawing from its own counter-based stream keyed by
(seed, block index); blocks may fan out across workers and the reduction
runs in block order with compensated summation, so a given (config, seed)
produces a bit-identical report for any worker count.

``brute_force_linear_minimax`` is an independent check of the linear minimax
analysis at small budgets: it searches the design space directly, using the
closed-form worst-case risk of each candidate as the objective.  For n = 2
the three moment conditions eliminate all freedom except a symmetric pair
with one scale parameter, which is scanned exhaustively; an asymmetric
branch is scanned separately to confirm it is dominated (it always is:
asymmetric pairs fail the quadratic moment condition and carry infinite
worst-case risk).  For n in {3, 4} the search is a seeded multistart polish
and should be read as strong evidence, not exhaustion.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy import optimize

from ._streams import MC_BLOCK, fold_seed, substream
from .core import NoiseSpec, _eval_field
from .errors import InputError
from .estimators import (
    LinearDesign,
    SPConfig,
    cfd_design_1d,
    forward_difference_design,
    optimal_delta,
)
from .risk import exact_worst_case_risk_linear

BLOCK = 1 << 14  # replications per stream block; fixed, not tunable


@dataclass(frozen=True)
class RiskReport:
    """Monte Carlo MSE with its bias^2/variance split.

    mse = bias_sq + variance up to accumulation rounding; std_error is the
    sample standard deviation of the squared errors divided by sqrt(reps).
    """

    mse: float
    bias_sq: float
    variance: float
    std_error: float
    reps: int
    seed: int
    evals_consumed: int


def _eval_points(f, pts: np.ndarray, p: int) -> np.ndarray:
    """Evaluate f on an array of points with arbitrary leading shape."""
    lead = pts.shape[:-1]
    flat = pts.reshape(-1, p)
    return _eval_field(f, flat, p).reshape(lead)


def _resolve_gradient(f, grad0, p: int) -> np.ndarray:
    if grad0 is None:
        grad0 = getattr(f, "true_gradient", None)
    if grad0 is None:
        raise InputError(
            "mc_mse needs the true gradient at x0: pass grad0 or use a "
            "function object exposing .true_gradient"
        )
    return np.asarray(grad0, dtype=float).reshape(p)


def mc_mse(
    estimator: Union[LinearDesign, SPConfig],
    f,
    noise: NoiseSpec,
    x0,
    reps: int,
    seed: int,
    grad0=None,
    workers: int = 1,
) -> RiskReport:
    """Empirical mean of ||estimate - grad f(x0)||_2^2 over independent
    replications of the estimator.

    Deterministic for fixed (estimator, noise, x0, reps, seed) regardless of
    ``workers``.  Requires reps >= 100 so the standard error means something.
    """
    if reps < 100:
        raise InputError("reps must be >= 100")
    if isinstance(estimator, LinearDesign):
        p = estimator.p
        x0 = np.asarray(x0, dtype=float).reshape(p)
        g0 = _resolve_gradient(f, grad0, p)
        points = x0 + estimator.deltas
        fvals = _eval_field(f, points, p)
        sd = np.sqrt(noise.variance_at(points))
        if noise.kind == "none":
            est0 = fvals @ estimator.weights
            q0 = float(np.sum((est0 - g0) ** 2))
            return RiskReport(
                mse=q0, bias_sq=q0, variance=0.0, std_error=0.0,
                reps=reps, seed=seed, evals_consumed=reps * estimator.n,
            )

        def block_fn(k: int, m: int):
            gen = substream(seed, MC_BLOCK, k)
            y = fvals + sd * gen.standard_normal((m, estimator.n))
            est = y @ estimator.weights
            return _block_moments(est, g0)

        n_per_rep = estimator.n
    elif isinstance(estimator, SPConfig):
        x0 = np.asarray(x0, dtype=float).reshape(-1)
        p = x0.shape[0]
        g0 = _resolve_gradient(f, grad0, p)
        half = estimator.n // 2
        h = estimator.h

        def block_fn(k: int, m: int):
            gen = substream(seed, MC_BLOCK, k)
            d = estimator.draw(gen, m * half, p).reshape(m, half, p)
            pts_plus = x0 + h * d
            pts_minus = x0 - h * d
            f_plus = _eval_points(f, pts_plus, p)
            f_minus = _eval_points(f, pts_minus, p)
            if noise.kind != "none":
                z = gen.standard_normal((m, half, 2))
                sd_plus = np.sqrt(
                    noise.variance_at(pts_plus.reshape(-1, p)).reshape(m, half)
                )
                sd_minus = np.sqrt(
                    noise.variance_at(pts_minus.reshape(-1, p)).reshape(m, half)
                )
                f_plus = f_plus + sd_plus * z[..., 0]
                f_minus = f_minus + sd_minus * z[..., 1]
            terms = ((f_plus - f_minus) / (2.0 * h))[..., None] / d
            est = terms.sum(axis=1) / half
            return _block_moments(est, g0)

        n_per_rep = estimator.n
    else:
        raise InputError(f"unsupported estimator type {type(estimator).__name__}")

    blocks = [(k, min(BLOCK, reps - k * BLOCK)) for k in range((reps + BLOCK - 1) // BLOCK)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(lambda km: block_fn(*km), blocks))
    else:
        partials = [block_fn(*km) for km in blocks]

    # fixed-order compensated reduction over block partials
    sum_q = math.fsum(pt[0] for pt in partials)
    sum_q2 = math.fsum(pt[1] for pt in partials)
    sum_est = np.array(
        [math.fsum(pt[2][i] for pt in partials) for i in range(p)]
    )
    sum_est2 = math.fsum(pt[3] for pt in partials)

    mse = sum_q / reps
    mean_est = sum_est / reps
    bias_sq = float(np.sum((mean_est - g0) ** 2))
    variance = max(sum_est2 / reps - float(mean_est @ mean_est), 0.0)
    var_q = max(sum_q2 - sum_q**2 / reps, 0.0) / (reps - 1)
    std_error = math.sqrt(var_q / reps)
    return RiskReport(
        mse=mse, bias_sq=bias_sq, variance=variance, std_error=std_error,
        reps=reps, seed=seed, evals_consumed=reps * n_per_rep,
    )


def _block_moments(est: np.ndarray, g0: np.ndarray):
    err = est - g0
    q = np.einsum("mi,mi->m", err, err)
    return (
        float(q.sum()),
        float((q * q).sum()),
        est.sum(axis=0),
        float(np.einsum("mi,mi->", est, est)),
    )


@dataclass(frozen=True)
class BruteForceSearch:
    """Knobs of the design-space search."""

    grid_points: int = 2001
    span: tuple = (0.05, 20.0)  # delta range, in multiples of the optimal delta
    asym_grid: int = 121
    coarse_grid_3: int = 15
    multistarts_4: int = 24
    seed: int = 0


@dataclass(frozen=True)
class BruteForceResult:
    value: float
    design: LinearDesign
    scanned_min: float  # minimum objective over every candidate evaluated
    candidates: int


def brute_force_linear_minimax(
    n: int, a: float, b: float, search: BruteForceSearch | None = None
) -> BruteForceResult:
    """Minimize the exact worst-case risk over 1-d linear designs of budget n.

    Supports n in {2, 3, 4}; larger budgets grow combinatorially and are
    refused.  The objective for every candidate is
    ``exact_worst_case_risk_linear``, so this is an oracle independent of the
    closed-form minimax expressions.
    """
    if n > 4:
        raise InputError("brute force supports n <= 4 only")
    if n < 2:
        raise InputError(
            "no moment-matched design exists for n < 2 (worst-case risk is infinite)"
        )
    if search is None:
        search = BruteForceSearch()
    if n == 2:
        return _brute_force_n2(a, b, search)
    return _brute_force_small(n, a, b, search)


def _brute_force_n2(a: float, b: float, search: BruteForceSearch) -> BruteForceResult:
    ref = optimal_delta(a, b, 2)
    tracker = _MinTracker()

    def sym_objective(delta: float) -> float:
        if delta <= 0:
            return math.inf
        val = exact_worst_case_risk_linear(cfd_design_1d(2, delta), a, b).value
        tracker.offer(val)
        return val

    # symmetric branch: the moment conditions force delta2 = -delta1 and
    # w = +-1/(2 delta), leaving one scale parameter; scan it exhaustively
    grid = np.geomspace(search.span[0] * ref, search.span[1] * ref, search.grid_points)
    vals = np.array([sym_objective(d) for d in grid])
    k = int(np.argmin(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(
        sym_objective, bounds=(lo, hi), method="bounded", options={"xatol": ref * 1e-13}
    )
    best_delta = float(res.x)
    best_val = sym_objective(best_delta)

    # asymmetric branch: pairs satisfying only the first two moment
    # conditions; all of them fail the quadratic condition unless
    # delta2 = -delta1, so their worst-case risk is infinite
    axis = np.linspace(-3.0 * ref, 3.0 * ref, search.asym_grid)
    for d1 in axis:
        for d2 in axis:
            if d1 <= d2 or abs(d1 - d2) < 1e-12 * ref:
                continue
            w1 = 1.0 / (d1 - d2)
            design = LinearDesign(deltas=[d1, d2], weights=[w1, -w1])
            r = exact_worst_case_risk_linear(design, a, b)
            tracker.offer(r.upper)

    design = cfd_design_1d(2, best_delta)
    return BruteForceResult(
        value=best_val, design=design,
        scanned_min=tracker.minimum, candidates=tracker.count,
    )


class _MinTracker:
    def __init__(self):
        self.minimum = math.inf
        self.count = 0

    def offer(self, val: float) -> None:
        self.count += 1
        if val < self.minimum:
            self.minimum = val


def _solved_design(deltas: np.ndarray, weights: np.ndarray) -> LinearDesign:
    return LinearDesign(deltas=deltas.reshape(-1, 1), weights=weights.reshape(-1, 1))


def _brute_force_small(n: int, a: float, b: float, search: BruteForceSearch) -> BruteForceResult:
    """Multistart search for n in {3, 4}: deltas vary freely, weights are
    pinned to the moment conditions (unique for n = 3, a one-parameter
    family for n = 4 whose free direction is minimized numerically)."""
    ref = optimal_delta(a, b, n)
    tracker = _MinTracker()

    def weights_for(deltas: np.ndarray):
        v = np.vstack([np.ones(n), deltas, deltas**2])
        target = np.array([0.0, 1.0, 0.0])
        if n == 3:
            try:
                w = np.linalg.solve(v, target)
            except np.linalg.LinAlgError:
                return None
            if not np.all(np.isfinite(w)):
                return None
            return [w]
        # n = 4: particular solution plus the 1-d null direction
        w_part, *_ = np.linalg.lstsq(v, target, rcond=None)
        if np.linalg.norm(v @ w_part - target) > 1e-9:
            return None
        _, s, vt = np.linalg.svd(v)
        null = vt[-1]
        if s.min() < 1e-12 * s.max():
            return None
        span = 10.0 * (1.0 + np.linalg.norm(w_part))
        ts = np.linspace(-span, span, 41)
        best_t, best_val = 0.0, math.inf
        for t in ts:
            val = _objective_1d(w_part + t * null, deltas, a, b)
            if val < best_val:
                best_t, best_val = t, val
        res = optimize.minimize_scalar(
            lambda t: _objective_1d(w_part + t * null, deltas, a, b),
            bounds=(best_t - span / 20, best_t + span / 20),
            method="bounded", options={"xatol": 1e-12},
        )
        return [w_part + float(res.x) * null]

    def objective(deltas: np.ndarray) -> float:
        if np.unique(deltas).size < n:
            return math.inf
        candidates = weights_for(deltas)
        if not candidates:
            return math.inf
        best = math.inf
        for w in candidates:
            val = exact_worst_case_risk_linear(_solved_design(deltas, w), a, b).upper
            tracker.offer(val)
            best = min(best, val)
        return best

    starts = []
    if n == 4:
        for scale in (0.5, 1.0, 2.0):
            d = optimal_delta(a, b, 4)
            starts.append(np.array([d, -d, d * 1.0001, -d * 1.0001]) * scale)
    else:
        axis = np.linspace(-3.0 * ref, 3.0 * ref, search.coarse_grid_3)
        best_grid, best_val = None, math.inf
        for d1 in axis:
            for d2 in axis:
                for d3 in axis:
                    deltas = np.array([d1, d2, d3])
                    val = objective(deltas)
                    if val < best_val:
                        best_grid, best_val = deltas, val
        starts.append(best_grid)
    rng = substream(search.seed, MC_BLOCK, 0xB0F)
    kmax = search.multistarts_4 if n == 4 else 4
    for _ in range(kmax):
        starts.append(rng.uniform(-3.0 * ref, 3.0 * ref, size=n))

    best_deltas, best_val = None, math.inf
    for start in starts:
        res = optimize.minimize(
            objective, start, method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000},
        )
        if res.fun < best_val:
            best_deltas, best_val = np.asarray(res.x), float(res.fun)

    w = weights_for(best_deltas)[0]
    design = _solved_design(best_deltas, w)
    return BruteForceResult(
        value=best_val, design=design,
        scanned_min=tracker.minimum, candidates=tracker.count,
    )


def _objective_1d(w: np.ndarray, deltas: np.ndarray, a: float, b: float) -> float:
    bias = (np.abs(w) * np.abs(deltas) ** 3).sum()
    return (a**2 / 36.0) * bias**2 + b * float(w @ w)


def ffd_benchmark_mse(n: int, delta: float, b: float) -> float:
    """Closed-form MSE of the forward-difference design on the benchmark
    f(x) = x^2 / 2 with constant-variance noise: exact bias (the design is
    not moment-matched) plus b * sum of squared weights."""
    design = forward_difference_design(n, delta)
    fvals = 0.5 * design.deltas[:, 0] ** 2
    bias = float(fvals @ design.weights[:, 0])
    return bias**2 + b * float((design.weights**2).sum())


def best_ffd_delta(n: int, b: float) -> float:
    """Per-budget best forward-difference step by 1-d search of the
    benchmark MSE."""

    def objective(delta: float) -> float:
        if delta <= 0:
            return math.inf
        return ffd_benchmark_mse(n, delta, b)

    res = optimize.minimize_scalar(
        objective, bounds=(1e-3, 10.0), method="bounded", options={"xatol": 1e-10}
    )
    return float(res.x)


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(risk) against log(n)."""

    slope: float
    intercept: float
    r_squared: float
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "points", tuple((int(n), float(r)) for n, r in self.points))


def rate_fit(points: Sequence[tuple]) -> RateFit:
    """Fit a power law risk ~ C * n^slope through (n, risk) pairs."""
    points = list(points)
    if len(points) < 3:
        raise InputError("rate_fit needs at least 3 points")
    ns = np.array([float(n) for n, _ in points])
    risks = np.array([float(r) for _, r in points])
    if np.any(risks <= 0) or np.any(ns <= 0):
        raise InputError("rate_fit needs positive budgets and risks")
    x, y = np.log(ns), np.log(risks)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid**2).sum())
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(slope=float(slope), intercept=float(intercept),
                   r_squared=r_squared, points=tuple(points))


class BlowupPoint(NamedTuple):
    rho: float
    empirical: float
    analytic: float
    std_error: float


def sp_blowup_curve(
    rho_list: Sequence[float], p: int, n: int, h: float, reps: int, seed: int
) -> list[BlowupPoint]:
    """Risk of the simultaneous-perturbation estimator on the linear ramp
    f(x) = rho * sum(x - x0), noiseless, against the closed form
    2 rho^2 p (p-1) / n.

    The ramp's gradient interacts with the random perturbation: each
    component picks up the other p-1 coordinates' contributions, whose
    variance scales with rho^2, so the worst case over the class is
    unbounded.
    """
    if p < 1:
        raise InputError("p must be >= 1")
    config = SPConfig(h=h, n=n)
    x0 = np.zeros(p)
    out = []
    for idx, rho in enumerate(rho_list):
        rho = float(rho)

        def ramp(pts, _rho=rho):
            pts = np.asarray(pts, dtype=float)
            if p == 1:
                return _rho * (pts - x0[0])
            return _rho * (pts - x0).sum(axis=-1)

        report = mc_mse(
            config, ramp, NoiseSpec.none(), x0, reps,
            seed=fold_seed(seed, idx), grad0=np.full(p, rho),
        )
        analytic = 2.0 * rho**2 * p * (p - 1) / n
        out.append(BlowupPoint(rho=rho, empirical=report.mse,
                               analytic=analytic, std_error=report.std_error))
    return out
