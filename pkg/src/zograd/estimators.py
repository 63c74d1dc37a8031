"""Gradient estimators from noisy function evaluations.

All deterministic estimators are *linear designs*: a list of perturbations
delta_j around x0 and weight vectors w_j, with the estimate
sum_j w_j * Y_j(x0 + delta_j).  A design is *moment-matched* when its weights
annihilate constants (sum w_j = 0), reproduce linear functions
(sum w_j delta_j^T = I), and annihilate quadratics (per component i,
sum (w_j)_i delta_j delta_j^T = 0); only then is its worst-case risk finite,
because the function class leaves the value, gradient and Hessian at x0
unconstrained.

Central finite differences (1-d and per-axis multi-d) are moment-matched and,
at the right perturbation size, optimal.  The forward-difference design is
kept as a deliberately non-matched baseline.  The simultaneous-perturbation
estimator replaces the deterministic design with a random one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .core import REL_TOL, Oracle
from .errors import DegenerateError, DistributionContractError, InputError


@dataclass(frozen=True)
class LinearDesign:
    """Design points delta_j and weight vectors w_j of a linear estimator."""

    deltas: np.ndarray   # (n, p)
    weights: np.ndarray  # (n, p)

    def __post_init__(self):
        deltas = np.atleast_1d(np.asarray(self.deltas, dtype=float))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if deltas.ndim == 1:
            deltas = deltas.reshape(-1, 1)
        if weights.ndim == 1:
            weights = weights.reshape(-1, 1)
        if deltas.shape != weights.shape:
            raise InputError(
                f"deltas shape {deltas.shape} != weights shape {weights.shape}"
            )
        if deltas.shape[0] < 1:
            raise InputError("a design needs at least one point")
        deltas.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "deltas", deltas)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.deltas.shape[0]

    @property
    def p(self) -> int:
        return self.deltas.shape[1]

    @property
    def is_same_sign(self) -> bool:
        """True when every weight vector has one sign across its components
        (zeros are neutral)."""
        w = self.weights
        return bool(np.all(np.logical_or(w.min(axis=1) >= 0, w.max(axis=1) <= 0)))

    @property
    def is_moment_matched(self) -> bool:
        return moment_conditions(self).matched


@dataclass(frozen=True)
class MomentReport:
    """Residuals of the three moment conditions and the matched verdict.

    Residuals are raw magnitudes: ||sum w_j||_2, ||sum w_j delta_j^T - I||_F,
    and max_i ||sum_j (w_j)_i delta_j delta_j^T||_F.  The flag compares each
    against REL_TOL times its natural scale.
    """

    weight_residual: float
    jacobian_residual: float
    quadratic_residual: float
    matched: bool


def moment_conditions(design: LinearDesign) -> MomentReport:
    """Evaluate the three moment conditions of a design."""
    d, w = design.deltas, design.weights
    p = design.p

    r1 = float(np.linalg.norm(w.sum(axis=0)))
    s1 = float(np.abs(w).sum())

    jac = w.T @ d  # (p, p): row i is sum_j (w_j)_i delta_j
    r2 = float(np.linalg.norm(jac - np.eye(p)))
    s2 = float(np.abs(w).sum() * np.abs(d).max(initial=0.0)) + math.sqrt(p)

    quads = np.einsum("ji,jk,jl->ikl", w, d, d)  # (p, p, p), axis 0 = component i
    r3 = float(np.sqrt((quads**2).sum(axis=(1, 2))).max())
    s3 = float((np.abs(w).sum(axis=0) * (np.linalg.norm(d, axis=1) ** 2).sum()).max(initial=0.0))

    matched = (
        r1 <= REL_TOL * max(1.0, s1)
        and r2 <= REL_TOL * max(1.0, s2)
        and r3 <= REL_TOL * max(1.0, s3)
    )
    return MomentReport(r1, r2, r3, matched)


def cfd_design_1d(n: int, delta: float) -> LinearDesign:
    """Central finite-difference design: n/2 independent pairs at x0 +- delta
    with weights +-1/(n*delta).  Odd budgets are rejected rather than rounded,
    since silently dropping evaluations would corrupt risk accounting."""
    if n < 2 or n % 2 != 0:
        raise InputError(f"CFD needs an even budget n >= 2, got {n}")
    if delta <= 0:
        raise InputError("delta must be positive")
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    return LinearDesign(deltas=signs * delta, weights=signs / (n * delta))


def cfd_design_multi(n: int, p: int, delta: float) -> LinearDesign:
    """Per-axis CFD: the budget splits into n/p evaluations per axis, each
    axis running the 1-d scheme along +-delta*e_i with weight entries
    +-p/(n*delta).  Moment-matched and same-sign; reduces bit-exactly to
    cfd_design_1d when p = 1."""
    if p < 1:
        raise InputError("p must be >= 1")
    if n < 2 * p or n % (2 * p) != 0:
        raise InputError(f"multi-dim CFD needs n a positive multiple of 2p, got n={n}, p={p}")
    if delta <= 0:
        raise InputError("delta must be positive")
    per_axis = n // p
    deltas = np.zeros((n, p))
    weights = np.zeros((n, p))
    signs = np.where(np.arange(per_axis) % 2 == 0, 1.0, -1.0)
    for i in range(p):
        rows = slice(i * per_axis, (i + 1) * per_axis)
        deltas[rows, i] = signs * delta
        weights[rows, i] = signs * (p / (n * delta))
    return LinearDesign(deltas=deltas, weights=weights)


def forward_difference_design(n: int, delta: float) -> LinearDesign:
    """Forward-difference baseline: n/2 pairs (Y(x0+delta) - Y(x0))/delta,
    averaged.  Not moment-matched (sum w_j delta_j^2 = delta != 0), so its
    worst-case risk over the class is infinite."""
    if n < 2 or n % 2 != 0:
        raise InputError(f"forward differences need an even budget n >= 2, got {n}")
    if delta <= 0:
        raise InputError("delta must be positive")
    deltas = np.where(np.arange(n) % 2 == 0, delta, 0.0)
    w = 2.0 / (n * delta)
    weights = np.where(np.arange(n) % 2 == 0, w, -w)
    return LinearDesign(deltas=deltas, weights=weights)


def optimal_delta(a: float, b: float, n: int, p: int = 1) -> float:
    """Risk-minimizing CFD perturbation size (18*b/a^2)^(1/6) * (n/p)^(-1/6)."""
    if a <= 0:
        raise InputError("a must be positive")
    if n < 1:
        raise InputError("n must be >= 1")
    if p < 1:
        raise InputError("p must be >= 1")
    if b == 0:
        raise DegenerateError(
            "optimal delta degenerates to 0 for noiseless evaluation; "
            "use any small delta directly"
        )
    if b < 0:
        raise InputError("b must be nonnegative")
    if p > 1 and n % p != 0:
        raise InputError(f"budget n={n} must divide across p={p} axes")
    return (18.0 * b / a**2) ** (1.0 / 6.0) * (n / p) ** (-1.0 / 6.0)


def linear_estimate(design: LinearDesign, oracle: Oracle, x0) -> np.ndarray:
    """Run a linear design against the oracle: sum_j w_j * Y_j(x0 + delta_j).

    One fresh independent sample per design point (even for coincident
    points); consumes exactly n evaluations.  Components accumulate with
    compensated summation in design order, so the result is deterministic.
    """
    x0 = np.asarray(x0, dtype=float).reshape(design.p)
    oracle.require(design.n)
    samples = [oracle.sample(x0 + d) for d in design.deltas]
    return np.array(
        [math.fsum(w[i] * y for w, y in zip(design.weights, samples))
         for i in range(design.p)]
    )


@dataclass(frozen=True)
class SPConfig:
    """Simultaneous-perturbation estimator configuration.

    ``n`` evaluations form n/2 independent rounds; each round draws one
    random perturbation direction, evaluates at x0 +- h*direction, and
    divides the centered difference componentwise by the direction.  The
    default distribution is Rademacher (+-1 per coordinate, i.i.d.), which
    is symmetric with components bounded away from zero.
    """

    h: float
    n: int
    distribution: Union[str, Callable] = "rademacher"

    def __post_init__(self):
        if self.h <= 0:
            raise InputError("scaling parameter h must be positive")
        if self.n < 2 or self.n % 2 != 0:
            raise InputError(f"SP needs an even budget n >= 2, got {self.n}")
        if isinstance(self.distribution, str) and self.distribution != "rademacher":
            raise InputError(f"unknown perturbation distribution {self.distribution!r}")

    def draw(self, rng, count: int, p: int) -> np.ndarray:
        """(count, p) perturbation directions; every component must be nonzero."""
        if self.distribution == "rademacher":
            return rng.integers(0, 2, size=(count, p)).astype(float) * 2.0 - 1.0
        draws = np.asarray(self.distribution(rng, (count, p)), dtype=float)
        if draws.shape != (count, p):
            raise InputError("perturbation distribution returned a wrong shape")
        if np.any(draws == 0.0):
            raise DistributionContractError("perturbation produced a zero component")
        return draws


def sp_estimate(config: SPConfig, oracle: Oracle, x0) -> np.ndarray:
    """Simultaneous-perturbation estimate: the average over n/2 rounds of
    (Y(x0 + h*d) - Y(x0 - h*d)) / (2h) * (1/d), componentwise in d.

    Consumes n evaluations and n/2 perturbation draws from the oracle's
    stream, interleaved in round order (draw, then the two evaluations).
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    p = x0.shape[0]
    oracle.require(config.n)
    rounds = config.n // 2
    terms = np.empty((rounds, p))
    for j in range(rounds):
        d = config.draw(oracle.rng, 1, p)[0]
        y_plus = oracle.sample(x0 + config.h * d)
        y_minus = oracle.sample(x0 - config.h * d)
        terms[j] = (y_plus - y_minus) / (2.0 * config.h) / d
    return np.array([math.fsum(terms[:, i]) / rounds for i in range(p)])
