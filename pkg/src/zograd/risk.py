"""Closed-form risk bounds and the two-point testing machinery.

Conventions.  Risk means worst-case mean squared error of a gradient
estimate over the function class (remainder coefficient ``a``, dimension
``p``, norm selector ``q``) and all noise with variance at most ``b``, using
a budget of ``n`` evaluations.

The *linear* minimax bounds restrict to linear designs; the plain flavor
holds for all of them, the same-sign flavor for designs whose weight vectors
have one sign across components.  The *general* bound holds over all
estimators (linear or not) and follows from an optimal two-point test: no
procedure can distinguish the pair (f, -f) built from the extremal function
better than the likelihood-ratio test, whose error is controlled by the
Gaussian KL divergence, giving the bound (eps^2/16) * exp(-2 n eps^3 / (9ab))
at gradient gap eps.

For a *specific* moment-matched design, the worst case over the class is
known exactly: the spike adversary drives the bias to
(a/6) * sum_j |w_j| ||delta_j||_q^3 per weight component, and noise at the
variance bound contributes b * sum_j ||w_j||_2^2.  In one dimension this is
a point value; for p > 1 it is an envelope whose ends meet exactly when the
design is same-sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .core import lq_norm, normalize_q
from .errors import InputError
from .estimators import LinearDesign, moment_conditions, optimal_delta

FLAVORS = ("linear-lower", "linear-lower-same-sign", "cfd-upper", "general-lower")

# (3 a^2 b^2 / 16)^(1/3): the n^(-2/3) constant of the linear minimax risk.
_LINEAR_CONST = (3.0 / 16.0) ** (1.0 / 3.0)


@dataclass(frozen=True)
class BoundQuery:
    """A bound request: budget, class parameters, and which bound flavor."""

    n: int
    a: float
    b: float
    p: int = 1
    q: float = 2
    flavor: str = "linear-lower"

    def __post_init__(self):
        if self.n < 1:
            raise InputError("n must be >= 1")
        if self.a <= 0 or self.b <= 0:
            raise InputError("a and b must be positive")
        if self.p < 1:
            raise InputError("p must be >= 1")
        object.__setattr__(self, "q", normalize_q(self.q))
        if self.flavor not in FLAVORS:
            raise InputError(f"unknown flavor {self.flavor!r}; expected one of {FLAVORS}")


def _linear_factor(p: int, q: float, same_sign: bool) -> float:
    """Dimension factor of the linear minimax lower bound.

    Proven combinations only; no interpolation to other q values.
    """
    if p == 1:
        return 1.0
    if q in (1.0, 2.0):
        return float(p) ** (5.0 / 3.0) if same_sign else float(p) ** (4.0 / 3.0)
    if q == math.inf:
        return float(p) if same_sign else float(p) ** (2.0 / 3.0)
    raise InputError(f"unsupported q={q}")


def linear_minimax_lower(query: BoundQuery) -> float:
    """Minimax risk lower bound over linear designs.

    Exact (attained by CFD at the optimal perturbation) for p = 1 and, in
    the same-sign flavor, for q in {1, 2}.
    """
    if query.flavor not in ("linear-lower", "linear-lower-same-sign"):
        raise InputError(f"flavor {query.flavor!r} is not a linear lower bound")
    same_sign = query.flavor == "linear-lower-same-sign"
    factor = _linear_factor(query.p, query.q, same_sign)
    return factor * _LINEAR_CONST * (query.a**2 * query.b**2) ** (1.0 / 3.0) * query.n ** (-2.0 / 3.0)


def cfd_worst_case_mse(n: int, a: float, b: float, p: int = 1, delta: float = None) -> float:
    """Worst-case MSE of the per-axis CFD design at perturbation ``delta``:
    p * [(a^2/36) delta^4 + b p / (n delta^2)].

    At delta = optimal_delta(a, b, n, p) this equals
    p^(5/3) (3 a^2 b^2 / 16)^(1/3) n^(-2/3); exact for p = 1, and for p > 1
    attained by the per-axis spike adversary.
    """
    if p < 1:
        raise InputError("p must be >= 1")
    if n < 2 * p or n % (2 * p) != 0:
        raise InputError(f"CFD needs n a positive multiple of 2p, got n={n}, p={p}")
    if delta is None:
        delta = optimal_delta(a, b, n, p)
    if delta <= 0:
        raise InputError("delta must be positive")
    return p * ((a**2 / 36.0) * delta**4 + b * p / (n * delta**2))


@dataclass(frozen=True)
class WorstCaseRisk:
    """Worst-case risk of a specific design: a point value when ``exact``,
    otherwise a (lower, upper) envelope.  Non-moment-matched designs get
    +inf exactly (constant, linear, or quadratic class members drive their
    bias unbounded)."""

    lower: float
    upper: float
    exact: bool

    @property
    def value(self) -> float:
        if not self.exact:
            raise InputError(
                "worst-case risk is an envelope for this design; use .lower/.upper"
            )
        return self.upper


def _grouped_weight_sums(design: LinearDesign, q: float) -> np.ndarray:
    """Per-component sums T_i = sum over unique points of |combined w_i| *
    ||delta||_q^3.  Coincident design points are grouped first: a single
    class member takes one value per point, so only combined weights can be
    biased against."""
    seen: dict[bytes, int] = {}
    upoints: list[np.ndarray] = []
    uweights: list[np.ndarray] = []
    for d, w in zip(design.deltas, design.weights):
        key = d.tobytes()
        if key in seen:
            uweights[seen[key]] = uweights[seen[key]] + w
        else:
            seen[key] = len(upoints)
            upoints.append(d)
            uweights.append(w.astype(float).copy())
    norms3 = lq_norm(np.asarray(upoints), q) ** 3
    return np.abs(np.asarray(uweights)).T @ norms3


def exact_worst_case_risk_linear(
    design: LinearDesign, a: float, b: float, q=2
) -> WorstCaseRisk:
    """Worst-case MSE of a given linear design over the class.

    Moment-matched designs: bias is driven by the spike adversary, variance
    by noise at the bound, giving (a^2/36) * T_i0^2 + b * sum ||w_j||_2^2 as
    a lower end (i0 the dominant component) and the per-axis sum
    (a^2/36) * sum_i T_i^2 + b * sum ||w_j||_2^2 as the upper end.  The ends
    coincide for p = 1; for p > 1 the upper end is attained (so the envelope
    collapses and is reported exact) when the design is same-sign.
    """
    if a <= 0 or b < 0:
        raise InputError("need a > 0 and b >= 0")
    q = normalize_q(q)
    if not moment_conditions(design).matched:
        return WorstCaseRisk(lower=math.inf, upper=math.inf, exact=True)
    t = _grouped_weight_sums(design, q)
    variance = b * float((design.weights**2).sum())
    bias_coef = a**2 / 36.0
    lower = bias_coef * float(t.max()) ** 2 + variance
    upper = bias_coef * float((t**2).sum()) + variance
    exact = design.p == 1 or design.is_same_sign
    if exact:
        lower = upper
    return WorstCaseRisk(lower=lower, upper=upper, exact=exact)


def general_minimax_lower(n: int, a: float, b: float, p: int = 1, q=2) -> float:
    """Minimax risk lower bound over *all* estimators:
    (1/16) e^(-2/3) (3ab m / n)^(2/3) with m = p^(3/2) for q = 1 and m = 1
    otherwise."""
    if n < 1:
        raise InputError("n must be >= 1")
    if a <= 0 or b <= 0:
        raise InputError("a and b must be positive")
    if p < 1:
        raise InputError("p must be >= 1")
    q = normalize_q(q)
    m = float(p) ** 1.5 if q == 1.0 else 1.0
    return (1.0 / 16.0) * math.exp(-2.0 / 3.0) * (3.0 * a * b * m / n) ** (2.0 / 3.0)


def le_cam_bound(eps: float, n: int, a: float, b: float, p: int = 1, q=2) -> float:
    """Two-point testing bound at gradient gap ``eps``:
    (eps^2/16) * exp(-2 n eps^3 / (9 a b m)), m = p^(3/2) for q = 1 else 1.

    Maximizing over eps (at eps = (3 a b m / n)^(1/3)) reproduces
    general_minimax_lower exactly.
    """
    if eps <= 0:
        raise InputError("eps must be positive")
    if a <= 0 or b <= 0:
        raise InputError("a and b must be positive")
    q = normalize_q(q)
    m = float(p) ** 1.5 if q == 1.0 else 1.0
    return (eps**2 / 16.0) * math.exp(-2.0 * n * eps**3 / (9.0 * a * b * m))


def le_cam_max(n: int, a: float, b: float, p: int = 1, q=2) -> tuple[float, float]:
    """Numerically maximize the Le Cam bound over eps; returns (eps, value).

    This is a cross-check of the closed-form maximizer, so the search is a
    plain bounded scalar optimization, not the analytic formula.
    """
    q = normalize_q(q)
    m = float(p) ** 1.5 if q == 1.0 else 1.0
    scale = (a * b * m / n) ** (1.0 / 3.0)
    # coarse log grid first: the bound underflows to zero far to the right,
    # where a wide bounded search would stall on the flat region
    grid = np.geomspace(scale * 1e-3, scale * 1e3, 2001)
    vals = np.array([le_cam_bound(e, n, a, b, p, q) for e in grid])
    k = int(np.argmax(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(
        lambda e: -le_cam_bound(e, n, a, b, p, q),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": scale * 1e-13},
    )
    return float(res.x), float(-res.fun)


def kl_gaussian(mu1, mu2, b: float) -> float:
    """KL divergence between N(mu1, b*I) and N(mu2, b*I):
    ||mu2 - mu1||_2^2 / (2b)."""
    mu1 = np.asarray(mu1, dtype=float).reshape(-1)
    mu2 = np.asarray(mu2, dtype=float).reshape(-1)
    if mu1.shape != mu2.shape:
        raise InputError(f"mean vectors differ in length: {mu1.shape} vs {mu2.shape}")
    if b <= 0:
        raise InputError("b must be positive")
    diff = mu2 - mu1
    return float(diff @ diff) / (2.0 * b)


class MinIntegral(NamedTuple):
    exact: float
    floor: float


def min_integral_gaussian(mu1, mu2, b: float) -> MinIntegral:
    """Overlap integral min(p1, p2) for two Gaussians with common covariance
    b*I: exactly 2*Phi(-d/2) with d = ||mu2 - mu1||_2 / sqrt(b), together
    with the testing floor (1/2) * exp(-KL) = (1/2) * exp(-d^2/2).

    The exact value is always at least the floor.  Phi is evaluated through
    erfc, accurate to full double precision, which the floor comparison
    requires.
    """
    mu1 = np.asarray(mu1, dtype=float).reshape(-1)
    mu2 = np.asarray(mu2, dtype=float).reshape(-1)
    if mu1.shape != mu2.shape:
        raise InputError(f"mean vectors differ in length: {mu1.shape} vs {mu2.shape}")
    if b <= 0:
        raise InputError("b must be positive")
    d = float(np.linalg.norm(mu2 - mu1)) / math.sqrt(b)
    exact = math.erfc(d / (2.0 * math.sqrt(2.0)))  # = 2 * Phi(-d/2)
    floor = 0.5 * math.exp(-(d**2) / 2.0)
    return MinIntegral(exact=exact, floor=floor)


def bounds_table(n: int, a: float, b: float, p: int = 1, q=2) -> dict[str, float]:
    """All bounds applicable to a query, keyed by stable names.

    Every value is the direct output of the corresponding operation; entries
    whose preconditions fail (CFD needs n divisible by 2p) are omitted.
    """
    q = normalize_q(q)
    table: dict[str, float] = {
        "linear_lower": linear_minimax_lower(BoundQuery(n, a, b, p, q, "linear-lower")),
        "linear_lower_same_sign": linear_minimax_lower(
            BoundQuery(n, a, b, p, q, "linear-lower-same-sign")
        ),
        "general_lower": general_minimax_lower(n, a, b, p, q),
    }
    if n % (2 * p) == 0:
        delta = optimal_delta(a, b, n, p)
        table["optimal_delta"] = delta
        table["cfd_upper"] = cfd_worst_case_mse(n, a, b, p, delta)
    return table
