"""Closed-form extremal and adversarial functions from the minimax analysis.

Two families live here.  The *extremal* functions realize the inverse modulus
of continuity: among functions in the class with a prescribed gradient norm
at x0, they stay as close to zero as possible, and the two-point hypotheses
used by the general lower bound are exactly the pair (f, -f) built from them.
The *spike* adversaries are the worst-case class members against a fixed
linear design: zero everywhere except at the design points, where they sit
exactly on the remainder bound with signs matched to the design's weights.

Sign conventions: extremal functions use sign(0) := +1, which the clamp makes
vacuous; spike heights follow the sign of the driving weight component, and a
zero weight leaves the point at zero (either choice preserves membership and
the attained risk, since a zero weight contributes no bias).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import FunctionClassSpec, lq_norm, normalize_q
from .errors import InputError


def inverse_modulus(eps: float, a: float, p: int = 1, q=2) -> float:
    """Smallest possible sup-norm separation of a two-point pair whose
    gradient gap at x0 is ``eps``: (2*eps/3)*sqrt(eps/a), times p**(-3/4)
    for the l1 remainder norm."""
    if eps <= 0 or a <= 0:
        raise InputError("eps and a must be positive")
    if p < 1:
        raise InputError("p must be >= 1")
    q = normalize_q(q)
    base = (2.0 * eps / 3.0) * math.sqrt(eps / a)
    if q == 1.0:
        return base * p ** -0.75
    return base


def _sign(v: np.ndarray) -> np.ndarray:
    # sign(0) := +1
    return np.where(np.asarray(v) >= 0, 1.0, -1.0)


@dataclass(frozen=True)
class ExtremalFunction:
    """Odd extremal member of the class with gradient xi at x0, ||xi||_2 = eps/2.

    sup |f| equals inverse_modulus(eps)/2; the negated copy gives the
    two-point pair (f, -f).
    """

    eps: float
    spec: FunctionClassSpec
    xi: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float).reshape(self.spec.p)
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    @property
    def true_gradient(self) -> np.ndarray:
        return self.xi

    def __call__(self, x):
        p, a, q = self.spec.p, self.spec.a, self.spec.q
        if p == 1:
            u = np.asarray(x, dtype=float) - self.spec.x0[0]
            t = np.abs(u)
            val = np.maximum((self.eps / 2.0) * t - (a / 6.0) * t**3, 0.0)
            return _sign(u) * val
        u = np.asarray(x, dtype=float) - self.spec.x0
        norm_q = lq_norm(u, q)
        if q == math.inf:
            lead = u[..., 0]
            slope = self.eps / 2.0
        else:
            lead = u.sum(axis=-1)
            slope = self.eps / (2.0 * math.sqrt(p))
        val = np.maximum(slope * np.abs(lead) - (a / 6.0) * norm_q**3, 0.0)
        return _sign(lead) * val

    def negated(self) -> "_NegatedFunction":
        """The other half of the two-point pair."""
        return _NegatedFunction(self)

    def argmax_direction(self) -> np.ndarray:
        """Unit direction (in displacement coordinates) along which sup |f|
        is attained."""
        p, q = self.spec.p, self.spec.q
        if p == 1 or q == math.inf:
            e = np.zeros(p)
            e[0] = 1.0
            return e
        return np.ones(p) / math.sqrt(p)

    def argmax_t(self) -> float:
        """Euclidean distance along argmax_direction at which sup |f| is
        attained.  Along the unit diagonal the function reduces to
        (eps/2) t - (a/6) c t^3 with c = p^(3/2) for q = 1 and c = 1
        otherwise, so the maximizer sits at sqrt(eps/(a c))."""
        p, a, q = self.spec.p, self.spec.a, self.spec.q
        r = math.sqrt(self.eps / a)
        if p > 1 and q == 1.0:
            return r * p ** -0.75
        return r

    def sup_abs(self) -> float:
        """Closed-form supremum of |f| (half the inverse modulus)."""
        return inverse_modulus(self.eps, self.spec.a, self.spec.p, self.spec.q) / 2.0

    def grid_sup(self, points: int = 100_000) -> float:
        """Cross-check of sup |f| by dense evaluation along the extremal
        segment; the segment is bracketed analytically (the clamp zeroes f
        beyond sqrt(3) times the maximizer distance)."""
        direction = self.argmax_direction()
        t = np.linspace(0.0, math.sqrt(3.0) * self.argmax_t(), points)
        pts = self.spec.x0 + t[:, None] * direction
        vals = self(pts[:, 0]) if self.spec.p == 1 else self(pts)
        return float(np.abs(vals).max())


class _NegatedFunction:
    """-f for an extremal function; keeps the gradient bookkeeping."""

    def __init__(self, base: ExtremalFunction):
        self.base = base
        self.spec = base.spec

    @property
    def true_gradient(self) -> np.ndarray:
        return -self.base.xi

    def __call__(self, x):
        return -self.base(x)


def f_star_1d(eps: float, a: float, x0: float = 0.0) -> ExtremalFunction:
    """One-dimensional extremal function sign(u) * [(eps/2)|u| - (a/6)|u|^3]_+
    in the displacement u = x - x0."""
    if eps <= 0 or a <= 0:
        raise InputError("eps and a must be positive")
    spec = FunctionClassSpec(a=a, p=1, q=2, x0=[x0])
    return ExtremalFunction(eps=float(eps), spec=spec, xi=[eps / 2.0])


def f_star_multi(eps: float, spec: FunctionClassSpec) -> ExtremalFunction:
    """Multi-dimensional extremal function for the given class.

    For q in {1, 2} the gradient spreads equally over all coordinates,
    xi = (eps/(2 sqrt(p)), ..., eps/(2 sqrt(p))); for q = inf it concentrates
    on the first axis, xi = (eps/2, 0, ..., 0).  Other axis choices for
    q = inf give equivalent functions by symmetry.
    """
    if eps <= 0:
        raise InputError("eps must be positive")
    if spec.q in (1.0, 2.0):
        xi = np.full(spec.p, eps / (2.0 * math.sqrt(spec.p)))
    else:
        xi = np.zeros(spec.p)
        xi[0] = eps / 2.0
    return ExtremalFunction(eps=float(eps), spec=spec, xi=xi)


@dataclass(frozen=True)
class SpikeAdversary:
    """Worst-case class member against a fixed design: spikes of height
    (a/6)*||delta_j||_q^3 with chosen signs at the design points, zero
    elsewhere.  Gradient and Hessian at x0 are zero.

    Evaluation is an exact lookup on the spike coordinates (bit-exact float
    match); estimators only ever query design points, so no interpolation
    is involved.
    """

    spec: FunctionClassSpec
    points: np.ndarray   # (m, p) absolute coordinates x0 + delta
    heights: np.ndarray  # (m,)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float).reshape(-1, self.spec.p)
        heights = np.asarray(self.heights, dtype=float).reshape(-1)
        points.setflags(write=False)
        heights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "heights", heights)

    @property
    def true_gradient(self) -> np.ndarray:
        return np.zeros(self.spec.p)

    def _lookup(self, pts: np.ndarray) -> np.ndarray:
        out = np.zeros(pts.shape[0])
        for spike, height in zip(self.points, self.heights):
            out[np.all(pts == spike, axis=1)] = height
        return out

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.spec.p == 1:
            flat = np.atleast_1d(x)
            out = self._lookup(flat.reshape(-1, 1)).reshape(flat.shape)
            return float(out[0]) if x.ndim == 0 else out
        if x.ndim == 1:
            return float(self._lookup(x.reshape(1, -1))[0])
        return self._lookup(x.reshape(-1, self.spec.p)).reshape(x.shape[:-1])


def spike_adversary(design, spec: FunctionClassSpec, component="auto") -> SpikeAdversary:
    """Spike adversary whose signs follow one weight component.

    ``component`` selects the axis i0 whose weight signs drive the spikes;
    "auto" picks the axis maximizing sum_j |(w_j)_i| * ||delta_j||_q^3, which
    is the choice made in the risk lower bound.  Axis indices are 0-based.
    Duplicate design points must carry equal weights (without loss of
    generality in the analysis; anything else is rejected).
    """
    if design.p != spec.p:
        raise InputError(f"design dimension {design.p} != spec dimension {spec.p}")
    _check_duplicates(design)
    norms3 = lq_norm(design.deltas, spec.q) ** 3
    if component == "auto":
        i0 = int(np.argmax(np.abs(design.weights).T @ norms3))
    else:
        i0 = int(component)
        if not 0 <= i0 < spec.p:
            raise InputError(f"component must be in [0, {spec.p}) or 'auto'")
    # a zero weight component contributes no bias either way; the adversary
    # leaves those points at zero (a zero-height spike)
    signs = np.sign(design.weights[:, i0])
    return _build_spikes(design, spec, signs, norms3)


def same_sign_spike_adversary(design, spec: FunctionClassSpec) -> SpikeAdversary:
    """Spike adversary attaining the per-axis worst-case bias simultaneously
    on every axis; only defined for same-sign designs (all components of each
    weight vector share one sign), e.g. the per-axis CFD design."""
    if design.p != spec.p:
        raise InputError(f"design dimension {design.p} != spec dimension {spec.p}")
    if not design.is_same_sign:
        raise InputError("design is not same-sign; the per-axis adversary needs one")
    _check_duplicates(design)
    norms3 = lq_norm(design.deltas, spec.q) ** 3
    signs = np.zeros(design.n)
    for j, w in enumerate(design.weights):
        nz = w[w != 0]
        if nz.size:
            signs[j] = 1.0 if nz[0] > 0 else -1.0
    return _build_spikes(design, spec, signs, norms3)


def _check_duplicates(design) -> None:
    seen: dict[bytes, np.ndarray] = {}
    for d, w in zip(design.deltas, design.weights):
        key = d.tobytes()
        if key in seen and not np.array_equal(seen[key], w):
            raise InputError("duplicate design points carry unequal weights")
        seen[key] = w


def _build_spikes(design, spec, signs, norms3) -> SpikeAdversary:
    heights = (spec.a / 6.0) * norms3 * signs
    points = spec.x0 + design.deltas
    seen: set[bytes] = set()
    upoints, uheights = [], []
    for pt, h in zip(points, heights):
        key = pt.tobytes()
        if key not in seen:
            seen.add(key)
            upoints.append(pt)
            uheights.append(h)
    return SpikeAdversary(spec=spec, points=np.asarray(upoints), heights=np.asarray(uheights))
