"""Function classes, noise models, and the budgeted noisy evaluation oracle.

The library works over the class of functions that are twice differentiable
at a point of interest ``x0`` and whose second-order Taylor remainder there
is bounded by ``(a/6) * ||x - x0||_q**3``.  Membership in the class cannot be
certified exactly (the class is infinite-dimensional), so ``remainder_violation``
measures the largest observed excess over the remainder bound on a probe set:
zero means membership was not refuted.

Noise models bound the variance of each function evaluation by ``b``; the
default is Gaussian noise that sits exactly at the bound, which is both the
worst case for the variance budget and the model under which the hypothesis
testing machinery in :mod:`zograd.risk` is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._streams import ORACLE, substream
from .errors import BudgetError, InputError, NoiseContractError

# Relative tolerance for exact-equality contract checks throughout the package.
REL_TOL = 1e-9

_Q_ALIASES = {
    1: 1.0, 1.0: 1.0, "1": 1.0,
    2: 2.0, 2.0: 2.0, "2": 2.0,
    math.inf: math.inf, "inf": math.inf, "infinity": math.inf,
}


def normalize_q(q) -> float:
    """Map a norm selector (1, 2, inf, or string form) to a canonical float."""
    try:
        if isinstance(q, str):
            return _Q_ALIASES[q.strip().lower()]
        return _Q_ALIASES[q]
    except (KeyError, TypeError):
        raise InputError(f"unsupported norm selector q={q!r}; expected 1, 2 or inf")


def lq_norm(u: np.ndarray, q: float, axis: int = -1) -> np.ndarray:
    """l_q norm along ``axis`` for q in {1, 2, inf}."""
    a = np.abs(np.asarray(u, dtype=float))
    if q == 1.0:
        return a.sum(axis=axis)
    if q == 2.0:
        return np.sqrt((a * a).sum(axis=axis))
    return a.max(axis=axis)


def _as_point(x, p: int) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (p,):
        raise InputError(f"expected a point of dimension {p}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("query point contains non-finite values")
    return x


@dataclass(frozen=True)
class FunctionClassSpec:
    """Parameters of the function class: remainder coefficient, dimension,
    norm selector, and the point of interest.

    For ``p == 1`` all three norms coincide, so the choice of ``q`` has no
    effect on any result.
    """

    a: float
    p: int
    q: float
    x0: np.ndarray

    def __init__(self, a: float, p: int, q=2, x0=None):
        a = float(a)
        p = int(p)
        if a <= 0:
            raise InputError("remainder coefficient a must be positive")
        if p < 1:
            raise InputError("dimension p must be >= 1")
        qn = normalize_q(q)
        if x0 is None:
            x0 = np.zeros(p)
        x0 = np.asarray(x0, dtype=float).reshape(-1)
        if x0.shape != (p,):
            raise InputError(f"x0 must be a {p}-vector, got shape {x0.shape}")
        x0.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", qn)
        object.__setattr__(self, "x0", x0)

    def remainder_bound(self, u: np.ndarray) -> np.ndarray:
        """(a/6) * ||u||_q^3 for displacements ``u`` from x0."""
        return (self.a / 6.0) * lq_norm(np.atleast_2d(u), self.q) ** 3


@dataclass(frozen=True)
class NoiseSpec:
    """Evaluation-noise model with variance bounded by ``b``.

    Kinds:
      * ``gaussian-constant`` -- Gaussian noise with variance exactly b at
        every point (attains the bound).
      * ``none`` -- noiseless evaluations.
      * ``custom`` -- Gaussian noise with a user-supplied variance function
        sigma2(x); a runtime check rejects sigma2(x) > b at any evaluated
        point (up to relative slack 1e-12).
    """

    kind: str
    b: float = 0.0
    sigma2: Callable[[np.ndarray], float] | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian-constant", "none", "custom"):
            raise InputError(f"unknown noise kind {self.kind!r}")
        if self.b < 0:
            raise InputError("variance bound b must be nonnegative")
        if self.kind == "custom" and self.sigma2 is None:
            raise InputError("custom noise requires a sigma2 callable")

    @classmethod
    def gaussian(cls, b: float) -> "NoiseSpec":
        return cls(kind="gaussian-constant", b=float(b))

    @classmethod
    def none(cls) -> "NoiseSpec":
        return cls(kind="none", b=0.0)

    @classmethod
    def custom(cls, b: float, sigma2: Callable) -> "NoiseSpec":
        return cls(kind="custom", b=float(b), sigma2=sigma2)

    def variance_at(self, points: np.ndarray) -> np.ndarray:
        """Per-point variance for an (m, p) array of query points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        m = points.shape[0]
        if self.kind == "none":
            return np.zeros(m)
        if self.kind == "gaussian-constant":
            return np.full(m, self.b)
        var = np.array([float(self.sigma2(pt)) for pt in points])
        if np.any(var > self.b * (1.0 + 1e-12)):
            worst = float(var.max())
            raise NoiseContractError(
                f"custom sigma2 = {worst} exceeds declared bound b = {self.b}"
            )
        if np.any(var < 0):
            raise NoiseContractError("custom sigma2 returned a negative variance")
        return var


@dataclass
class Oracle:
    """Black-box noisy evaluator of ``f`` with a deterministic sample stream.

    Samples are Gaussian around f(x) with variance given by ``noise``.  For a
    fixed seed and an identical sequence of query points the sample sequence
    is bit-identical across runs.  ``eval_count`` increments by exactly one
    per sample drawn; an optional ``budget`` caps the total.
    """

    f: Callable
    noise: NoiseSpec
    seed: int
    true_gradient: np.ndarray | None = None
    budget: int | None = None
    eval_count: int = 0
    _rng = None
    _stream_path: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.true_gradient is not None:
            self.true_gradient = np.asarray(self.true_gradient, dtype=float).reshape(-1)

    @property
    def rng(self):
        """The oracle's own generator; also used by randomized estimators."""
        if self._rng is None:
            self._rng = substream(self.seed, ORACLE, *self._stream_path)
        return self._rng

    def require(self, n: int) -> None:
        """Raise unless ``n`` more evaluations fit in the budget."""
        if self.budget is not None and self.eval_count + n > self.budget:
            raise BudgetError(
                f"budget {self.budget} cannot cover {n} more evaluations "
                f"(used {self.eval_count})"
            )

    def sample(self, x) -> float:
        """One noisy evaluation Y(x) = f(x) + eta, E[eta] = 0, Var = sigma2(x)."""
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise InputError("query point contains non-finite values")
        self.require(1)
        fx = float(self.f(x))
        if self.noise.kind != "none":
            var = float(self.noise.variance_at(x.reshape(1, -1))[0])
            fx += math.sqrt(var) * float(self.rng.standard_normal())
        self.eval_count += 1
        return fx

    def sample_repeated(self, x, reps: int) -> np.ndarray:
        """``reps`` independent samples at the same point, drawn vectorized."""
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise InputError("query point contains non-finite values")
        self.require(reps)
        fx = float(self.f(x))
        if self.noise.kind == "none":
            out = np.full(reps, fx)
        else:
            var = float(self.noise.variance_at(x.reshape(1, -1))[0])
            out = fx + math.sqrt(var) * self.rng.standard_normal(reps)
        self.eval_count += reps
        return out

    def spawn(self, index: int) -> "Oracle":
        """Value-like clone with an independent stream, for per-worker use.

        Clones start with eval_count = 0; callers aggregate counts at join.
        """
        child = Oracle(
            f=self.f,
            noise=self.noise,
            seed=self.seed,
            true_gradient=self.true_gradient,
            budget=self.budget,
        )
        child._stream_path = self._stream_path + (int(index),)
        return child


def oracle_sample(oracle: Oracle, x) -> float:
    """Draw one noisy evaluation from the oracle (thin wrapper over sample)."""
    return oracle.sample(x)


def remainder_violation(f, grad, hess, spec: FunctionClassSpec, probes) -> float:
    """Largest observed excess of the Taylor remainder over the class bound.

    For each probe x the remainder |f(x) - f(x0) - grad.(x-x0) -
    (1/2)(x-x0).hess.(x-x0)| is compared against (a/6)||x-x0||_q^3.  Returns
    the maximum positive excess over the probe set, clipped at zero; excesses
    below the relative tolerance REL_TOL of the local scale are treated as
    rounding and reported as zero.  A return of 0 means membership in the
    class was not refuted on these probes.

    ``grad`` and ``hess`` are the caller's asserted first and second
    derivatives of f at x0.
    """
    probes = np.asarray(probes, dtype=float)
    if probes.size == 0:
        raise InputError("probe set is empty")
    if spec.p == 1:
        probes = probes.reshape(-1, 1)
    else:
        probes = probes.reshape(-1, spec.p)
    grad = np.asarray(grad, dtype=float).reshape(spec.p)
    hess = np.asarray(hess, dtype=float).reshape(spec.p, spec.p)

    u = probes - spec.x0
    fx = _eval_field(f, probes, spec.p)
    f0 = _eval_field(f, spec.x0.reshape(1, -1), spec.p)[0]
    taylor = f0 + u @ grad + 0.5 * np.einsum("mi,ij,mj->m", u, hess, u)
    remainder = np.abs(fx - taylor)
    bound = spec.remainder_bound(u)
    excess = remainder - bound
    guard = REL_TOL * np.maximum(remainder, bound)
    excess[excess <= guard] = 0.0
    return float(max(excess.max(), 0.0))


def _eval_field(f, points: np.ndarray, p: int) -> np.ndarray:
    """Evaluate an (m, p) batch through f, accepting either the package's
    vectorized convention (arrays of points; plain values when p = 1) or a
    scalar-only callable."""
    if p == 1:
        out = np.asarray(f(points[:, 0]), dtype=float)
    else:
        out = np.asarray(f(points), dtype=float)
    if out.shape == points.shape[:1]:
        return out
    # scalar-only callable: fall back to a per-point loop
    if p == 1:
        return np.array([float(f(x)) for x in points[:, 0]])
    return np.array([float(f(x)) for x in points])


def default_probe_grid(
    spec: FunctionClassSpec, scale: float, points: int = 1001, cloud: int = 20000, seed: int = 0
) -> np.ndarray:
    """Default membership probe set on the box x0 +- 3*scale.

    ``scale`` is the perturbation scale of the experiment at hand (a design's
    delta, or an extremal function's clamp radius).  For p = 1 this is an
    equispaced grid; for p = 2 a full lattice; in higher dimension a lattice
    is infeasible, so axis lines, the diagonal, and a seeded uniform cloud
    are used instead.
    """
    if scale <= 0:
        raise InputError("probe scale must be positive")
    half = 3.0 * scale
    line = np.linspace(-half, half, points)
    if spec.p == 1:
        return (spec.x0[0] + line).reshape(-1, 1)
    if spec.p == 2:
        xx, yy = np.meshgrid(line, line, indexing="ij")
        u = np.column_stack([xx.ravel(), yy.ravel()])
        return spec.x0 + u
    parts = []
    for i in range(spec.p):
        axis = np.zeros((points, spec.p))
        axis[:, i] = line
        parts.append(axis)
    parts.append(np.outer(line, np.ones(spec.p) / math.sqrt(spec.p)))
    rng = substream(seed, ORACLE, 0xA11)
    parts.append(rng.uniform(-half, half, size=(cloud, spec.p)))
    return spec.x0 + np.concatenate(parts, axis=0)
