"""Oracle, noise model, and class-membership checks."""

import math

import numpy as np
import pytest

from zograd import (
    BudgetError,
    FunctionClassSpec,
    InputError,
    NoiseContractError,
    NoiseSpec,
    Oracle,
    default_probe_grid,
    f_star_1d,
    oracle_sample,
    remainder_violation,
)


def test_noiseless_oracle_is_identity():
    oracle = Oracle(f=lambda x: 5.0, noise=NoiseSpec.none(), seed=0)
    assert oracle_sample(oracle, 0.3) == 5.0
    assert oracle_sample(oracle, -17.0) == 5.0
    assert oracle.eval_count == 2


def test_gaussian_noise_mean_and_variance():
    # law of large numbers at 1e6 samples: mean within 4 standard errors,
    # sample variance within 1% of the bound
    oracle = Oracle(f=lambda x: float(np.asarray(x) ** 2), noise=NoiseSpec.gaussian(1.0), seed=42)
    samples = oracle.sample_repeated(0.0, 10**6)
    assert oracle.eval_count == 10**6
    assert abs(samples.mean()) <= 4e-3
    assert abs(samples.var(ddof=1) - 1.0) <= 0.01


def test_sample_sequence_reproducible():
    def draw(seed):
        oracle = Oracle(f=lambda x: 0.0, noise=NoiseSpec.gaussian(2.0), seed=seed)
        return [oracle.sample(x) for x in (0.0, 1.0, -2.0, 3.5)]

    assert draw(123) == draw(123)
    assert draw(123) != draw(124)


def test_spawned_oracles_are_independent_and_deterministic():
    base = Oracle(f=lambda x: 0.0, noise=NoiseSpec.gaussian(1.0), seed=5)
    a1 = base.spawn(0).sample(0.0)
    a2 = base.spawn(0).sample(0.0)
    b1 = base.spawn(1).sample(0.0)
    assert a1 == a2
    assert a1 != b1


def test_budget_enforced():
    oracle = Oracle(f=lambda x: 0.0, noise=NoiseSpec.none(), seed=0, budget=2)
    oracle.sample(0.0)
    oracle.sample(0.0)
    with pytest.raises(BudgetError):
        oracle.sample(0.0)


def test_nonfinite_query_rejected():
    oracle = Oracle(f=lambda x: 0.0, noise=NoiseSpec.none(), seed=0)
    with pytest.raises(InputError):
        oracle.sample(math.nan)
    with pytest.raises(InputError):
        oracle.sample(math.inf)


def test_custom_noise_contract():
    ok = NoiseSpec.custom(1.0, lambda x: 0.5)
    oracle = Oracle(f=lambda x: 0.0, noise=ok, seed=0)
    oracle.sample(0.0)

    bad = NoiseSpec.custom(1.0, lambda x: 1.5)
    oracle = Oracle(f=lambda x: 0.0, noise=bad, seed=0)
    with pytest.raises(NoiseContractError):
        oracle.sample(0.0)


def test_remainder_violation_cubic_boundary_case():
    # f(x) = x^3/6 sits exactly on the bound: no violation
    spec = FunctionClassSpec(a=1.0, p=1, q=2, x0=[0.0])
    viol = remainder_violation(
        lambda x: np.asarray(x) ** 3 / 6.0, [0.0], [[0.0]], spec, [1.0, -1.0, 2.0, -2.0]
    )
    assert viol == 0.0


def test_remainder_violation_reports_excess():
    # f(x) = x^3/3 exceeds the bound by 1/3 - 1/6 = 1/6 at x = 1
    spec = FunctionClassSpec(a=1.0, p=1, q=2, x0=[0.0])
    viol = remainder_violation(lambda x: np.asarray(x) ** 3 / 3.0, [0.0], [[0.0]], spec, [1.0])
    assert viol == pytest.approx(1.0 / 6.0, rel=1e-12)


def test_remainder_violation_extremal_function_is_member():
    fs = f_star_1d(1.0, 1.0)
    probes = np.linspace(-3.0, 3.0, 1001)
    viol = remainder_violation(fs, [0.5], [[0.0]], fs.spec, probes)
    assert viol == 0.0


def test_remainder_violation_empty_probe_set():
    spec = FunctionClassSpec(a=1.0, p=1, q=2, x0=[0.0])
    with pytest.raises(InputError):
        remainder_violation(lambda x: x, [1.0], [[0.0]], spec, [])


def test_q_selector_irrelevant_in_one_dimension():
    # all three norms coincide on scalars, so results are identical
    f = lambda x: np.asarray(x) ** 3 / 3.0
    vals = []
    for q in (1, 2, math.inf, "inf"):
        spec = FunctionClassSpec(a=1.0, p=1, q=q, x0=[0.0])
        vals.append(remainder_violation(f, [0.0], [[0.0]], spec, [1.0, 0.5, -2.0]))
    assert vals[0] == vals[1] == vals[2] == vals[3]


def test_spec_validation():
    with pytest.raises(InputError):
        FunctionClassSpec(a=0.0, p=1, q=2, x0=[0.0])
    with pytest.raises(InputError):
        FunctionClassSpec(a=1.0, p=0, q=2, x0=[])
    with pytest.raises(InputError):
        FunctionClassSpec(a=1.0, p=2, q=3, x0=[0.0, 0.0])
    with pytest.raises(InputError):
        FunctionClassSpec(a=1.0, p=2, q=2, x0=[0.0])  # wrong x0 length


def test_default_probe_grid_shapes():
    spec1 = FunctionClassSpec(a=1.0, p=1, q=2, x0=[0.5])
    g1 = default_probe_grid(spec1, 1.0, points=101)
    assert g1.shape == (101, 1)
    assert g1.min() == pytest.approx(0.5 - 3.0)
    spec2 = FunctionClassSpec(a=1.0, p=2, q=2, x0=[0.0, 0.0])
    g2 = default_probe_grid(spec2, 1.0, points=51)
    assert g2.shape == (51 * 51, 2)
    spec4 = FunctionClassSpec(a=1.0, p=4, q=2, x0=np.zeros(4))
    g4 = default_probe_grid(spec4, 1.0, points=51, cloud=100)
    assert g4.shape[1] == 4
    assert g4.shape[0] == 51 * 5 + 100
