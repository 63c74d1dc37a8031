"""Designs, moment conditions, and the estimating operations."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zograd import (
    BudgetError,
    DegenerateError,
    DistributionContractError,
    InputError,
    LinearDesign,
    NoiseSpec,
    Oracle,
    SPConfig,
    cfd_design_1d,
    cfd_design_multi,
    forward_difference_design,
    linear_estimate,
    moment_conditions,
    optimal_delta,
    sp_estimate,
)


class TestDesignConstructors:
    def test_cfd_1d_n2(self):
        d = cfd_design_1d(2, 1.0)
        np.testing.assert_array_equal(d.deltas.ravel(), [1.0, -1.0])
        np.testing.assert_array_equal(d.weights.ravel(), [0.5, -0.5])

    def test_cfd_1d_n4_weights(self):
        d = cfd_design_1d(4, 2.0)
        np.testing.assert_array_equal(d.weights.ravel(), [1 / 8, -1 / 8, 1 / 8, -1 / 8])

    def test_cfd_rejects_odd_budget(self):
        with pytest.raises(InputError):
            cfd_design_1d(3, 1.0)
        with pytest.raises(InputError):
            cfd_design_1d(0, 1.0)

    def test_cfd_multi_n4_p2(self):
        d = cfd_design_multi(4, 2, 1.0)
        expected_points = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=float)
        np.testing.assert_array_equal(d.deltas, expected_points)
        nz = d.weights[d.weights != 0]
        np.testing.assert_array_equal(np.abs(nz), np.full(4, 0.5))

    def test_cfd_multi_budget_validation(self):
        with pytest.raises(InputError):
            cfd_design_multi(6, 2, 1.0)  # not a multiple of 2p = 4

    def test_cfd_multi_p1_is_bitexact_1d(self):
        a = cfd_design_multi(6, 1, 0.3)
        b = cfd_design_1d(6, 0.3)
        np.testing.assert_array_equal(a.deltas, b.deltas)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_forward_difference_n2(self):
        d = forward_difference_design(2, 1.0)
        np.testing.assert_array_equal(d.deltas.ravel(), [1.0, 0.0])
        np.testing.assert_array_equal(d.weights.ravel(), [1.0, -1.0])

    def test_same_sign_flags(self):
        assert cfd_design_multi(4, 2, 1.0).is_same_sign
        mixed = LinearDesign(deltas=[[1.0, 1.0]], weights=[[1.0, -1.0]])
        assert not mixed.is_same_sign


class TestMomentConditions:
    def test_cfd_is_exactly_matched(self):
        rep = moment_conditions(cfd_design_1d(2, 1.0))
        assert (rep.weight_residual, rep.jacobian_residual, rep.quadratic_residual) == (0, 0, 0)
        assert rep.matched

    def test_cfd_matched_for_general_sizes(self):
        for n, delta in ((6, 0.3), (10, 1.7)):
            assert moment_conditions(cfd_design_1d(n, delta)).matched
        assert moment_conditions(cfd_design_multi(12, 3, 0.9)).matched

    def test_forward_difference_quadratic_residual(self):
        rep = moment_conditions(forward_difference_design(2, 1.0))
        assert rep.quadratic_residual == pytest.approx(1.0, rel=1e-15)
        assert not rep.matched

    def test_zero_weights_jacobian_residual(self):
        rep = moment_conditions(LinearDesign(deltas=[1.0, -1.0], weights=[0.0, 0.0]))
        assert rep.jacobian_residual == pytest.approx(1.0)  # ||0 - I||_F for p=1
        assert not rep.matched


class TestOptimalDelta:
    def test_values(self):
        assert optimal_delta(1.0, 1.0, 64) == pytest.approx(18.0 ** (1 / 6) / 2.0, rel=1e-12)
        assert optimal_delta(1.0, 1.0, 64) == pytest.approx(0.80944, abs=1e-5)
        assert optimal_delta(1.0, 1.0, 2) == pytest.approx(1.4422496, abs=1e-6)

    def test_b_scaling(self):
        r = optimal_delta(1.0, 2.0, 8) / optimal_delta(1.0, 1.0, 8)
        assert r == pytest.approx(2.0 ** (1 / 6), rel=1e-12)

    def test_degenerate_noiseless(self):
        with pytest.raises(DegenerateError):
            optimal_delta(1.0, 0.0, 8)


class TestLinearEstimate:
    def test_exact_on_linear(self):
        oracle = Oracle(f=lambda x: 3.0 * float(x[0]), noise=NoiseSpec.none(), seed=0)
        est = linear_estimate(cfd_design_1d(2, 1.0), oracle, [0.0])
        assert est[0] == 3.0
        assert oracle.eval_count == 2

    def test_even_function_cancels(self):
        oracle = Oracle(f=lambda x: float(x[0]) ** 2, noise=NoiseSpec.none(), seed=0)
        est = linear_estimate(cfd_design_1d(2, 0.5), oracle, [0.0])
        assert est[0] == 0.0

    def test_cubic_bias(self):
        oracle = Oracle(f=lambda x: float(x[0]) ** 3 / 6.0, noise=NoiseSpec.none(), seed=0)
        est = linear_estimate(cfd_design_1d(2, 1.0), oracle, [0.0])
        assert est[0] == pytest.approx(1.0 / 6.0, rel=1e-15)  # bias = a delta^2 / 6

    def test_budget_error_before_consuming(self):
        oracle = Oracle(f=lambda x: 0.0, noise=NoiseSpec.none(), seed=0, budget=1)
        with pytest.raises(BudgetError):
            linear_estimate(cfd_design_1d(2, 1.0), oracle, [0.0])
        assert oracle.eval_count == 0

    def test_forward_difference_first_order_bias(self):
        oracle = Oracle(f=lambda x: 0.5 * float(x[0]) ** 2, noise=NoiseSpec.none(), seed=0)
        for delta in (1.0, 0.25):
            est = linear_estimate(forward_difference_design(2, delta), oracle, [0.0])
            assert est[0] == pytest.approx(delta / 2.0, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    g=st.lists(st.floats(-3, 3), min_size=2, max_size=2),
    h=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    c=st.floats(-5, 5),
)
def test_moment_matched_designs_exact_on_quadratics(g, h, c):
    # noiseless estimate recovers the gradient of any quadratic exactly
    grad = np.array(g)
    hess = np.array([[h[0], h[1]], [h[1], h[2]]])

    def quad(x):
        x = np.asarray(x, dtype=float)
        return c + x @ grad + 0.5 * x @ hess @ x

    oracle = Oracle(f=quad, noise=NoiseSpec.none(), seed=0)
    est = linear_estimate(cfd_design_multi(4, 2, 0.7), oracle, np.zeros(2))
    np.testing.assert_allclose(est, grad, rtol=1e-9, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(c3=st.floats(-1.0, 1.0), delta=st.floats(0.05, 2.0))
def test_cfd_bias_bound_on_class_members(c3, delta):
    # members f = c3 * (a/6) x^3 with |c3| <= 1 keep the CFD error within
    # (a/6) delta^2
    a = 1.0
    oracle = Oracle(f=lambda x: c3 * (a / 6.0) * float(x[0]) ** 3,
                    noise=NoiseSpec.none(), seed=0)
    est = linear_estimate(cfd_design_1d(2, delta), oracle, [0.0])
    assert abs(est[0] - 0.0) <= (a / 6.0) * delta**2 + 1e-12


def test_cfd_variance_attains_bound():
    from zograd import mc_mse

    n, delta, b = 8, 0.9, 1.0
    design = cfd_design_1d(n, delta)
    rep = mc_mse(design, lambda x: np.zeros(np.shape(x)), NoiseSpec.gaussian(b),
                 [0.0], 100_000, seed=21, grad0=[0.0])
    target = b / (n * delta**2)
    # sample variance of a Gaussian mean-zero estimate: relative 3 sigma band
    assert abs(rep.variance / target - 1.0) <= 3.0 * math.sqrt(2.0 / rep.reps)


class TestSPEstimate:
    def test_constant_function_gives_zero(self):
        oracle = Oracle(f=lambda x: 4.2, noise=NoiseSpec.none(), seed=3)
        est = sp_estimate(SPConfig(h=0.5, n=6), oracle, np.zeros(3))
        np.testing.assert_array_equal(est, np.zeros(3))
        assert oracle.eval_count == 6

    def test_unbiased_on_linear(self):
        # Monte Carlo mean of the SP estimate matches the gradient within 4
        # standard errors (component variance rho^2 (p-1) / (n/2))
        rho, p, n, reps = 1.0, 3, 2, 20_000
        grad = np.full(p, rho)
        total = np.zeros(p)
        oracle = Oracle(f=lambda x: rho * float(np.sum(x)), noise=NoiseSpec.none(), seed=9)
        for _ in range(reps):
            total += sp_estimate(SPConfig(h=1.0, n=n), oracle, np.zeros(p))
        mean = total / reps
        se = math.sqrt(rho**2 * (p - 1) / (n / 2) / reps)
        assert np.all(np.abs(mean - grad) <= 4.0 * se)

    def test_odd_budget_rejected(self):
        with pytest.raises(InputError):
            SPConfig(h=1.0, n=3)

    def test_zero_perturbation_rejected(self):
        bad = SPConfig(h=1.0, n=2, distribution=lambda rng, size: np.zeros(size))
        oracle = Oracle(f=lambda x: 0.0, noise=NoiseSpec.none(), seed=0)
        with pytest.raises(DistributionContractError):
            sp_estimate(bad, oracle, np.zeros(2))

    def test_deterministic_per_seed(self):
        def run(seed):
            oracle = Oracle(f=lambda x: float(np.sum(x)), noise=NoiseSpec.gaussian(1.0), seed=seed)
            return sp_estimate(SPConfig(h=1.0, n=4), oracle, np.zeros(2))

        np.testing.assert_array_equal(run(5), run(5))
        assert not np.array_equal(run(5), run(6))
