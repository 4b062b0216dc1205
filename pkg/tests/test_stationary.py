"""Tests for stationary laws, critical diffusions and the effective-dynamics transition."""

import math

import numpy as np
import pytest
from scipy.special import gamma

from analysis import stationary as st
from numerics import NearCriticalError, NumericalError, PreconditionError, RngStream, SupercriticalError

DELTA, P = 0.1, 11


class TestDensity:

    def test_symmetric_mean_is_zero(self):
        assert abs(st.f1(0.4, 0.0, 1.0)) < 1e-14

    def test_moments_match_direct_integration(self, quadrature):
        sigma, kappa, L_W = 0.3, 0.4, 1.5
        x, w = quadrature.with_half_width(8.0).nodes()
        g = st.density_g(x, sigma, kappa, L_W)
        mean = np.dot(w, x * g) / np.dot(w, g)
        variance = np.dot(w, (x - mean) ** 2 * g) / np.dot(w, g)
        np.testing.assert_allclose(st.g_moments(sigma, kappa, L_W), (mean, variance), rtol=1e-10)

    @pytest.mark.parametrize("sigma", [0.1, 0.5, 1.0, 2.5, 5.0])
    @pytest.mark.parametrize("L_W", [0.5, 1.0, 4.0])
    def test_doubling_nodes_leaves_f1_unchanged(self, quadrature, sigma, L_W):
        finer = quadrature.refined()
        for kappa in (-2.0, -0.7, 0.0, 0.3, 2.0):
            assert abs(st.f1(sigma, kappa, L_W, quadrature) - st.f1(sigma, kappa, L_W, finer)) < 1e-9

    def test_rejects_non_positive_sigma(self):
        with pytest.raises(PreconditionError):
            st.f2(0.0, 0.0, 1.0)


class TestCriticalSigma:

    def test_closed_form_for_unit_interaction(self, sigma_c):
        expected = (2.0 * gamma(0.75) / gamma(0.25)) ** 2
        assert abs(sigma_c - expected) < 1e-10

    @pytest.mark.parametrize("L_W", [0.5, 1.0, 2.0])
    def test_variance_identity(self, L_W):
        sigma_c = st.critical_sigma(L_W)
        assert abs(L_W * st.f2(sigma_c, 0.0, L_W) / sigma_c - 1.0) < 1e-8
        assert abs(st.critical_sigma_raw(L_W) - sigma_c) < 1e-8

    def test_F1_at_critical(self, sigma_c):
        F1, dF1 = st.F1_and_derivative(sigma_c, 1.0)
        assert abs(F1 - 1.0) < 1e-7
        assert dF1 < 0

    @pytest.mark.parametrize("sigma,L_W", [(0.3, 1.0), (0.8, 0.5), (1.2, 2.0)])
    def test_F1_is_slope_of_f1(self, sigma, L_W):
        F1, _ = st.F1_and_derivative(sigma, L_W)
        assert F1 == pytest.approx(L_W / sigma * st.f2(sigma, 0.0, L_W), rel=1e-9)


class TestBranches:

    def test_plus_branch(self):
        solution = st.solve_branch(0.3, 1.0, "plus")
        assert solution.kappa1 > 0
        assert solution.residual < 1e-9
        assert abs(st.f1(0.3, solution.kappa1, 1.0) - solution.kappa1) < 1e-9
        assert solution.kappa2 == pytest.approx(st.f2(0.3, solution.kappa1, 1.0), rel=1e-12)

    def test_minus_is_mirror(self):
        plus = st.solve_branch(0.3, 1.0, "plus")
        minus = st.solve_branch(0.3, 1.0, "minus")
        assert minus.branch == "minus"
        assert minus.kappa1 == -plus.kappa1 and minus.kappa2 == plus.kappa2

    def test_grid_scan_agrees(self):
        roots = st.scan_fixed_points(0.3, 1.0, spacing=1e-4)
        assert len(roots) == 1
        assert abs(roots[0] - st.solve_branch(0.3, 1.0, "plus").kappa1) < 1e-4

    def test_zero_branch_always_exists(self, sigma_c):
        solution = st.solve_branch(2.0 * sigma_c, 1.0, "zero")
        assert solution.kappa1 == 0.0 and solution.kappa2 > 0

    def test_supercritical(self, sigma_c):
        with pytest.raises(SupercriticalError, match="supercritical"):
            st.solve_branch(1.01 * sigma_c, 1.0, "plus")

    def test_near_critical(self, sigma_c):
        with pytest.raises(NearCriticalError):
            st.solve_branch(sigma_c - 1e-7, 1.0, "plus")

    def test_unknown_branch(self):
        with pytest.raises(PreconditionError, match="branch"):
            st.solve_branch(0.3, 1.0, "sideways")

    def test_solution_checks_sign(self):
        with pytest.raises(NumericalError):
            st.StationarySolution(0.3, -0.5, 1.0, "plus")

    def test_branch_table(self, sigma_c):
        table = st.branch_table([0.5 * sigma_c, 1.5 * sigma_c], 1.0)
        assert list(table.branch) == ["zero", "plus", "minus", "zero"]
        assert (table.model == "NL").all()


class TestEffective:

    def test_transition_formula(self, sigma_c):
        formula = st.effective_critical_sigma(sigma_c, DELTA, P, 1.0)
        assert formula == pytest.approx(sigma_c * (1 - 0.1 / 20))
        assert abs(st.g_eff(sigma_c, "zero", DELTA, P, 1.0) - formula) < 1e-8

    def test_solution_counts(self, sigma_c):
        transition = st.effective_critical_sigma(sigma_c, DELTA, P, 1.0)
        above = st.solve_effective(transition + 0.01, DELTA, P, 1.0)
        below = st.solve_effective(transition - 0.01, DELTA, P, 1.0)
        assert [s.branch for s in above] == ["zero"]
        assert [s.branch for s in below] == ["zero", "plus", "minus"]
        for solution in above + below:
            assert solution.model == "Eff"
            assert st.effective_residual(solution, DELTA, P, 1.0) < 1e-8

    def test_effective_law_is_nonlinear_law_at_shifted_sigma(self, sigma_c):
        (zero,) = st.solve_effective(1.2 * sigma_c, DELTA, P, 1.0)
        shift = st.effective_coefficient(DELTA, P, 1.0) * zero.kappa2
        assert zero.nl_sigma == pytest.approx(zero.sigma + shift, rel=1e-10)

    def test_below_supported_range(self, sigma_c):
        with pytest.raises(PreconditionError, match="supported range"):
            st.solve_effective(1e-3 * sigma_c, DELTA, P, 1.0)

    def test_zero_step_reduces_to_nonlinear(self, sigma_c):
        solutions = st.solve_effective(0.5 * sigma_c, 0.0, P, 1.0)
        plus = st.solve_branch(0.5 * sigma_c, 1.0, "plus")
        assert solutions[1].kappa1 == pytest.approx(plus.kappa1, abs=1e-9)

    def test_params_pairing(self):
        with pytest.raises(PreconditionError):
            st.ModelParams(1.0, 0.3, delta=0.1)
        params = st.ModelParams(1.0, 0.3, delta=DELTA, p=P)
        assert params.coefficient == pytest.approx(0.1 / 20)

    def test_c0_estimate(self):
        estimate = st.c0_estimate(DELTA, P, 1.0, grid=8)
        assert estimate.c_lip > 0
        assert estimate.value == pytest.approx(st.effective_coefficient(DELTA, P, 1.0) * estimate.c_lip)
        assert estimate.passed == (estimate.value < estimate.threshold)

    def test_check_smallness(self, sigma_c):
        params = st.ModelParams(1.0, sigma_c, delta=DELTA, p=P)
        estimate = params.check_smallness(grid=8, margin=1e6)
        assert estimate.passed and estimate.threshold == 1e6
        with pytest.raises(PreconditionError, match="too large"):
            params.check_smallness(grid=8, margin=1e-12)
        with pytest.raises(PreconditionError, match="only applies"):
            st.ModelParams(1.0, sigma_c).check_smallness()

    @pytest.mark.slow
    def test_locate_transition(self, sigma_c):
        formula = st.effective_critical_sigma(sigma_c, DELTA, P, 1.0)
        located = st.locate_effective_transition(DELTA, P, 1.0, formula - 0.01, formula + 0.01)
        assert abs(located - formula) < 2e-3

    @pytest.mark.slow
    def test_round_trip_through_nonlinear_branches(self, sigma_c):
        for sigma in np.linspace(0.1 * sigma_c, 0.95 * sigma_c, 10):
            nl = st.solve_branch(sigma, 1.0, "plus")
            sigma_prime = st.g_eff(sigma, "plus", DELTA, P, 1.0)
            plus = st.solve_effective(sigma_prime, DELTA, P, 1.0)[1]
            assert abs(plus.kappa1 - nl.kappa1) < 1e-7
            assert abs(plus.kappa2 - nl.kappa2) < 1e-7


class TestKurtosis:

    def test_gaussian_limit(self):
        assert abs(st.kurtosis_A(0.0) - 3.0) < 1e-10

    def test_slope_at_zero(self):
        h = 1e-3
        slope = (-3 * st.kurtosis_A(0.0) + 4 * st.kurtosis_A(h) - st.kurtosis_A(2 * h)) / (2 * h)
        assert slope == pytest.approx(-24.0, rel=0.05)

    def test_bounded_by_gaussian(self):
        assert all(st.kurtosis_A(b) < 3.0 for b in np.logspace(-3, 1, 50))

    @pytest.mark.parametrize("sigma,L_W", [(0.2, 1.0), (0.5, 0.5), (1.0, 2.0)])
    def test_density_kurtosis_identity(self, sigma, L_W):
        assert st.kurtosis_g(sigma, L_W) == pytest.approx(st.kurtosis_A(st.kurtosis_beta(sigma, L_W)), rel=1e-9)

    def test_third_derivative_is_negative(self, sigma_c):
        assert st.third_kappa_derivative(sigma_c, 1.0) < 0


class TestScaling:

    def test_square_root_growth(self):
        probe = st.sqrt_scaling_probe(1.0, (1e-2, 3e-3, 1e-3, 3e-4))
        assert probe.spread < 0.05
        assert probe.ratios[-1] == pytest.approx(st.sqrt_scaling_constant(1.0), rel=0.05)
        assert list(probe.to_frame().columns) == ["offset", "kappa1", "ratio"]

    def test_offsets_positive(self):
        with pytest.raises(PreconditionError):
            st.sqrt_scaling_probe(1.0, (1e-2, 0.0))


class TestMomentClt:

    def test_exact_fourth_moment(self):
        assert st.moment_clt_exact(100) == pytest.approx(3 - 2 / 100)
        assert st.moment_clt_exact(4, fourth_moment=3.0) == pytest.approx(3.0)

    def test_monte_carlo_check(self):
        table = st.moment_clt_check(100, 200_000, RngStream(21))
        assert list(table.moment) == [1, 2, 3, 4]
        assert table.passed.all()
        assert table.loc[table.moment == 2, "exact"].iloc[0] == pytest.approx(1.0, abs=1e-12)

    def test_needs_integer_batch(self):
        with pytest.raises(PreconditionError):
            st.moment_clt_check(1, 10, RngStream(1))
