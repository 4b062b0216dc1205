"""Tests for the limit drift, its equilibria and the critical inverse temperatures."""

import math

import numpy as np
import pytest

from analysis import mean_field_limit as mfl
from numerics import PreconditionError, RngStream

M_GRID = np.linspace(-1.0, 1.0, 100)


def closed_form_p3(beta, m):
    e = np.exp(-4.0 * beta / 3.0)
    return m * (1.0 - e) - m * ((1.0 + m ** 2) * (1.0 + e) / 2.0 + 1.0 - m ** 2)


class TestClassical:

    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    def test_slope_at_zero(self, beta):
        h = 1e-5
        slope = (mfl.drift_classic(beta, h) - mfl.drift_classic(beta, -h)) / (2 * h)
        assert abs(slope - 2.0 * (beta - 1.0)) < 1e-6
        assert mfl.dm_drift_classic(beta, 0.0) == pytest.approx(2.0 * (beta - 1.0), abs=1e-14)

    def test_critical_beta_is_one(self):
        assert abs(mfl.critical_beta_classic() - 1.0) < 1e-10

    def test_three_equilibria_above_critical(self):
        report = mfl.equilibria(mfl.LimitDrift(2.0), grid_points=2001)
        assert len(report.points) == 3
        negative, zero, positive = report.equilibria
        assert zero.m == 0.0 and not zero.stable
        assert negative.stable and positive.stable
        assert negative.m == pytest.approx(-positive.m, abs=1e-12)


class TestBatchDrift:

    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    def test_p2_closed_form(self, beta):
        np.testing.assert_allclose(mfl.drift_rb(2, beta, M_GRID), -2.0 * M_GRID * math.exp(-beta), atol=1e-12)

    @pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
    def test_p3_closed_form(self, beta):
        np.testing.assert_allclose(mfl.drift_rb(3, beta, M_GRID), closed_form_p3(beta, M_GRID), atol=1e-12)

    def test_p3_nonzero_roots_lie_outside(self):
        lo, hi = mfl.drift_p3_nonzero_equilibria(2.0)
        assert hi > 1.0 and lo == -hi
        assert abs(closed_form_p3(2.0, hi)) < 1e-10

    @pytest.mark.parametrize("p", [2, 3])
    @pytest.mark.parametrize("beta", [0.5, 2.0, 5.0])
    def test_small_batches_have_only_zero(self, p, beta):
        report = mfl.equilibria(mfl.LimitDrift(beta, p), grid_points=2001)
        assert report.points == [0.0]
        assert report.equilibria[0].stable

    def test_three_equilibria_above_batch_critical(self):
        beta = 1.2 * mfl.critical_beta(4)
        report = mfl.equilibria(mfl.LimitDrift(beta, 4), grid_points=2001)
        assert len(report.points) == 3
        negative, zero, positive = report.equilibria
        assert zero.m == 0.0 and not zero.stable
        assert negative.stable and positive.stable
        assert 0.0 < positive.m <= 1.0
        assert negative.m == pytest.approx(-positive.m, abs=1e-12)
        assert report.slope_at_zero > 0
        assert report.to_dict()["equilibria"][1] == {"m": 0.0, "stable": False, "slope": zero.slope}

    def test_odd_and_zero_at_origin(self):
        values = mfl.drift_rb(7, 1.4, M_GRID)
        np.testing.assert_allclose(values, -values[::-1], atol=1e-14)
        assert mfl.drift_rb(7, 1.4, 0.0) == 0.0

    def test_s_sums_are_mirror_images(self):
        s1, s2 = mfl.s_sums(5, 1.0, 0.3)
        t1, t2 = mfl.s_sums(5, 1.0, -0.3)
        assert s1 == pytest.approx(t2) and s2 == pytest.approx(t1)

    def test_slope_at_zero_matches_finite_difference(self):
        h = 1e-6
        fd = (mfl.drift_rb(9, 1.3, h) - mfl.drift_rb(9, 1.3, -h)) / (2 * h)
        assert mfl.dm_drift_rb_at_zero(9, 1.3) == pytest.approx(fd, abs=1e-6)
        assert mfl.g_p_exact(9, 1.3) == pytest.approx(mfl.dm_drift_rb_at_zero(9, 1.3), abs=1e-13)

    def test_magnetization_range_checked(self):
        with pytest.raises(PreconditionError):
            mfl.drift_rb(4, 1.0, 1.5)


class TestCriticalBeta:

    def test_no_transition_for_small_batches(self):
        with pytest.raises(PreconditionError, match="p=3"):
            mfl.critical_beta(3)

    def test_asymptotics(self):
        ps = (16, 64, 256, 1024)
        values = [mfl.critical_beta(p) for p in ps]
        assert all(v > 1.0 for v in values)
        scaled = [math.sqrt(p) * abs(v - mfl.critical_beta_asymptotic(p)) for p, v in zip(ps, values)]
        assert all(b < a for a, b in zip(scaled, scaled[1:]))

    def test_p4_matches_grid_scan(self):
        beta_c = mfl.critical_beta(4)
        betas = np.linspace(0.5, 5.0, 4501)
        slopes = np.array([mfl.dm_drift_rb_at_zero(4, b) for b in betas])
        (crossing,) = np.flatnonzero(np.sign(slopes[:-1]) != np.sign(slopes[1:]))
        assert betas[crossing] <= beta_c <= betas[crossing + 1]

    def test_p4_closed_form(self):
        # slope at 0 is (2 - 6x - 4x^3)/4 with x = exp(-beta/2)
        roots = np.roots([2.0, 0.0, 3.0, -1.0])
        x = roots[np.abs(roots.imag) < 1e-12].real[0]
        assert mfl.critical_beta(4) == pytest.approx(-2.0 * math.log(x), abs=1e-9)

    @pytest.mark.parametrize("beta", [1.5, 2.0])
    def test_asymptotic_slope_tracks_exact(self, beta):
        ps = (64, 256, 1024)
        gaps = [abs(mfl.g_p_exact(p, beta) - mfl.g_p_asymptotic(p, beta)) for p in ps]
        leading = [abs(mfl.g_p_exact(p, beta) - 2.0 * (beta - 1.0)) for p in ps]
        assert all(g < 0.5 * l for g, l in zip(gaps, leading))
        assert all(b < a for a, b in zip(gaps, gaps[1:]))

    def test_root_residual(self):
        beta_c = mfl.critical_beta(16, tol=1e-12)
        assert abs(mfl.g_p_exact(16, beta_c)) < 1e-10

    def test_slope_changes_sign_at_critical_beta(self):
        beta_c = mfl.critical_beta(10)
        assert mfl.LimitDrift(0.99 * beta_c, 10).derivative(0.0) < 0
        assert mfl.LimitDrift(1.01 * beta_c, 10).derivative(0.0) > 0

    def test_monte_carlo_agrees_with_exact(self, stream):
        estimate = mfl.g_p_monte_carlo(16, 1.0, 200_000, stream, chunk_size=50_000)
        assert estimate.within(mfl.g_p_exact(16, 1.0), 4.0)

    @pytest.mark.slow
    @pytest.mark.parametrize("p", [4, 16, 64])
    def test_g_p_negative_at_one(self, p):
        estimate = mfl.g_p_monte_carlo(p, 1.0, 10_000_000, RngStream(p))
        assert estimate.upper(3.0) < 0

    def test_table(self):
        table = mfl.critical_table([3, 4, 16])
        assert list(table.p) == [3, 4, 16]
        assert math.isnan(table.beta_c.iloc[0])
        assert (table.beta_c.iloc[1:] > 1).all()
        with pytest.raises(PreconditionError):
            mfl.critical_table([4], mc_samples=10)


class TestOde:

    def test_relaxes_to_stable_equilibrium(self):
        drift = mfl.LimitDrift(2.0)
        target = max(mfl.equilibria(drift, grid_points=2001).points)
        path = mfl.ode_integrate(drift, 0.5, dt=1e-2, T=30.0)
        assert list(path.columns) == ["t", "m"]
        assert path.t.iloc[-1] == pytest.approx(30.0)
        assert path.m.iloc[-1] == pytest.approx(target, abs=1e-8)

    def test_decays_for_p2(self):
        path = mfl.ode_integrate(mfl.LimitDrift(1.0, 2), 0.8, dt=1e-2, T=20.0)
        expected = 0.8 * math.exp(-2.0 * math.exp(-1.0) * 20.0)
        assert path.m.iloc[-1] == pytest.approx(expected, rel=1e-6)

    def test_bad_step(self):
        with pytest.raises(PreconditionError):
            mfl.ode_integrate(mfl.LimitDrift(1.0), 0.0, dt=0.0)
