"""Tests for the particle schemes, batch forces and trajectory runner."""

import math
from collections import Counter

import numpy as np
import pandas as pd
import pytest

from analysis import particle_sim as ips
from analysis import stationary as st
from analysis.verification import MAX_FRACTION_BEYOND_3SE, MAX_Z, batch_force_statistics
from numerics import NonFiniteError, PreconditionError, RngStream


def make_config(N=20, delta=0.01, p=4, sigma=0.5, L_W=1.0, **kwargs):
    return ips.SimConfig(N=N, delta=delta, p=p, sigma=sigma, potentials=ips.double_well(L_W), **kwargs)


class TestPotentials:

    def test_quadratic_flag_is_checked(self):
        with pytest.raises(PreconditionError):
            ips.PotentialPair(lambda x: x, lambda x: x ** 3, lambda x: x ** 6, is_quadratic_W=True, L_W=1.0)

    def test_default_inner_step(self):
        assert make_config(delta=0.2).dt_inner == pytest.approx(0.02)

    def test_negative_sigma_rejected(self):
        with pytest.raises(PreconditionError):
            make_config(sigma=-0.1)


class TestPartition:

    def test_every_index_once(self, stream):
        partition = ips.sample_partition(12, 3, stream)
        assert partition.blocks.shape == (4, 3)
        assert sorted(partition.blocks.ravel()) == list(range(12))

    def test_batch_size_must_divide(self, stream):
        with pytest.raises(PreconditionError, match="divide"):
            ips.sample_partition(10, 3, stream)

    def test_uniform_over_pairings(self, stream):
        draws = 3000
        counts = Counter(ips.sample_partition(4, 2, stream).canonical() for _ in range(draws))
        assert len(counts) == 3
        se = math.sqrt(draws * (1 / 3) * (2 / 3))
        assert all(abs(c - draws / 3) < 5 * se for c in counts.values())


class TestForces:

    def test_fast_and_pairwise_full_force_agree(self, stream):
        ens = ips.ParticleEnsemble(stream.normal(50))
        potentials = ips.double_well(1.7)
        np.testing.assert_allclose(ips.full_force(ens, potentials), ips.full_force(ens, potentials, naive=True),
                                   atol=1e-12)

    def test_fast_and_pairwise_batch_force_agree(self, stream):
        ens = ips.ParticleEnsemble(stream.normal(60))
        partition = ips.sample_partition(60, 6, stream)
        potentials = ips.double_well(0.5)
        np.testing.assert_allclose(ips.batch_force(ens, partition, potentials),
                                   ips.batch_force(ens, partition, potentials, naive=True), atol=1e-12)

    def test_single_batch_is_full_force(self, stream):
        ens = ips.ParticleEnsemble(stream.normal(16))
        partition = ips.BatchPartition(np.arange(16).reshape(1, 16))
        potentials = ips.double_well(1.0)
        np.testing.assert_allclose(ips.batch_force(ens, partition, potentials), ips.full_force(ens, potentials),
                                   atol=1e-12)

    def test_force_variance_generic_path(self, stream):
        ens = ips.ParticleEnsemble(stream.normal(40))
        generic = ips.generic_potentials(lambda x: x ** 3 - x, lambda x: 2.0 * x)
        np.testing.assert_allclose(ips.force_variance(ens, generic),
                                   ips.force_variance(ens, ips.double_well(2.0)), rtol=1e-10)

    def test_law_force_includes_self(self):
        ens = ips.ParticleEnsemble([0.0, 1.0, 2.0])
        np.testing.assert_allclose(ips.law_force(ens, ips.double_well(1.0)), [-1.0, 0.0, 1.0])

    def test_batch_force_variance_limit(self, stream):
        ens = ips.ParticleEnsemble(stream.normal(1000))
        ratio = ips.batch_force_variance(ens, 10, 1.0).mean() / (ens.variance / 9)
        assert ratio == pytest.approx(990 / 998, rel=5e-3)
        np.testing.assert_array_equal(ips.batch_force_variance(ens, 1000, 1.0), 0.0)

    def test_batch_force_statistics(self):
        stream = RngStream(77)
        ens = ips.ParticleEnsemble(stream.spawn(0).normal(200))
        stats = batch_force_statistics(ens, 10, 2000, stream.spawn(1))
        for column in ("z_mean", "z_variance"):
            z = np.abs(stats[column].to_numpy())
            assert z.max() < MAX_Z
            assert np.mean(z > 3.0) <= MAX_FRACTION_BEYOND_3SE

    @pytest.mark.slow
    @pytest.mark.parametrize("p", [2, 10, 50])
    def test_batch_force_identities(self, p):
        stream = RngStream(2024)
        ens = ips.ParticleEnsemble(stream.spawn(0).normal(1000))
        stats = batch_force_statistics(ens, p, 10_000, stream.spawn(p))
        for column in ("z_mean", "z_variance"):
            z = np.abs(stats[column].to_numpy())
            assert z.max() < MAX_Z
            assert np.mean(z > 3.0) <= MAX_FRACTION_BEYOND_3SE


class TestSteps:

    def test_full_step_formula(self, stream):
        cfg = make_config(N=5, p=5, sigma=0.5, delta=0.1)
        ens = ips.ParticleEnsemble([-1.0, -0.5, 0.0, 0.5, 2.0])
        noise = np.array([0.1, -0.2, 0.3, 0.0, 1.0])
        x = ens.positions
        force = x - (x.sum() - x) / 4
        expected = x - 0.1 * (x ** 3 - x + force) + math.sqrt(2 * 0.5 * 0.1) * noise
        np.testing.assert_allclose(ips.step_full(ens, cfg, stream, noise=noise).positions, expected, atol=1e-14)

    def test_rb_with_one_batch_equals_full(self, stream):
        cfg = make_config(N=8, p=8)
        ens = ips.ParticleEnsemble(stream.normal(8))
        noise = stream.normal(8)
        np.testing.assert_allclose(ips.step_rb(ens, cfg, stream, noise=noise).positions,
                                   ips.step_full(ens, cfg, stream, noise=noise).positions, atol=1e-14)

    def test_effective_diffusion(self, stream):
        cfg = make_config(N=30, p=6, sigma=0.4, delta=0.5, L_W=2.0)
        ens = ips.ParticleEnsemble(stream.normal(30))
        expected = math.sqrt(0.8 + 0.5 / 5 * 4.0 * ens.variance)
        assert float(ips.effective_diffusion(ens, cfg)) == pytest.approx(expected, rel=1e-12)

    def test_deterministic_without_noise(self, stream):
        cfg = make_config(sigma=0.0)
        ens = ips.ParticleEnsemble(np.linspace(-1, 1, 20))
        a = ips.step_mean_field_rb(ens, cfg, RngStream(1))
        b = ips.step_mean_field_rb(ens, cfg, RngStream(1))
        np.testing.assert_array_equal(a.positions, b.positions)

    def test_discrete_schemes_need_positive_step(self, stream):
        ens = ips.ParticleEnsemble(np.zeros(20))
        with pytest.raises(PreconditionError):
            ips.step_full(ens, make_config(delta=0.0), stream)

    def test_blow_up_names_step(self, stream):
        ens = ips.ParticleEnsemble(np.full(20, 1e150))
        with pytest.raises(NonFiniteError, match="delta"):
            ips.step_rb(ens, make_config(delta=1.0), stream)

    def test_noise_shape_checked(self, stream):
        with pytest.raises(PreconditionError):
            ips.step_full(ips.ParticleEnsemble(np.zeros(20)), make_config(), stream, noise=np.zeros(3))


class TestInitSpec:

    @pytest.mark.parametrize("text,kind,loc", [
        ("point:1.5", "point", 1.5),
        ("gaussian:0,0.5", "gaussian", 0.0),
        ("two-point:1", "two-point", 1.0),
        ("two-point:1,0.25", "two-point", 1.0),
    ])
    def test_parse(self, text, kind, loc):
        spec = ips.InitSpec.parse(text)
        assert spec.kind == kind and spec.loc == loc
        assert ips.InitSpec.parse(spec.to_text()) == spec

    @pytest.mark.parametrize("text", ["uniform:0,1", "point:", "gaussian:1", "point:abc", "two-point:1,2"])
    def test_bad_specs(self, text):
        with pytest.raises(PreconditionError):
            ips.InitSpec.parse(text)

    def test_two_point_sample(self, stream):
        ens = ips.InitSpec("two-point", loc=2.0, weight=1.0).sample(10, stream)
        np.testing.assert_array_equal(ens.positions, 2.0)


class TestRun:

    def test_columns_and_recording(self):
        trajectory = ips.run("rb", make_config(), 10, ips.InitSpec.parse("gaussian:0,1"), RngStream(4),
                             record_every=5)
        assert list(trajectory.columns) == ["step", "time", "mean", "variance", "diffusion_coefficient"]
        assert list(trajectory.step) == [0, 5, 10]
        assert trajectory.time.iloc[-1] == pytest.approx(0.1)

    def test_reproducible(self):
        init = ips.InitSpec.parse("two-point:1")
        a = ips.run("mean_field_rb", make_config(), 20, init, RngStream(8))
        b = ips.run("mean_field_rb", make_config(), 20, init, RngStream(8))
        pd.testing.assert_frame_equal(a, b)

    @pytest.mark.parametrize("scheme", list(ips.STEPPERS))
    def test_every_scheme_runs(self, scheme):
        trajectory = ips.run(scheme, make_config(), 5, ips.InitSpec.parse("point:0.5"), RngStream(1))
        assert len(trajectory) == 6
        assert np.isfinite(trajectory.variance).all()

    def test_effective_time_uses_inner_step(self):
        trajectory = ips.run("effective", make_config(delta=0.1), 4, ips.InitSpec.parse("point:0"), RngStream(1))
        assert trajectory.time.iloc[-1] == pytest.approx(4 * 0.01)

    def test_unknown_scheme(self):
        with pytest.raises(PreconditionError, match="scheme"):
            ips.run("leapfrog", make_config(), 1, ips.InitSpec.parse("point:0"), RngStream(1))

    def test_time_average(self):
        frame = pd.DataFrame({"variance": np.r_[np.full(100, 10.0), np.full(100, 1.0)]})
        mean, se = ips.time_average(frame, batches=10)
        assert mean == 1.0 and se == 0.0

    @pytest.mark.slow
    def test_effective_ensemble_matches_stationary_variance(self, sigma_c):
        delta, p = 0.1, 11
        sigma = 1.2 * sigma_c
        (zero,) = st.solve_effective(sigma, delta, p, 1.0)
        cfg = ips.SimConfig(N=10_000, delta=delta, p=p, sigma=sigma, potentials=ips.double_well(1.0),
                            dt_inner=1e-3)
        trajectory = ips.run("effective", cfg, 100_000, ips.InitSpec("gaussian", 0.0, math.sqrt(zero.kappa2)),
                             RngStream(13), record_every=10)
        mean, se = ips.time_average(trajectory)
        assert abs(mean - zero.kappa2) < 3 * se

    @pytest.mark.slow
    def test_step_cost_scaling(self):
        stream = RngStream(5)
        sizes = (1000, 2000, 4000)
        rb = [ips.measure_step_time("rb", N, 10, stream) for N in sizes]
        full = [ips.measure_step_time("full", N, 10, stream, naive=True) for N in sizes]
        assert all(b / a < 3 for a, b in zip(rb, rb[1:]))
        assert all(b / a > 3 for a, b in zip(full, full[1:]))
