import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlkpp import (DomainError, Field, KernelProfile, SimConfig,
                   build_uniform_grid, certify_positivity_eigen,
                   cosine_mode_rates, decay_identity_residual, dissipation,
                   linearization_matrix, local_linearization_matrix,
                   lyapunov_value, most_unstable_cosine_mode, run,
                   sample_convolution_kernel, spectral_abscissa,
                   sup_distance_to_one, symmetrize_and_normalize)
from nlkpp.diagnostics import Trace


class TestLyapunovValue:
    def test_vanishes_at_one(self, unit_grid):
        assert lyapunov_value(Field.constant(unit_grid, 1.0)) == 0.0

    def test_constant_two(self, unit_grid):
        expected = 2.0 - 1.0 - math.log(2.0)  # H(2) on |domain| = 1
        assert lyapunov_value(Field.constant(unit_grid, 2.0)) == pytest.approx(
            expected, abs=1e-12)

    def test_constant_half(self, unit_grid):
        expected = 0.5 - 1.0 - math.log(0.5)
        assert lyapunov_value(Field.constant(unit_grid, 0.5)) == pytest.approx(
            expected, abs=1e-12)

    def test_rejects_nonpositive(self, unit_grid):
        vals = np.ones(unit_grid.n_nodes)
        vals[3] = 0.0
        with pytest.raises(DomainError):
            lyapunov_value(Field(unit_grid, vals))

    @given(seed=st.integers(0, 2**31))
    @settings(max_examples=30)
    def test_nonnegative_on_positive_fields(self, seed, unit_grid):
        u = np.random.default_rng(seed).uniform(0.05, 5.0, unit_grid.n_nodes)
        v = lyapunov_value(Field(unit_grid, u))
        assert v >= 0.0
        if np.max(np.abs(u - 1)) > 1e-3:
            assert v > 0.0


class TestDissipation:
    def test_zero_at_equilibrium(self, unit_grid, balanced_gaussian):
        d = dissipation(Field.constant(unit_grid, 1.0), balanced_gaussian, 1.0)
        assert d == (0.0, 0.0, 0.0)

    @pytest.mark.parametrize("c", [0.3, 1.7])
    def test_constant_field_collapses_double_sum(self, unit_grid,
                                                 balanced_gaussian, c):
        # doubly balanced on |domain| = 1: sum_ij w_i w_j K_ij = 1
        mu = 2.5
        d = dissipation(Field.constant(unit_grid, c), balanced_gaussian, mu)
        assert d.grad == 0.0
        assert d.kernel_part == pytest.approx(mu * (1 - c) ** 2, rel=1e-10)

    def test_eigen_witness_direction_goes_negative(self, unit_grid,
                                                   balanced_tophat):
        cert = certify_positivity_eigen(balanced_tophat)
        assert cert.verdict == "not_positive"
        eps = 1e-3
        u = Field(unit_grid, 1.0 + eps * cert.violating_direction)
        mu = 4.0
        d = dissipation(u, balanced_tophat, mu)
        assert d.kernel_part == pytest.approx(mu * eps**2 * cert.witness,
                                              rel=1e-8)
        assert d.kernel_part < 0

    def test_nonnegative_for_certified_kernels(self, unit_grid,
                                               balanced_gaussian, rng):
        for _ in range(10):
            u = Field(unit_grid, rng.uniform(0.1, 3.0, unit_grid.n_nodes))
            d = dissipation(u, balanced_gaussian, 1.5)
            assert d.kernel_part >= -1e-9
            assert d.grad >= 0.0

    def test_local_mode(self, unit_grid):
        d = dissipation(Field.constant(unit_grid, 0.5), None, 3.0,
                        local_mode=True)
        assert d.kernel_part == pytest.approx(3.0 * 0.25, rel=1e-12)


class TestDecayIdentity:
    def test_steady_residual_is_zero(self, unit_grid, balanced_gaussian):
        cfg = SimConfig(mu=1.0, dt=1e-2, t_end=0.05, snapshot_every=1)
        _, trace = run(Field.constant(unit_grid, 1.0), unit_grid,
                       balanced_gaussian, cfg)
        assert decay_identity_residual(trace, 0) < 1e-12

    def test_residual_halves_with_dt(self, unit_grid, balanced_gaussian):
        maxres = []
        for dt in (4e-3, 2e-3):
            cfg = SimConfig(mu=1.0, dt=dt, t_end=2.0, snapshot_every=1)
            _, trace = run(Field.constant(unit_grid, 0.2), unit_grid,
                           balanced_gaussian, cfg)
            res = [decay_identity_residual(trace, k)
                   for k in range(len(trace) - 1)]
            maxres.append(max(res))
        ratio = maxres[0] / maxres[1]
        assert 1.7 <= ratio <= 2.3

    def test_requires_per_step_snapshots(self, unit_grid, balanced_gaussian):
        cfg = SimConfig(mu=1.0, dt=1e-3, t_end=0.05, snapshot_every=10)
        _, trace = run(Field.constant(unit_grid, 0.5), unit_grid,
                       balanced_gaussian, cfg)
        with pytest.raises(Exception, match="snapshot"):
            decay_identity_residual(trace, 2)

    def test_index_out_of_range(self, unit_grid, balanced_gaussian):
        cfg = SimConfig(mu=1.0, dt=1e-2, t_end=0.03, snapshot_every=1)
        _, trace = run(Field.constant(unit_grid, 0.5), unit_grid,
                       balanced_gaussian, cfg)
        with pytest.raises(IndexError):
            decay_identity_residual(trace, len(trace) - 1)


class TestLinearization:
    def test_constant_mode_decays_at_mu(self, unit_grid, balanced_gaussian):
        mu = 1.7
        J = linearization_matrix(unit_grid, balanced_gaussian, mu)
        ones = np.ones(unit_grid.n_nodes)
        np.testing.assert_allclose(J @ ones, -mu * ones, atol=1e-9)

    def test_mu_zero_gives_heat_abscissa(self, unit_grid, balanced_gaussian):
        J = linearization_matrix(unit_grid, balanced_gaussian, 0.0)
        assert abs(spectral_abscissa(J)) < 1e-10

    def test_local_analogue_shifts_spectrum(self, unit_grid):
        mu = 2.2
        J = local_linearization_matrix(unit_grid, mu)
        assert spectral_abscissa(J) == pytest.approx(-mu, abs=1e-9)

    def test_gaussian_kernel_is_stable(self):
        grid = build_uniform_grid((0, 1), 64)
        kern = symmetrize_and_normalize(sample_convolution_kernel(
            KernelProfile("gaussian", 0.2), grid))
        J = linearization_matrix(grid, kern, 1.0)
        assert spectral_abscissa(J) < 0

    @pytest.mark.parametrize("mu", [0.5, 1.0, 5.0])
    @pytest.mark.parametrize("family,sigma,ratio", [
        ("gaussian", 0.2, 0.0), ("exponential", 0.15, 0.0),
    ])
    def test_stability_consistency(self, mu, family, sigma, ratio):
        # certified positive + balanced symmetric kernel => u = 1 linearly stable
        grid = build_uniform_grid((0, 1), 96)
        kern = symmetrize_and_normalize(sample_convolution_kernel(
            KernelProfile(family, sigma), grid))
        assert certify_positivity_eigen(kern).verdict == "positive"
        J = linearization_matrix(grid, kern, mu)
        assert spectral_abscissa(J) <= 1e-8


@pytest.fixture(scope="module")
def unstable_setup():
    grid = build_uniform_grid((0, 5), 256)
    kern = symmetrize_and_normalize(sample_convolution_kernel(
        KernelProfile("tophat", 1.0), grid))
    return grid, kern


class TestPatternRegime:
    """A positivity-violating kernel really does destabilize u = 1 once mu is
    large enough; tophat kernels need mu * sigma^2 of roughly 85 or more."""

    def test_abscissa_positive_above_onset(self, unstable_setup):
        grid, kern = unstable_setup
        J = linearization_matrix(grid, kern, 150.0)
        assert spectral_abscissa(J) > 1.0

    def test_perturbation_grows_and_saturates(self, unstable_setup):
        grid, kern = unstable_setup
        mu = 150.0
        J = linearization_matrix(grid, kern, mu)
        k = most_unstable_cosine_mode(grid, J)
        assert cosine_mode_rates(grid, J)[k - 1] > 0
        x = grid.nodes[:, 0]
        u0 = Field(grid, 1.0 + 0.01 * np.cos(k * np.pi * x / 5.0))
        cfg = SimConfig(mu=mu, dt=2e-4, t_end=1.5)
        _, trace = run(u0, grid, kern, cfg)
        sup = trace.column("sup_dist_one")
        assert sup.max() / sup[0] >= 10.0
        assert sup[-1] > 0.1
        assert trace.column("min_u").min() > 0


class TestTrace:
    def test_rows_monotone_and_v_nonnegative(self, unit_grid,
                                             balanced_gaussian, rng):
        cfg = SimConfig(mu=1.0, dt=1e-3, t_end=0.2)
        u0 = Field(unit_grid, rng.uniform(0.5, 1.5, unit_grid.n_nodes))
        _, trace = run(u0, unit_grid, balanced_gaussian, cfg)
        t = trace.column("t")
        assert np.all(np.diff(t) > 0)
        assert np.all(trace.column("V") >= 0)

    def test_csv_round_trip(self, tmp_path, unit_grid, balanced_gaussian):
        cfg = SimConfig(mu=1.0, dt=1e-3, t_end=0.05)
        _, trace = run(Field.constant(unit_grid, 0.4), unit_grid,
                       balanced_gaussian, cfg)
        path = tmp_path / "trace.csv"
        trace.to_csv(path)
        loaded = Trace.from_csv(path)
        np.testing.assert_array_equal(loaded.as_array(), trace.as_array())


class TestSupDistance:
    def test_trivial_values(self, unit_grid):
        assert sup_distance_to_one(Field.constant(unit_grid, 1.0)) == 0.0
        assert sup_distance_to_one(Field.constant(unit_grid, 1.25)) == 0.25
        vals = np.ones(unit_grid.n_nodes)
        vals[5] = 0.9
        assert sup_distance_to_one(Field(unit_grid, vals)) == pytest.approx(0.1)
