import math

import numpy as np
import pytest
from scipy.signal import welch

from ccdlab.analysis import FitModel, fit
from ccdlab.ensemble import ensemble_rabi
from ccdlab.evolution import TimeGrid, evolve, population0
from ccdlab.gbe import rates_single_resonant
from ccdlab.model import ConfigError, DriveConfig, Frame, InhomogeneityModel, NoisePSDSet, QubitState, StaticGaussian
from ccdlab.stochastic import (
    OU,
    NoiseTrajectorySpec,
    WhiteBandLimited,
    decay_rate_from_samples,
    mc_decay_rate,
    mc_samples,
    mc_signal,
    ou_trajectory,
    pairwise_mean,
    realizations,
)

from conftest import MHZ

PLUS_X = QubitState.from_bloch((1, 0, 0))
LOCK = DriveConfig(Omega=1 * MHZ, modulation="none")


class TestOU:
    def test_zero_variance(self):
        assert not ou_trajectory(NoiseTrajectorySpec(OU(0.0, 1.0), "xi_z"), 0.1, 100).any()

    def test_empty(self):
        assert ou_trajectory(NoiseTrajectorySpec(OU(1.0, 1.0), "xi_z"), 0.1, 0).size == 0

    def test_mean_is_zero(self):
        x = ou_trajectory(NoiseTrajectorySpec(OU(1.0, 1.0), "xi_z", seed=11), 5.0, 10 ** 6)
        assert abs(x.mean()) < 4 / math.sqrt(10 ** 6)

    def test_variance_and_correlation(self):
        x = ou_trajectory(NoiseTrajectorySpec(OU(4.0, 1.0), "xi_z", seed=3), 1.0, 10 ** 5)
        assert x.var() == pytest.approx(4.0, rel=0.02)
        y = ou_trajectory(NoiseTrajectorySpec(OU(4.0, 1.0), "xi_z", seed=4), 0.1, 10 ** 6)
        lag = 10
        c = np.mean(y[:-lag] * y[lag:])
        assert c == pytest.approx(4.0 / math.e, rel=0.05)

    def test_periodogram(self):
        var, tau = 2.0, 1e-6
        dt = tau / 20
        x = ou_trajectory(NoiseTrajectorySpec(OU(var, tau), "xi_z", seed=5), dt, 2 ** 20)
        # ~2000 averaged segments; no per-segment detrending, which would bias the lowest bins
        f, p = welch(x, fs=1 / dt, nperseg=2 ** 10, detrend=False)
        nu = 2 * np.pi * f
        band = (nu >= 0.1 / tau) & (nu <= 5 / tau)
        # welch gives a one-sided density per Hz, i.e. twice the two-sided angular PSD
        np.testing.assert_allclose(p[band] / 2, OU(var, tau).psd()(nu[band]), rtol=0.1)

    def test_white_band_limited(self):
        src = WhiteBandLimited(level=3.0, cutoff=1e7)
        assert src.psd()(0.0) == pytest.approx(3.0)
        assert src.psd()(1e7) == pytest.approx(1.5)

    def test_invalid(self):
        with pytest.raises(ConfigError):
            OU(1.0, 0.0)
        with pytest.raises(ConfigError):
            ou_trajectory(NoiseTrajectorySpec(OU(1.0, 1.0), "xi_z"), 0.0, 3)
        with pytest.raises(ValueError):
            NoiseTrajectorySpec(OU(1.0, 1.0), "xi_q")


class TestRealizations:
    def test_static_gaussian_unbiased(self):
        n = 10 ** 5
        noise = realizations([NoiseTrajectorySpec(StaticGaussian(1.0), "xi_z")], 1.0, 1, range(n), 0)
        draws = noise["xi_z"][0]
        assert abs(draws.mean()) < 4 / math.sqrt(n)
        assert draws.std() == pytest.approx(1.0, rel=0.02)

    def test_duplicate_target(self):
        specs = [NoiseTrajectorySpec(OU(1.0, 1.0), "xi_z", 1), NoiseTrajectorySpec(OU(2.0, 1.0), "xi_z", 2)]
        with pytest.raises(ConfigError):
            realizations(specs, 0.1, 10, range(2), 0)

    def test_distinct_kinds_add_up(self):
        specs = [NoiseTrajectorySpec(OU(1.0, 1.0), "xi_z", 1), NoiseTrajectorySpec(StaticGaussian(1.0), "xi_z", 2)]
        both = realizations(specs, 0.1, 10, range(3), 0)["xi_z"]
        one = realizations(specs[:1], 0.1, 10, range(3), 0)["xi_z"]
        offset = both - one
        assert np.ptp(offset, axis=0).max() < 1e-14
        assert np.ptp(offset[0]) > 0

    def test_trajectory_streams_are_independent_of_batching(self):
        specs = [NoiseTrajectorySpec(OU(1.0, 1.0), "xi_z", 9)]
        whole = realizations(specs, 0.1, 50, range(6), 42)["xi_z"]
        part = realizations(specs, 0.1, 50, range(3, 6), 42)["xi_z"]
        np.testing.assert_array_equal(whole[:, 3:], part)


class TestMonteCarlo:
    specs = [NoiseTrajectorySpec(OU((0.15 * MHZ) ** 2, 0.1e-6), "xi_z", 1)]
    grid = TimeGrid(0, 4e-6, 81)

    def test_without_noise_is_deterministic_evolution(self):
        cfg = DriveConfig.resonant_ccd(7.5 * MHZ, 1 * MHZ)
        mean, err = mc_signal(cfg, [], PLUS_X, self.grid, 10, 0)
        np.testing.assert_array_equal(mean, population0(evolve(cfg, PLUS_X, self.grid)))
        assert not err.any()

    def test_bitwise_reproducible_across_threads_and_batches(self):
        a = mc_signal(LOCK, self.specs, PLUS_X, self.grid, 30, 5, threads=1)
        b = mc_signal(LOCK, self.specs, PLUS_X, self.grid, 30, 5, threads=3, batch_size=7)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])
        c = mc_signal(LOCK, self.specs, PLUS_X, self.grid, 30, 6, threads=1)
        assert not np.array_equal(a[0], c[0])

    def test_pairwise_mean(self):
        x = np.random.default_rng(0).normal(size=(37, 5))
        np.testing.assert_allclose(pairwise_mean(x), x.mean(axis=0), rtol=1e-13)

    def test_observable_and_frame_options(self):
        s = mc_samples(LOCK, self.specs, PLUS_X, self.grid, 4, 0, observable=(1, 0, 0))
        assert s.shape == (4, 81) and np.all(s <= 1 + 1e-12)
        with pytest.raises(ConfigError):
            mc_samples(LOCK, self.specs, PLUS_X, self.grid, 4, 0, observable="p1")
        with pytest.raises(ConfigError):
            mc_samples(LOCK, self.specs, PLUS_X, self.grid, 4, 0, frame=Frame.LAB)

    def test_zero_noise_rate(self):
        rate, half = mc_decay_rate(LOCK, [], PLUS_X, self.grid, 10, 0, observable=(1, 0, 0))
        assert rate == 0.0 and abs(rate) <= half + 1e-12

    def test_static_detuning_matches_quadrature(self):
        # detuning enters the frame-1 Hamiltonian as -delta/2 sz, so xi_z = -delta/2
        sigma_w = 0.32 * MHZ
        Om = 0.7 * MHZ
        grid = TimeGrid(0, 6e-6, 241)
        specs = [NoiseTrajectorySpec(StaticGaussian(sigma_w / 2), "xi_z", 1)]
        mean, err = mc_signal(DriveConfig(Omega=Om, modulation="none"), specs, QubitState(1, 0), grid, 4000, 3)
        inh = InhomogeneityModel.single_sublevel(sigma_Omega_rel=0.0, sigma_omega=sigma_w, tau0=math.inf)
        osc = ensemble_rabi(Om, 0.0, inh, grid, standard=True)
        expected = 1 - osc[0] + osc
        z = np.abs(mean - expected) / err.clip(1e-12)
        assert np.mean(z <= 3) >= 0.99
        t = grid.times
        tau_mc = fit(t, mean, FitModel.MULTI, hints={"omegas": [Om]}).params["tau1"]
        tau_q = fit(t, expected, FitModel.MULTI, hints={"omegas": [Om]}).params["tau1"]
        assert tau_mc == pytest.approx(tau_q, rel=0.05)


@pytest.mark.slow
class TestAgainstRates:
    def test_spin_lock_lorentzian(self):
        ou = OU((0.1 * MHZ) ** 2, 1e-6)
        expected = rates_single_resonant(NoisePSDSet(S_z=ou.psd()).one_sided(), LOCK.Omega, LOCK.omega0).rate1
        grid = TimeGrid(0, 3 / expected, 201)
        specs = [NoiseTrajectorySpec(ou, "xi_z", 1)]
        rate, _ = mc_decay_rate(LOCK, specs, PLUS_X, grid, 2000, 1, observable=(1, 0, 0))
        assert rate == pytest.approx(expected, rel=0.15)

    def test_nearly_white_noise(self):
        ou = OU((0.25 * MHZ) ** 2, 10e-9)
        plug_in = 2 * (2 * ou.variance * ou.tau_c)  # one-sided spectrum at Omega * tau_c << 1
        grid = TimeGrid(0, 3 / plug_in, 121)
        rate, half = mc_decay_rate(LOCK, [NoiseTrajectorySpec(ou, "xi_z", 2)], PLUS_X, grid, 2000, 2,
                                   observable=(1, 0, 0))
        assert rate == pytest.approx(plug_in, rel=0.15)

    def test_bootstrap_width_scaling(self):
        specs = [NoiseTrajectorySpec(OU((0.15 * MHZ) ** 2, 0.1e-6), "xi_z", 1)]
        grid = TimeGrid(0, 10e-6, 101)
        samples = mc_samples(LOCK, specs, PLUS_X, grid, 800, 4, observable=(1, 0, 0))
        _, h1 = decay_rate_from_samples(grid.times, samples[:400], n_boot=200, seed=1)
        _, h2 = decay_rate_from_samples(grid.times, samples, n_boot=200, seed=1)
        assert h2 / h1 == pytest.approx(1 / math.sqrt(2), rel=0.2)
