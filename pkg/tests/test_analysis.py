import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccdlab.analysis import FitError, FitModel, fit, model_curve, spectrum_peaks, window_contrast
from ccdlab.ensemble import center_band_signal
from ccdlab.evolution import TimeGrid, evolve, population0
from ccdlab.floquet import band_spectrum
from ccdlab.model import KET0, DriveConfig

from conftest import MHZ

US = 1e-6
W = 7.5 * MHZ


def _damped(t, c0=0.5, c1=0.4, tau=1.2 * US, omega=3 * MHZ, phi=0.3):
    return c0 + c1 * np.exp(-t / tau) * np.cos(omega * t + phi)


class TestFit:
    t = np.linspace(0, 5 * US, 1001)

    def test_noiseless_recovery(self):
        r = fit(self.t, _damped(self.t))
        expected = {"c0": 0.5, "c1": 0.4, "tau1": 1.2 * US, "omega1": 3 * MHZ, "phi1": 0.3}
        for k, v in expected.items():
            assert r.params[k] == pytest.approx(v, rel=1e-6, abs=1e-9)
        assert r.converged and r.rate == pytest.approx(1 / (1.2 * US), rel=1e-6)

    def test_stretched_exponent(self):
        y = 0.1 + 0.45 * np.exp(-(self.t / (2 * US)) ** 1.6) * np.cos(4 * MHZ * self.t)
        r = fit(self.t, y, FitModel.STRETCHED, hints={"alpha": 1.3})
        assert r.params["alpha"] == pytest.approx(1.6, rel=1e-4)
        assert r.params["tau"] == pytest.approx(2 * US, rel=1e-4)

    def test_exp_decay(self):
        y = 0.2 + 0.7 * np.exp(-self.t / (0.8 * US))
        r = fit(self.t, y, FitModel.EXP)
        assert r.params["tau"] == pytest.approx(0.8 * US, rel=1e-6)
        assert r.params["c1"] == pytest.approx(0.7, rel=1e-6)

    def test_late_window_phase_reference(self):
        # amplitude and phase refer to t = 0 even when the record starts late
        t = np.linspace(20 * US, 21 * US, 401)
        r = fit(t, _damped(t, tau=4 * US))
        assert r.params["c1"] == pytest.approx(0.4, rel=1e-6)
        assert r.params["phi1"] == pytest.approx(0.3, abs=1e-6)

    def test_mollow_triplet(self):
        cfg = DriveConfig.resonant_ccd(W, 1 * MHZ, phi_m=math.pi / 2)
        g = TimeGrid(0, 4 * US, 1601)
        p = population0(evolve(cfg, KET0, g))
        dc = float(np.mean(p))
        y = dc + (p - dc) * np.exp(-g.times / (1.5 * US))
        r = fit(g.times, y, FitModel.MULTI, 3)
        got = sorted(r.params[f"omega{i}"] for i in (1, 2, 3))
        lines = sorted(f for f, _ in band_spectrum(cfg, KET0).dominant(3))
        np.testing.assert_allclose(got, lines, rtol=1e-2)
        np.testing.assert_allclose(got, np.array([6.5, 7.5, 8.5]) * MHZ, rtol=2e-2)

    def test_refit_idempotent(self):
        r1 = fit(self.t, _damped(self.t))
        r2 = fit(self.t, _damped(self.t), hints=r1.params)
        for k in r1.params:
            assert r2.params[k] == pytest.approx(r1.params[k], rel=1e-10, abs=1e-12)

    def test_sign_convention(self):
        # a negative amplitude is reported as a positive one with phase shifted by pi
        r = fit(self.t, _damped(self.t, c1=-0.4, phi=0.3))
        assert r.params["c1"] > 0
        assert r.params["phi1"] == pytest.approx(0.3 - math.pi, abs=1e-6)
        assert all(-math.pi <= r.params[f"phi{i}"] < math.pi for i in (1,))

    def test_robust_to_noise(self):
        rng = np.random.default_rng(11)
        clean = _damped(self.t)
        noise_sd = 0.4 / 20
        ok = 0
        for _ in range(200):
            r = fit(self.t, clean + rng.normal(0, noise_sd, self.t.size), raise_on_failure=False)
            ok += abs(r.params["tau1"] / (1.2 * US) - 1) < 0.1
        assert ok >= 190

    def test_bad_input(self):
        with pytest.raises(ValueError):
            fit(self.t[:10], _damped(self.t[:10]))
        y = _damped(self.t)
        y[3] = math.nan
        with pytest.raises(ValueError):
            fit(self.t, y)

    def test_non_convergence_raises(self, monkeypatch):
        import ccdlab.analysis as an

        monkeypatch.setattr(an, "MAX_ITERATIONS", 1)
        with pytest.raises(FitError) as info:
            fit(self.t, _damped(self.t) + 0.01 * np.sin(9 * MHZ * self.t))
        assert info.value.result is not None
        assert not fit(self.t, _damped(self.t) + 0.01 * np.sin(9 * MHZ * self.t),
                       raise_on_failure=False).converged

    @settings(max_examples=15)
    @given(st.floats(0.1, 1.0), st.floats(0.5, 3.0), st.floats(1.0, 8.0), st.floats(-3.0, 3.0))
    def test_model_roundtrip(self, c1, tau_us, f_mhz, phi):
        p = {"c0": 0.5, "c1": c1, "tau1": tau_us * US, "omega1": f_mhz * MHZ, "phi1": phi}
        y = model_curve(FitModel.MULTI, p, self.t)
        r = fit(self.t, y)
        assert r.residual_rms < 1e-8


class TestWindowContrast:
    t = np.linspace(50 * US, 50.5 * US, 201)

    def test_pure_cosine(self):
        c1, om, phi = window_contrast(self.t, 0.5 + 0.3 * np.cos(W * self.t + 0.2))
        assert c1 == pytest.approx(0.6, rel=1e-9)
        assert om == pytest.approx(W, rel=1e-9)

    def test_flat(self):
        c1, om, _ = window_contrast(self.t, np.full(self.t.size, 0.5))
        assert c1 == 0 and math.isnan(om)

    def test_matches_center_band_amplitude(self):
        cfg = DriveConfig.resonant_ccd(W, W / 2, phi_m=math.pi / 2)
        y = center_band_signal(cfg, KET0, self.t)
        bands = band_spectrum(cfg, KET0, n_max=4).center_only()
        a1 = abs(bands.amplitudes[bands.order == 1][0])
        c1, om, _ = window_contrast(self.t, y)
        assert c1 == pytest.approx(2 * a1, rel=0.02)
        assert om == pytest.approx(W, rel=1e-3)


class TestSpectrumPeaks:
    dt = 1e-8
    n = 4096

    def test_bin_centred_tone(self):
        t = np.arange(self.n) * self.dt
        omega = 2 * np.pi * 200 / (self.n * self.dt)
        ((w, a),) = spectrum_peaks(0.3 * np.cos(omega * t), self.dt, n_peaks=1)
        assert w == pytest.approx(omega, rel=1e-12)
        assert a == pytest.approx(0.3, rel=1e-9)

    def test_two_tones_between_bins(self):
        t = np.arange(self.n) * self.dt
        df = 2 * np.pi / (self.n * self.dt)
        w1, w2 = 150.3 * df, 410.7 * df
        peaks = spectrum_peaks(np.cos(w1 * t) + 0.5 * np.cos(w2 * t), self.dt, n_peaks=2)
        assert peaks[0][0] == pytest.approx(w1, abs=0.2 * df)
        assert peaks[1][0] == pytest.approx(w2, abs=0.2 * df)
        assert peaks[0][1] > peaks[1][1]

    def test_constant_has_no_lines(self):
        assert spectrum_peaks(np.full(self.n, 0.7), self.dt) == []
