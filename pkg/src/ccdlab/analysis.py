"""Fit models for Rabi-type signals, FFT peak picking and windowed contrast.

Models (``t`` in s, ``omega`` in rad/s)::

    multi_damped_cosine      c0 + sum_i c_i exp(-t/tau_i) cos(omega_i t + phi_i)
    stretched_damped_cosine  c0 + c1 exp(-(t/tau)^alpha) cos(omega1 t + phi1)
    window_cosine            c0 + c1/2 cos(omega1 t + phi1)
    exp_decay                c0 + c1 exp(-t/tau)

Fits run in rescaled time (record start at 0, unit length) and are converted
back, which keeps the least-squares problem well conditioned for MHz signals
sampled over microseconds.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

MAX_ITERATIONS = 500


class FitModel(str, enum.Enum):
    MULTI = "multi_damped_cosine"
    STRETCHED = "stretched_damped_cosine"
    WINDOW = "window_cosine"
    EXP = "exp_decay"


class FitError(RuntimeError):
    """Least squares did not converge; ``result`` holds the best parameters found."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass
class FitResult:
    model: FitModel
    params: dict
    residual_rms: float
    converged: bool
    stderr: dict = field(default_factory=dict)
    n_components: int = 1

    def evaluate(self, t) -> np.ndarray:
        return model_curve(self.model, self.params, np.asarray(t, dtype=float), self.n_components)

    @property
    def rate(self) -> float:
        """1/tau of the (first) decaying component."""
        tau = self.params.get("tau", self.params.get("tau1"))
        return 1.0 / tau


def _wrap(phi):
    return (phi + math.pi) % (2 * math.pi) - math.pi


def model_curve(model, p: dict, t: np.ndarray, k: int = 1) -> np.ndarray:
    model = FitModel(model)
    if model is FitModel.MULTI:
        y = np.full_like(t, p["c0"])
        for i in range(1, k + 1):
            y = y + p[f"c{i}"] * np.exp(-t / p[f"tau{i}"]) * np.cos(p[f"omega{i}"] * t + p[f"phi{i}"])
        return y
    if model is FitModel.STRETCHED:
        return p["c0"] + p["c1"] * np.exp(-(t / p["tau"]) ** p["alpha"]) * np.cos(p["omega1"] * t + p["phi1"])
    if model is FitModel.WINDOW:
        return p["c0"] + 0.5 * p["c1"] * np.cos(p["omega1"] * t + p["phi1"])
    return p["c0"] + p["c1"] * np.exp(-t / p["tau"])


def param_names(model, k: int = 1) -> list[str]:
    model = FitModel(model)
    if model is FitModel.MULTI:
        return ["c0"] + [f"{n}{i}" for i in range(1, k + 1) for n in ("c", "tau", "omega", "phi")]
    if model is FitModel.STRETCHED:
        return ["c0", "c1", "tau", "alpha", "omega1", "phi1"]
    if model is FitModel.WINDOW:
        return ["c0", "c1", "omega1", "phi1"]
    return ["c0", "c1", "tau"]


# --- spectrum ----------------------------------------------------------


def spectrum_peaks(signal, dt: float, n_peaks: int = 3, rel_threshold: float = 1e-4):
    """Strongest spectral lines of a uniformly sampled real signal.

    Hann-windowed FFT with parabolic interpolation of the peak bin. Returns
    up to ``n_peaks`` ``(omega, amplitude)`` pairs, strongest first; the
    amplitude is that of the cosine, not of the FFT bin.
    """
    y = np.asarray(signal, dtype=float)
    n = y.size
    mean = y.mean()
    y = y - mean
    w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)
    amp = 2 * np.abs(np.fft.rfft(y * w)) / w.sum()
    if amp.size < 3 or amp.max() <= 1e-12 * max(1.0, abs(mean)):
        return []
    a0, a1, a2 = amp[:-2], amp[1:-1], amp[2:]
    idx = np.nonzero((a1 > a0) & (a1 >= a2) & (a1 > rel_threshold * amp.max()))[0] + 1
    peaks = []
    for i in idx:
        left, mid, right = amp[i - 1], amp[i], amp[i + 1]
        denom = left - 2 * mid + right
        shift = 0.5 * (left - right) / denom if denom != 0 else 0.0
        peaks.append((2 * np.pi * (i + shift) / (n * dt), mid - 0.25 * (left - right) * shift))
    peaks.sort(key=lambda p: -p[1])
    return peaks[:n_peaks]


def tone_amplitude(signal, dt: float, omega: float) -> complex:
    """Complex amplitude ``a`` of ``Re(a e^{i omega t})`` by Hann-weighted projection."""
    y = np.asarray(signal, dtype=float)
    n = y.size
    t = np.arange(n) * dt
    w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / (n - 1))
    return 2 * np.sum(w * (y - y.mean()) * np.exp(-1j * omega * t)) / w.sum()


# --- fitting -----------------------------------------------------------


def _linear_amplitudes(ts, y, decays, omegas):
    """Least-squares c0 and (a_i, b_i) for fixed decay envelopes and frequencies."""
    cols = [np.ones_like(ts)]
    for env, w in zip(decays, omegas):
        if w is None:
            cols.append(env)
        else:
            cols += [env * np.cos(w * ts), env * np.sin(w * ts)]
    A = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef, float(np.sum((A @ coef - y) ** 2))


def _initial_guess(model, ts, y, k, dts, hints):
    """Guess in scaled units: time in [0, 1] (shifted) or t/D (stretched)."""
    n = ts.size
    if model is FitModel.EXP:
        best = None
        for tau in np.geomspace(dts, 10.0, 60):
            coef, rss = _linear_amplitudes(ts, y, [np.exp(-ts / tau)], [None])
            if best is None or rss < best[0]:
                best = (rss, tau, coef)
        _, tau, coef = best
        return [coef[0], coef[1], hints.get("tau", tau)]

    omegas = list(hints.get("omegas", []))
    if len(omegas) < k:
        peaks = spectrum_peaks(y, dts, n_peaks=k)
        for w, _ in peaks:
            if len(omegas) >= k:
                break
            if all(abs(w - o) > 2 * np.pi / (n * dts) for o in omegas):
                omegas.append(w)
        while len(omegas) < k:
            omegas.append((len(omegas) + 1) * 2 * np.pi * 2.0)
    omegas = omegas[:k]

    if model is FitModel.WINDOW:
        coef, _ = _linear_amplitudes(ts, y, [np.ones_like(ts)], omegas)
        a, b = coef[1], coef[2]
        return [coef[0], 2 * math.hypot(a, b), omegas[0], math.atan2(-b, a)]

    best = None
    for tau in np.geomspace(max(dts, 1e-3), 20.0, 50):
        env = np.exp(-ts / tau)
        coef, rss = _linear_amplitudes(ts, y, [env] * k, omegas)
        if best is None or rss < best[0]:
            best = (rss, tau, coef)
    _, tau, coef = best
    taus = hints.get("taus", [tau] * k)
    out = [coef[0]]
    for i in range(k):
        a, b = coef[1 + 2 * i], coef[2 + 2 * i]
        c, phi = math.hypot(a, b), math.atan2(-b, a)
        if model is FitModel.STRETCHED:
            out += [c, taus[i], hints.get("alpha", 1.0), omegas[i], phi]
        else:
            out += [c, taus[i], omegas[i], phi]
    return out


def _bounds(model, k, dts, nyq):
    big = np.inf
    tau_lo, tau_hi = dts, 1e6 * dts
    if model is FitModel.EXP:
        return [-big, -big, tau_lo], [big, big, tau_hi]
    if model is FitModel.WINDOW:
        return [-big, -big, 0.0, -big], [big, big, nyq, big]
    if model is FitModel.STRETCHED:
        return [-big, -big, tau_lo, 1e-3, 0.0, -big], [big, big, tau_hi, 4.0, nyq, big]
    lo, hi = [-big], [big]
    for _ in range(k):
        lo += [-big, tau_lo, 0.0, -big]
        hi += [big, tau_hi, nyq, big]
    return lo, hi


def _scaled_curve(model, x, ts, k):
    return model_curve(model, dict(zip(param_names(model, k), x)), ts, k)


def _to_physical(model, x, t0, D, k):
    """Scaled parameter vector -> physical parameter dict."""
    names = param_names(model, k)
    p = dict(zip(names, (float(v) for v in x)))
    if model is FitModel.STRETCHED:
        p["tau"] *= D
        p["omega1"] /= D
        return p
    if model is FitModel.EXP:
        p["tau"] *= D
        p["c1"] *= math.exp(min(t0 / p["tau"], 700.0))
        return p
    if model is FitModel.WINDOW:
        p["omega1"] /= D
        p["phi1"] = p["phi1"] - p["omega1"] * t0
        return p
    for i in range(1, k + 1):
        p[f"tau{i}"] *= D
        p[f"omega{i}"] /= D
        p[f"phi{i}"] = p[f"phi{i}"] - p[f"omega{i}"] * t0
        p[f"c{i}"] *= math.exp(min(t0 / p[f"tau{i}"], 700.0))
    return p


def _to_scaled(model, p, t0, D, k):
    q = dict(p)
    if model is FitModel.STRETCHED:
        q["tau"] /= D
        q["omega1"] *= D
    elif model is FitModel.EXP:
        q["c1"] *= math.exp(-t0 / q["tau"])
        q["tau"] /= D
    elif model is FitModel.WINDOW:
        q["phi1"] = q["phi1"] + q["omega1"] * t0
        q["omega1"] *= D
    else:
        for i in range(1, k + 1):
            q[f"c{i}"] *= math.exp(-t0 / q[f"tau{i}"])
            q[f"phi{i}"] = q[f"phi{i}"] + q[f"omega{i}"] * t0
            q[f"tau{i}"] /= D
            q[f"omega{i}"] *= D
    return [q[n] for n in param_names(model, k)]


def _canonical(model, p, k):
    """Positive amplitudes (sign moved into the phase), wrapped phases."""
    if model is FitModel.EXP:
        return p
    idx = range(1, k + 1) if model is FitModel.MULTI else [1]
    for i in idx:
        if p[f"c{i}"] < 0:
            p[f"c{i}"] = -p[f"c{i}"]
            p[f"phi{i}"] += math.pi
        p[f"phi{i}"] = _wrap(p[f"phi{i}"])
    return p


def _scaled_seeds(seeds: dict, D: float) -> dict:
    out = dict(seeds)
    if "omegas" in out:
        out["omegas"] = [w * D for w in out["omegas"]]
    if "taus" in out:
        out["taus"] = [tau / D for tau in out["taus"]]
    if "tau" in out:
        out["tau"] = out["tau"] / D
    return out


def fit(t, signal, model=FitModel.MULTI, n_components: int = 1, hints: dict | None = None,
        raise_on_failure: bool = True) -> FitResult:
    """Nonlinear least-squares fit of ``signal(t)`` to one of the models.

    ``hints`` may hold a full physical parameter dict (as returned in
    ``FitResult.params``) or partial seeds: ``omegas``, ``taus``, ``tau``,
    ``alpha``. Without hints, frequencies come from FFT peaks and decay times
    from a log-spaced scan with linear amplitudes.
    """
    model = FitModel(model)
    t = np.asarray(t, dtype=float)
    y = np.asarray(signal, dtype=float)
    k = n_components if model is FitModel.MULTI else 1
    names = param_names(model, k)
    if t.size < 8 * len(names):
        raise ValueError(f"need at least {8 * len(names)} samples for {len(names)} parameters")
    if t.size != y.size:
        raise ValueError("t and signal differ in length")
    if not np.all(np.isfinite(y)):
        raise ValueError("signal has non-finite samples")
    hints = dict(hints or {})
    t0 = 0.0 if model is FitModel.STRETCHED else float(t[0])
    D = float(t[-1] - (0.0 if model is FitModel.STRETCHED else t[0]))
    ts = (t - t0) / D
    dt = float(np.mean(np.diff(t)))
    dts = dt / D
    nyq = math.pi / dts

    if all(n in hints for n in names):
        x0 = _to_scaled(model, {n: float(hints[n]) for n in names}, t0, D, k)
    else:
        # partial seeds are physical; the guess works in rescaled time
        seeds = {key: val for key, val in hints.items() if key in ("omegas", "taus", "tau", "alpha")}
        if model is FitModel.STRETCHED:
            # seed on shifted time, then convert to the unshifted stretched form
            Dsh = float(t[-1] - t[0])
            tsh = (t - t[0]) / Dsh
            g = _initial_guess(FitModel.MULTI, tsh, y, 1, dt / Dsh, _scaled_seeds(seeds, Dsh))
            pm = _to_physical(FitModel.MULTI, g, float(t[0]), Dsh, 1)
            p = {"c0": pm["c0"], "c1": pm["c1"], "tau": pm["tau1"], "alpha": seeds.get("alpha", 1.0),
                 "omega1": pm["omega1"], "phi1": pm["phi1"]}
            x0 = _to_scaled(model, p, t0, D, 1)
        else:
            x0 = _initial_guess(model, ts, y, k, dts, _scaled_seeds(seeds, D))
    lo, hi = _bounds(model, k, dts, nyq)
    x0 = np.clip(np.asarray(x0, dtype=float), np.nextafter(lo, np.inf), np.nextafter(hi, -np.inf))

    scale = float(np.std(y)) or 1.0

    def resid(x):
        return (_scaled_curve(model, x, ts, k) - y) / scale

    res = least_squares(resid, x0, bounds=(lo, hi), jac="3-point", method="trf",
                        xtol=1e-12, ftol=1e-15, gtol=1e-15, max_nfev=MAX_ITERATIONS, x_scale="jac")
    params = _canonical(model, _to_physical(model, res.x, t0, D, k), k)
    rms = float(np.sqrt(np.mean((model_curve(model, params, t, k) - y) ** 2)))
    stderr = _stderr(model, res, t0, D, k, scale, y.size)
    result = FitResult(model, params, rms, bool(res.status > 0), stderr, k)
    if not result.converged and raise_on_failure:
        raise FitError(f"{model.value} fit did not converge in {MAX_ITERATIONS} evaluations", result)
    return result


def _stderr(model, res, t0, D, k, scale, n):
    names = param_names(model, k)
    p = len(names)
    J = res.jac
    dof = max(n - p, 1)
    s2 = 2 * res.cost / dof * scale ** 2
    try:
        cov = np.linalg.pinv(J.T @ J) * s2 / scale ** 2
    except np.linalg.LinAlgError:
        return {n_: math.nan for n_ in names}
    # propagate through the scaled -> physical map
    x = res.x
    base = np.array([_to_physical(model, x, t0, D, k)[n_] for n_ in names])
    G = np.empty((p, p))
    for j in range(p):
        h = 1e-7 * max(abs(x[j]), 1e-3)
        xp = x.copy()
        xp[j] += h
        G[:, j] = (np.array([_to_physical(model, xp, t0, D, k)[n_] for n_ in names]) - base) / h
    var = np.einsum("ij,jk,ik->i", G, cov, G)
    return {n_: float(math.sqrt(v)) if v >= 0 else math.nan for n_, v in zip(names, var)}


def window_contrast(t, signal):
    """Contrast ``c1`` (twice the oscillation amplitude), ``omega1``, ``phi1``.

    A flat signal gives ``c1 = 0`` and ``omega1 = nan``.
    """
    y = np.asarray(signal, dtype=float)
    if np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        return 0.0, math.nan, math.nan
    r = fit(t, y, FitModel.WINDOW)
    return r.params["c1"], r.params["omega1"], r.params["phi1"]
