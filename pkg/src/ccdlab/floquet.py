"""Floquet analysis of the periodic first-rotating-frame Hamiltonian.

The period propagator U(T) is diagonalized exactly as an SU(2) rotation,
quasi-energies follow from its eigenphases and the modes
Phi(t) = exp(i lambda t) U(t) v are periodic. Expanding |<0|Psi(t)>|^2 in the
mode Fourier series gives the band spectrum: a center family n*omega_m and
sideband families n*omega_m +- gap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .evolution import STEPS_PER_CYCLE, NumericError, TimeGrid, evolve_field, substeps_for
from .model import ConfigError, DriveConfig, Modulation, QubitState, field_frame1

N_SAMPLES = 256


class RegimeError(ConfigError):
    """The requested operation has no prescription in this parameter regime."""


@dataclass(frozen=True, eq=False)
class FloquetData:
    """Period propagator, quasi-energies and modes sampled on ``times``.

    ``modes[0]`` is Phi+ and ``modes[1]`` is Phi-, each ``(n_samples + 1, 2)``
    including the end point t = T.
    """

    cfg: DriveConfig
    period: float
    times: np.ndarray
    monodromy: np.ndarray
    lambda_plus: float
    lambda_minus: float
    gap: float
    modes: np.ndarray

    @property
    def omega_m(self) -> float:
        return 2 * math.pi / self.period

    def shifted(self, k_plus: int = 0, k_minus: int = 0) -> "FloquetData":
        """Same physical solution with quasi-energies moved by whole zones.

        lambda -> lambda + k omega_m and Phi(t) -> exp(i k omega_m t) Phi(t)
        leave Psi(t) unchanged.
        """
        w = self.omega_m
        phase = np.exp(1j * w * np.outer([k_plus, k_minus], self.times))[..., None]
        lp = self.lambda_plus + k_plus * w
        lm = self.lambda_minus + k_minus * w
        return replace(self, lambda_plus=lp, lambda_minus=lm, gap=lp - lm, modes=self.modes * phase)


@dataclass(frozen=True, eq=False)
class BandSpectrum:
    """P|0>(t) = sum_k Re(amplitudes[k] exp(i frequencies[k] t)).

    ``family`` is 0 for the center family n*omega_m, -1 for n*omega_m - gap
    and +1 for n*omega_m + gap; ``order`` holds n. Frequencies are >= 0.
    """

    frequencies: np.ndarray
    amplitudes: np.ndarray
    family: np.ndarray
    order: np.ndarray

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.real(np.exp(1j * np.multiply.outer(t, self.frequencies)) @ self.amplitudes)

    def two_sided(self):
        """Conjugate-paired (frequency, amplitude) lists of the same real signal."""
        f, a = [], []
        for nu, amp in zip(self.frequencies, self.amplitudes):
            if nu == 0:
                f.append(0.0)
                a.append(complex(amp.real))
            else:
                f += [nu, -nu]
                a += [amp / 2, np.conj(amp) / 2]
        return np.array(f), np.array(a)

    def select(self, mask) -> "BandSpectrum":
        return BandSpectrum(self.frequencies[mask], self.amplitudes[mask], self.family[mask], self.order[mask])

    def center_only(self) -> "BandSpectrum":
        return self.select(self.family == 0)

    def center_weight(self) -> float:
        """Summed squared amplitude of the oscillating center bands (DC excluded)."""
        m = (self.family == 0) & (self.frequencies > 0)
        return float(np.sum(np.abs(self.amplitudes[m]) ** 2))

    def sideband_weight(self) -> float:
        return float(np.sum(np.abs(self.amplitudes[self.family != 0]) ** 2))

    def dominant(self, n: int = 3):
        """The ``n`` largest oscillating lines as (frequency, |amplitude|), by frequency."""
        m = self.frequencies > 0
        idx = np.argsort(-np.abs(self.amplitudes[m]), kind="stable")[:n]
        pairs = [(float(self.frequencies[m][i]), float(abs(self.amplitudes[m][i]))) for i in idx]
        return sorted(pairs)


def _check_periodic(cfg: DriveConfig):
    if cfg.modulation is Modulation.NONE or not cfg.omega_m > 0:
        raise ConfigError("Floquet analysis needs a modulated drive with omega_m > 0")


def period_propagators(cfg: DriveConfig, n_samples: int = N_SAMPLES,
                       steps_per_cycle: int = STEPS_PER_CYCLE):
    """U(t_k) at ``n_samples + 1`` equally spaced times over one modulation period."""
    _check_periodic(cfg)
    T = 2 * math.pi / cfg.omega_m
    grid = TimeGrid(0.0, T, n_samples + 1)
    m = substeps_for(grid.dt, cfg.max_frequency("frame1"), steps_per_cycle)
    cols = evolve_field(lambda t: field_frame1(cfg, t), np.eye(2, dtype=complex), grid, m)
    return grid.times, np.swapaxes(cols, 1, 2)


def monodromy(cfg: DriveConfig, steps_per_cycle: int = STEPS_PER_CYCLE) -> np.ndarray:
    """One-period propagator U(T) of the first-frame Hamiltonian."""
    _, U = period_propagators(cfg, 1, steps_per_cycle=steps_per_cycle)
    return U[-1]


def _su2_axis(U: np.ndarray):
    """U = exp(i alpha) exp(-i theta n.sigma): returns (alpha, theta, n)."""
    det = np.linalg.det(U)
    if abs(abs(det) - 1) > 1e-8 or not np.allclose(U.conj().T @ U, np.eye(2), atol=1e-8):
        raise NumericError("period propagator is not unitary")
    alpha = 0.5 * np.angle(det)
    V = U * np.exp(-1j * alpha)
    c0 = 0.5 * np.trace(V)
    m = np.array([
        np.real(1j * 0.5 * (V[0, 1] + V[1, 0])),
        np.real(1j * 0.5 * (1j * V[0, 1] - 1j * V[1, 0])),
        np.real(1j * 0.5 * (V[0, 0] - V[1, 1])),
    ])
    s = float(np.linalg.norm(m))
    theta = math.atan2(s, float(np.real(c0)))
    n = m / s if s > 1e-12 else np.array([0.0, 0.0, 1.0])
    return float(alpha), theta, n


def _canonical_vector(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * np.exp(-1j * np.angle(v[k]))


def _wrap_zone(lam: float, w: float) -> float:
    """Map into (-w/2, w/2]."""
    x = lam - w * math.floor(lam / w + 0.5)
    return w / 2 if x <= -w / 2 else x


def _eigensystem(U: np.ndarray, omega_m: float):
    """Quasi-energies and eigenvectors with the labelling described in ``quasienergies``."""
    alpha, theta, n = _su2_axis(U)
    T = 2 * math.pi / omega_m
    vp = _canonical_vector(QubitState.from_bloch(n).vector)
    vm = _canonical_vector(QubitState.from_bloch(-n).vector)
    # U vp = exp(i(alpha - theta)) vp, U vm = exp(i(alpha + theta)) vm
    a = _wrap_zone(-(alpha - theta) / T, omega_m)
    b = _wrap_zone(-(alpha + theta) / T, omega_m)
    if a < b:
        a, b, vp, vm = b, a, vm, vp
    if a - b > omega_m / 2:
        a, b, vp, vm = b, a, vm, vp
    gap = (a - b) % omega_m
    return a, b, gap, vp, vm


def quasienergies(U: np.ndarray, omega_m: float):
    """(lambda+, lambda-, gap) from the period propagator.

    Both quasi-energies lie in (-omega_m/2, omega_m/2]. Quasi-energies are only
    defined modulo omega_m, so the labels are chosen to make the folded
    splitting ``gap = (lambda+ - lambda-) mod omega_m`` lie in [0, omega_m/2].
    At resonance this makes the gap follow eps_m continuously from zero.
    """
    a, b, gap, _, _ = _eigensystem(np.asarray(U, dtype=complex), omega_m)
    return a, b, gap


def floquet_data(cfg: DriveConfig, n_samples: int = N_SAMPLES,
                 steps_per_cycle: int = STEPS_PER_CYCLE) -> FloquetData:
    times, U = period_propagators(cfg, n_samples, steps_per_cycle)
    lp, lm, gap, vp, vm = _eigensystem(U[-1], cfg.omega_m)
    modes = np.stack([
        np.exp(1j * lp * times)[:, None] * (U @ vp),
        np.exp(1j * lm * times)[:, None] * (U @ vm),
    ])
    return FloquetData(cfg, 2 * math.pi / cfg.omega_m, times, U[-1], lp, lm, gap, modes)


def mode_decomposition(psi0, fd: FloquetData):
    """(c+, c-) = (<Phi+(0)|psi0>, <Phi-(0)|psi0>)."""
    psi = psi0.vector if isinstance(psi0, QubitState) else np.asarray(psi0, dtype=complex)
    return complex(np.vdot(fd.modes[0, 0], psi)), complex(np.vdot(fd.modes[1, 0], psi))


def _harmonics(x: np.ndarray):
    """Fourier coefficients x(t) = sum_n X_n exp(i n omega_m t) from one period of samples."""
    n = x.size
    return np.fft.fftfreq(n, 1.0 / n).astype(int), np.fft.fft(x) / n


def band_spectrum(source, psi0, n_max: int = 8, n_samples: int = N_SAMPLES) -> BandSpectrum:
    """Bands of P|0>(t) for the evolution starting in ``psi0``.

    ``source`` is a DriveConfig or precomputed FloquetData. Each mode evolves
    with its own quasi-energy. Lines up to order ``n_max`` are kept.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    fd = source if isinstance(source, FloquetData) else floquet_data(source, n_samples)
    cp, cm = mode_decomposition(psi0, fd)
    fp, fm = fd.modes[0, :-1, 0], fd.modes[1, :-1, 0]
    w = fd.omega_m
    idx, p = _harmonics(np.abs(fp) ** 2)
    _, q = _harmonics(np.abs(fm) ** 2)
    _, r = _harmonics(fp * np.conj(fm))
    center = abs(cp) ** 2 * p + abs(cm) ** 2 * q
    cross = 2 * cp * np.conj(cm) * r
    delta = fd.lambda_plus - fd.lambda_minus

    lines = {}

    def add(nu, amp, fam, order):
        if nu < 0:
            nu, amp = -nu, np.conj(amp)
        key = (round(nu / w * 1e9), fam, order)
        lines[key] = lines.get(key, (nu, 0j))[0], lines.get(key, (nu, 0j))[1] + amp

    for n, c in zip(idx, center):
        if n == 0:
            add(0.0, complex(c.real), 0, 0)
        elif n > 0 and n <= n_max:
            add(n * w, 2 * c, 0, n)
    # cross term: 2 Re[c+ c-* r_n exp(i(n w - delta) t)], real part only of the sum
    gap_eff = _wrap_zone(delta, w)
    shift = round((delta - gap_eff) / w)
    for n, c in zip(idx, cross):
        k = n - shift
        nu = k * w - gap_eff
        if abs(nu) > n_max * w + abs(gap_eff) + 1e-9 * w:
            continue
        fam = -1 if nu > 0 else 1
        add(nu, c, fam, abs(k) if nu > 0 else abs(k))
    keys = sorted(lines, key=lambda k: (lines[k][0], k[1]))
    freqs = np.array([lines[k][0] for k in keys])
    amps = np.array([lines[k][1] for k in keys], dtype=complex)
    fam = np.array([k[1] for k in keys], dtype=int)
    order = np.array([k[2] for k in keys], dtype=int)
    return BandSpectrum(freqs, amps, fam, order)


# --- mode control ------------------------------------------------------


def analytic_mode_phases(psi0) -> tuple[float, float]:
    """(phi0, phi_m) orienting the second-frame static field along psi0.

    Under both RWAs the second-frame field is (eps_m/2) n.sigma with
    n = (-sin phi0 cos phi_m, cos phi0 cos phi_m, sin phi_m).
    """
    state = psi0 if isinstance(psi0, QubitState) else QubitState.from_vector(psi0)
    b = state.bloch()
    phi_m = math.asin(max(-1.0, min(1.0, b.z)))
    phi0 = math.atan2(-b.x, b.y) if math.hypot(b.x, b.y) > 1e-12 else 0.0
    return phi0, phi_m


def mode_control_phases(psi0, cfg: DriveConfig, refine: bool = True) -> tuple[float, float]:
    """Phases making ``psi0`` (nearly) a single Floquet mode Phi+.

    Only the synchronized regime delta = 0, omega_m = Omega is supported. The
    analytic answer is returned if it already meets
    |c-| <= max(0.05, 2 eps_m/Omega); otherwise it is refined numerically.
    """
    if cfg.eps_m <= 0 or cfg.Omega <= 0:
        raise RegimeError("mode control needs eps_m > 0 and Omega > 0")
    tol = 1e-9 * max(cfg.Omega, cfg.omega_m)
    if abs(cfg.delta) > tol or abs(cfg.omega_m - cfg.Omega) > tol:
        raise RegimeError("mode control is only defined at delta = 0, omega_m = Omega")
    phi0, phi_m = analytic_mode_phases(psi0)
    if not refine:
        return phi0, phi_m
    bound = max(0.05, 2 * cfg.eps_m / cfg.Omega)

    def minority(x):
        fd = floquet_data(cfg.with_(phi0=float(x[0]), phi_m=float(x[1])), n_samples=16)
        return abs(mode_decomposition(psi0, fd)[1])

    if minority((phi0, phi_m)) <= bound:
        return phi0, phi_m
    grid = [(phi0 + a, phi_m + b) for a in np.linspace(-0.3, 0.3, 7) for b in np.linspace(-0.3, 0.3, 7)]
    start = min(grid, key=minority)
    res = minimize(minority, start, method="Nelder-Mead", options={"xatol": 1e-6, "fatol": 1e-10})
    return float(res.x[0]), float(res.x[1])
