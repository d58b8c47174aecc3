"""Ensemble averages over static drive and detuning spreads with hyperfine sublevels.

The Rabi signal of a spin with drive Omega' = Omega + xi_Omega and detuning
delta' = delta + xi_omega - offset_i is

    (1/2) c_i (Omega'/Omega_R') cos(Omega_R' t) exp(-t/tau0),  Omega_R' = sqrt(Omega'^2 + delta'^2)

averaged over independent Gaussians in xi_Omega and xi_omega by tensor
Gauss-Hermite quadrature over the whole real line (no truncation). The
default prefactor is Omega'/Omega_R'. ``standard=True``
switches to the population-oscillation amplitude Omega'^2/Omega_R'^2.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .analysis import FitError, FitModel, fit, window_contrast
from .evolution import TimeGrid
from .floquet import band_spectrum, floquet_data
from .model import KET0, ConfigError, DriveConfig, InhomogeneityModel

log = logging.getLogger(__name__)

GH_ORDER = 24


def _gh_error_bound(n: int, b: float) -> float:
    """Rough Gauss-Hermite error for cos(b x) against exp(-x^2): b^2n / (2^n (2n)!)."""
    return math.exp(2 * n * math.log(b) - n * math.log(2) - math.lgamma(2 * n + 1)) if b > 0 else 0.0


def auto_order(inhom: InhomogeneityModel, Omega: float, t_max: float, minimum: int = GH_ORDER) -> int:
    """Smallest order >= ``minimum`` resolving the phase spread up to ``t_max``."""
    b = math.sqrt(2) * max(inhom.sigma_Omega_rel * Omega, inhom.sigma_omega) * t_max
    n = minimum
    while n < 400 and _gh_error_bound(n, b) > 1e-12:
        n += 4
    return n


def _nodes(sigma: float, order: int):
    if sigma == 0:
        return np.zeros(1), np.ones(1)
    x, w = hermgauss(order)
    return math.sqrt(2) * sigma * x, w / math.sqrt(math.pi)


def ensemble_rabi(Omega: float, delta: float, inhom: InhomogeneityModel, grid: TimeGrid, *,
                  order: int | None = None, standard: bool = False) -> np.ndarray:
    """Ensemble-averaged Rabi signal on ``grid`` (detuning ``delta`` from the central sublevel).

    ``order=None`` picks max(24, order needed for the grid's last time).
    """
    if not Omega > 0:
        raise ConfigError("Omega must be positive")
    t = grid.times
    if order is None:
        order = auto_order(inhom, Omega, float(np.max(np.abs(t))))
    xo, wo = _nodes(inhom.sigma_Omega_rel * Omega, order)
    xw, ww = _nodes(inhom.sigma_omega, order)
    W = wo[:, None] * ww[None, :]
    Om = (Omega + xo)[:, None]
    envelope = np.exp(-t / inhom.tau0) if math.isfinite(inhom.tau0) else np.ones_like(t)
    out = np.zeros_like(t)
    for c, off in zip(inhom.sublevel_populations, inhom.sublevel_offsets):
        if c == 0:
            continue
        d = delta + xw[None, :] - off
        OR = np.sqrt(Om ** 2 + d ** 2)
        pref = (Om / OR) ** 2 if standard else Om / OR
        amp = (W * pref).ravel()
        out += 0.5 * c * (np.cos(np.multiply.outer(t, OR.ravel())) @ amp)
    return out * envelope


def _fit_tau(t, y, omega_hint):
    r = fit(t, y, FitModel.MULTI, 1, hints={"omegas": [omega_hint]})
    return r.params["tau1"]


def coherence_vs_power(Omegas, inhom: InhomogeneityModel, window: TimeGrid, delta: float = 0.0,
                       order: int | None = None, standard: bool = False):
    """[(Omega, tau)] from damped-cosine fits; failed fits give tau = nan."""
    out = []
    for Om in Omegas:
        y = ensemble_rabi(Om, delta, inhom, window, order=order, standard=standard)
        try:
            tau = _fit_tau(window.times, y, math.hypot(Om, delta))
        except (FitError, ValueError) as exc:
            log.warning("fit failed at Omega=%g: %s", Om, exc)
            tau = math.nan
        out.append((float(Om), float(tau)))
    return out


def coherence_vs_detuning(Omega: float, deltas, inhom: InhomogeneityModel, window: TimeGrid,
                          order: int | None = None, standard: bool = False):
    """[(delta, tau)] at fixed drive; failed fits give tau = nan."""
    out = []
    for d in deltas:
        y = ensemble_rabi(Omega, d, inhom, window, order=order, standard=standard)
        try:
            tau = _fit_tau(window.times, y, math.hypot(Omega, d))
        except (FitError, ValueError) as exc:
            log.warning("fit failed at delta=%g: %s", d, exc)
            tau = math.nan
        out.append((float(d), float(tau)))
    return out


# --- robustness maps ---------------------------------------------------


@dataclass(frozen=True)
class SweepGrid2D:
    Omegas: tuple
    deltas: tuple

    def __post_init__(self):
        om = tuple(float(x) for x in self.Omegas)
        de = tuple(float(x) for x in self.deltas)
        if not om or not de:
            raise ConfigError("sweep axes must be nonempty")
        if list(om) != sorted(om) or list(de) != sorted(de):
            raise ConfigError("sweep axes must be sorted")
        object.__setattr__(self, "Omegas", om)
        object.__setattr__(self, "deltas", de)


@dataclass(frozen=True, eq=False)
class ContrastMap:
    """Center-band contrast c1[i, j] at (Omegas[i], deltas[j])."""

    sweep: SweepGrid2D
    c1: np.ndarray
    rho: float

    def resonance_locus(self, omega_m: float):
        """Points (Omega, +-delta) on sqrt(Omega^2 + delta^2) = omega_m within the sweep."""
        pts = []
        for Om in self.sweep.Omegas:
            if Om <= omega_m:
                d = math.sqrt(omega_m ** 2 - Om ** 2)
                pts += [(Om, -d), (Om, d)] if d > 0 else [(Om, 0.0)]
        return pts

    def detuning_cut(self, Omega: float) -> np.ndarray:
        i = int(np.argmin(np.abs(np.asarray(self.sweep.Omegas) - Omega)))
        return self.c1[i]


def fwhm(x, y) -> float:
    """Full width at half maximum of the peak containing max(y).

    Linear interpolation between samples; returns inf if the curve stays
    above half maximum at either end of the sampled range.
    """
    x = np.asarray(x, dtype=float)
    y = np.nan_to_num(np.asarray(y, dtype=float), nan=0.0)
    k = int(np.argmax(y))
    half = 0.5 * y[k]
    lo = k
    while lo > 0 and y[lo - 1] > half:
        lo -= 1
    hi = k
    while hi < len(y) - 1 and y[hi + 1] > half:
        hi += 1
    if lo == 0 or hi == len(y) - 1:
        return math.inf
    xl = x[lo - 1] + (half - y[lo - 1]) * (x[lo] - x[lo - 1]) / (y[lo] - y[lo - 1])
    xr = x[hi] + (half - y[hi]) * (x[hi + 1] - x[hi]) / (y[hi + 1] - y[hi])
    return float(xr - xl)


def center_band_signal(cfg: DriveConfig, psi0, t, n_max: int = 4) -> np.ndarray:
    """Single-spin signal keeping only the center family n*omega_m."""
    return band_spectrum(floquet_data(cfg, n_samples=64), psi0, n_max=n_max).center_only().evaluate(t)


def _point_contrast(cfg, psi0, window, inhom, order):
    t = window.times
    if inhom is None:
        y = center_band_signal(cfg, psi0, t)
    else:
        xo, wo = _nodes(inhom.sigma_Omega_rel * cfg.Omega, order)
        xw, ww = _nodes(inhom.sigma_omega, order)
        y = np.zeros_like(t)
        for c, off in zip(inhom.sublevel_populations, inhom.sublevel_offsets):
            for a, wa in zip(xo, wo):
                for b, wb in zip(xw, ww):
                    spin = cfg.with_(Omega=cfg.Omega + a, eps_m=cfg.eps_m * (1 + a / cfg.Omega),
                                     delta=cfg.delta + b - off)
                    y += c * wa * wb * center_band_signal(spin, psi0, t)
    return window_contrast(t, y)[0]


def contrast_map(template: DriveConfig, sweep: SweepGrid2D, window: TimeGrid, rho: float, *,
                 psi0=KET0, inhom: InhomogeneityModel | None = None, order: int = 6) -> ContrastMap:
    """Center-band contrast over (Omega, delta) with eps_m = rho * Omega.

    Default is the single-spin shortcut: the Floquet evolution of one spin with
    only the center-band family kept. Passing ``inhom`` averages the same over
    drive/detuning spreads and sublevels (order ``order`` per axis; slow).
    Failed fits are stored as nan and logged.
    """
    c1 = np.full((len(sweep.Omegas), len(sweep.deltas)), math.nan)
    for i, Om in enumerate(sweep.Omegas):
        for j, d in enumerate(sweep.deltas):
            cfg = template.with_(Omega=Om, delta=d, eps_m=rho * Om)
            try:
                c1[i, j] = _point_contrast(cfg, psi0, window, inhom, order)
            except (FitError, ValueError, ArithmeticError) as exc:
                log.warning("contrast fit failed at Omega=%g delta=%g: %s", Om, d, exc)
    return ContrastMap(sweep, c1, float(rho))
