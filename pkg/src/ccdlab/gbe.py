"""Decay rates in the first and second rotating frames from lab-frame noise spectra.

Each scenario maps the lab spectra to rotating-frame spectra and sums them:
the rate of the component along axis a is the sum of the perpendicular noise
spectra, evaluated at 0 for the component along the static field and at the
field strength for the others.

Variants:

``exact``
    Transverse-noise spectra at their true arguments (omega0 +- ...).
``approx``
    S_x(omega0 +- small) replaced by S_x(omega0).
``simplified``
    CCD amplitude only: additionally drops the 2*Omega modulation-noise terms.

The formulas are second order in the noise and assume the spectra in
:meth:`NoisePSDSet.one_sided` normalization. Static (quasi-static Gaussian)
members are divergent at zero frequency. They raise by default and are
dropped with ``static="zero"``; use :mod:`ccdlab.ensemble` for their decay.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace

from .model import ConfigError, Frame, Lorentzian, NoisePSDSet, SpectrumError, Sum

PHASE_WARN_RATIO = 0.2
PHASE_VALID_RATIO = 0.5


class Scenario(str, enum.Enum):
    SINGLE_RESONANT = "single_resonant"
    SINGLE_DETUNED = "single_detuned"
    CCD_AMPLITUDE = "ccd_amplitude"
    CCD_PHASE = "ccd_phase"


class Variant(str, enum.Enum):
    EXACT = "exact"
    APPROX = "approx"
    SIMPLIFIED = "simplified"


@dataclass(frozen=True)
class DecayRates:
    """Axis rates and the derived T1, T2 and pure-dephasing times.

    ``gamma_*`` refer to the frame axes of the scenario (field along x for a
    single drive, along y in the second frame). ``valid`` is False where the
    underlying expansion is known to break down.
    """

    gamma_x: float
    gamma_y: float
    gamma_z: float
    t1: float
    t2: float
    t2_pure: float
    frame: Frame
    scenario: Scenario
    variant: Variant = Variant.EXACT
    valid: bool = True

    @property
    def rate1(self) -> float:
        return _inv(self.t1)

    @property
    def rate2(self) -> float:
        return _inv(self.t2)

    @property
    def rate2_pure(self) -> float:
        return _inv(self.t2_pure)

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario.value, "variant": self.variant.value, "frame": self.frame.value,
            "gamma_x": self.gamma_x, "gamma_y": self.gamma_y, "gamma_z": self.gamma_z,
            "t1": self.t1, "t2": self.t2, "t2_pure": self.t2_pure,
            "rate1": self.rate1, "rate2": self.rate2, "rate2_pure": self.rate2_pure,
            "valid": self.valid,
        }


def _inv(x: float) -> float:
    return math.inf if x == 0 else 1.0 / x


def _build(gx, gy, gz, longitudinal, rate2, frame, scenario, variant, valid=True) -> DecayRates:
    rate1 = longitudinal
    pure = rate2 - 0.5 * rate1
    return DecayRates(gx, gy, gz, _inv(rate1), _inv(rate2), _inv(pure), frame, scenario, variant, valid)


def _spec(psd: NoisePSDSet, static: str):
    def s(name, nu):
        return float(getattr(psd, name).evaluate(abs(nu), static))
    return s


def _lorentz_rates(spec) -> list[float]:
    if isinstance(spec, Lorentzian):
        return [1.0 / spec.tau_c]
    if isinstance(spec, Sum):
        return [r for t in spec.terms for r in _lorentz_rates(t)]
    return []


def _near_second_resonance(psd: NoisePSDSet, Omega: float, eps_m: float) -> bool:
    rates = [r for n in ("S_x", "S_z", "S_Omega", "S_em") for r in _lorentz_rates(getattr(psd, n))]
    return bool(rates) and abs(Omega - eps_m) < 5 * max(rates)


def _variant(v) -> Variant:
    return Variant(v)


def rates_single_resonant(psd: NoisePSDSet, Omega: float, omega0: float, variant="exact",
                          static: str = "raise") -> DecayRates:
    """Spin-locking (T1rho) and Rabi (T2rho) rates for a resonant drive along x."""
    if not Omega > 0:
        raise ConfigError("Omega must be positive")
    v = _variant(variant)
    S = _spec(psd, static)
    sx0 = S("S_x", omega0)
    if v is Variant.EXACT:
        sx_pm = 0.25 * (S("S_x", omega0 + Omega) + S("S_x", omega0 - Omega))
    else:
        sx_pm = 0.5 * sx0
    sz = S("S_z", Omega)
    so0 = S("S_Omega", 0.0)
    gx = sx_pm + sz
    gy = 0.5 * sx0 + sz + 0.25 * so0
    gz = 0.5 * sx0 + sx_pm + 0.25 * so0
    return _build(gx, gy, gz, gx, 0.5 * (gy + gz), Frame.FRAME1, Scenario.SINGLE_RESONANT, v)


def rates_single_detuned(psd: NoisePSDSet, Omega: float, delta: float, omega0: float,
                         variant="exact", static: str = "raise") -> DecayRates:
    """Rates along the tilted field of a detuned drive.

    Axes: x' along the field (Omega, 0, -delta)/Omega_R, y' = y and z' = x' x y'.

    ``approx`` is the compact closed form, kept term by term. Its S_x(omega0)
    coefficient in 1/T2 is 3/4 + delta^2/Omega_R^2, while summing the primed
    spectra gives 3/4 - delta^2/(4 Omega_R^2) (``exact`` uses the latter).
    The two agree at delta = 0 and whenever S_x vanishes.
    """
    OR = math.hypot(Omega, delta)
    if not OR > 0:
        raise ConfigError("Omega_R = sqrt(Omega^2 + delta^2) must be positive")
    v = _variant(variant)
    S = _spec(psd, static)
    a, b = (Omega / OR) ** 2, (delta / OR) ** 2
    sx0 = S("S_x", omega0)

    if v is Variant.APPROX:
        rate1 = 0.5 * sx0 + a * S("S_z", OR) + b * (0.25 * S("S_Omega", OR) + 0.5 * sx0)
        sz0 = S("S_z", 0.0) if b > 0 else 0.0
        rate2 = (b * sz0 + 0.25 * a * (S("S_Omega", 0.0) + 2 * S("S_z", OR))
                 + 0.125 * b * S("S_Omega", OR) + (0.75 + b) * sx0)
        # axis rates consistent with the closed-form pair
        gx = rate1
        return _build(gx, rate2, rate2, rate1, rate2, Frame.FRAME1, Scenario.SINGLE_DETUNED, v)

    def sxx(nu):  # transverse lab noise seen along a frame-1 transverse axis
        return 0.25 * (S("S_x", nu + omega0) + S("S_x", nu - omega0))

    def s_nx(nu):
        return 0.25 * S("S_Omega", nu) + sxx(nu)

    def sz(nu):
        return S("S_z", nu) if (nu != 0 or b > 0) else 0.0

    s_xp0 = a * s_nx(0.0) + b * sz(0.0)
    s_yp = sxx(OR)
    s_zp = b * s_nx(OR) + a * sz(OR)
    gx = s_yp + s_zp
    gy = s_xp0 + s_zp
    gz = s_xp0 + s_yp
    return _build(gx, gy, gz, gx, 0.5 * (gy + gz), Frame.FRAME1, Scenario.SINGLE_DETUNED, v)


def frame2_amplitude_psds(psd: NoisePSDSet, Omega: float, omega0: float, static: str = "raise"):
    """Second-frame spectra (S_x2, S_y2, S_z2) as functions of nu, amplitude CCD at omega_m = Omega."""
    S = _spec(psd, static)
    w = Omega

    def sx4(nu):
        return (S("S_x", nu + omega0 + w) + S("S_x", nu + omega0 - w)
                + S("S_x", nu - omega0 + w) + S("S_x", nu - omega0 - w))

    def sx2(nu):
        return 0.25 * S("S_Omega", nu) + 0.25 * (S("S_x", nu + omega0) + S("S_x", nu - omega0))

    def sy2(nu):
        return (0.25 * S("S_em", nu) + (S("S_em", nu + 2 * w) + S("S_em", nu - 2 * w)) / 16
                + 0.25 * (S("S_z", nu + w) + S("S_z", nu - w)) + sx4(nu) / 16)

    def sz2(nu):
        return ((S("S_em", nu + 2 * w) + S("S_em", nu - 2 * w)) / 16
                + 0.25 * (S("S_z", nu + w) + S("S_z", nu - w)) + sx4(nu) / 16)

    return sx2, sy2, sz2


def rates_ccd_amplitude(psd: NoisePSDSet, Omega: float, eps_m: float, omega0: float,
                        variant="exact", static: str = "raise") -> DecayRates:
    """Second-frame rates for amplitude-modulated CCD at omega = omega0, omega_m = Omega.

    The static second-frame field (eps_m/2) points along y, so T1rho-rho = 1/Gamma_y.
    ``valid`` is False when |Omega - eps_m| is within 5 correlation rates of a
    Lorentzian member, where the expansion no longer holds.
    """
    if not Omega > 0 or eps_m < 0:
        raise ConfigError("need Omega > 0 and eps_m >= 0")
    v = _variant(variant)
    valid = not _near_second_resonance(psd, Omega, eps_m)
    if v is Variant.EXACT:
        sx2, sy2, sz2 = frame2_amplitude_psds(psd, Omega, omega0, static)
        gx = sy2(0.0) + sz2(eps_m)
        gy = sx2(eps_m) + sz2(eps_m)
        gz = sy2(0.0) + sx2(eps_m)
        return _build(gx, gy, gz, gy, 0.5 * (gx + gz), Frame.FRAME2, Scenario.CCD_AMPLITUDE, v, valid)
    S = _spec(psd, static)
    sx0 = S("S_x", omega0)
    sz_pm = 0.25 * (S("S_z", Omega - eps_m) + S("S_z", Omega + eps_m))
    rate1 = 0.25 * S("S_Omega", eps_m) + 0.75 * sx0 + sz_pm
    pure = 0.25 * S("S_em", 0.0) + 0.5 * S("S_z", Omega) + 0.25 * sx0
    if v is Variant.APPROX:
        rate1 += (S("S_em", 2 * Omega - eps_m) + S("S_em", 2 * Omega + eps_m)) / 16
        pure += 0.125 * S("S_em", 2 * Omega)
    rate2 = 0.5 * rate1 + pure
    # split of Gamma_x/Gamma_z is not resolved by the closed forms; report their mean
    return _build(rate2, rate1, rate2, rate1, rate2, Frame.FRAME2, Scenario.CCD_AMPLITUDE, v, valid)


def rates_ccd_phase(psd: NoisePSDSet, Omega: float, eps_m: float, omega0: float,
                    variant="exact", static: str = "raise") -> DecayRates:
    """Second-frame rates for phase-modulated CCD at omega = omega0, omega_m = Omega.

    Uses the first-order expansion in r = eps_m/Omega. The modulation is taken
    as noise-free, so ``S_em`` is ignored. Warns for r > 0.2, flags
    ``valid=False`` for r > 0.5 and raises for eps_m > Omega.
    """
    if not Omega > 0 or eps_m < 0:
        raise ConfigError("need Omega > 0 and eps_m >= 0")
    if eps_m > Omega:
        raise ConfigError("phase-modulated rates need eps_m <= Omega")
    r = eps_m / Omega
    if r > PHASE_WARN_RATIO:
        warnings.warn(f"eps_m/Omega = {r:.3g} exceeds {PHASE_WARN_RATIO}; first-order expansion degrades",
                      stacklevel=2)
    v = _variant(variant)
    if v is Variant.SIMPLIFIED:
        raise ConfigError("the simplified variant exists only for amplitude modulation")
    valid = r <= PHASE_VALID_RATIO and not _near_second_resonance(psd, Omega, eps_m)
    S = _spec(psd, static)
    w = Omega
    if v is Variant.EXACT:
        def sxs(nu, k):  # S_x(nu +- omega0 +- k omega_m), four terms
            return (S("S_x", nu + omega0 + k * w) + S("S_x", nu + omega0 - k * w)
                    + S("S_x", nu - omega0 + k * w) + S("S_x", nu - omega0 - k * w))

        def sx0(nu):
            return S("S_x", nu + omega0) + S("S_x", nu - omega0)

        def szz(nu):
            return 0.25 * (S("S_z", nu - w) + S("S_z", nu + w))

        def sx2(nu):
            return 0.25 * S("S_Omega", nu) + 0.25 * sx0(nu) + 0.25 * r * r * sxs(nu, 1)

        def sy2(nu):
            return szz(nu) + sxs(nu, 1) / 16 + 0.25 * r * r * sx0(nu) + r * r * sxs(nu, 2) / 16

        def sz2(nu):
            return szz(nu) + sxs(nu, 1) / 16 + r * r * sxs(nu, 2) / 16

        gx = sy2(0.0) + sz2(eps_m)
        gy = sx2(eps_m) + sz2(eps_m)
        gz = sy2(0.0) + sx2(eps_m)
        return _build(gx, gy, gz, gy, 0.5 * (gx + gz), Frame.FRAME2, Scenario.CCD_PHASE, v, valid)
    sx = S("S_x", omega0)
    rate1 = ((0.75 + 1.25 * r * r) * sx + 0.25 * S("S_Omega", eps_m)
             + 0.25 * (S("S_z", Omega - eps_m) + S("S_z", Omega + eps_m)))
    rate2 = 0.5 * rate1 + 0.5 * S("S_z", Omega) + (0.25 + 0.75 * r * r) * sx
    return _build(rate2, rate1, rate2, rate1, rate2, Frame.FRAME2, Scenario.CCD_PHASE, v, valid)


def spinlock_psd_inversion(rate: float, T1: float) -> float:
    """S_z(Omega) from a measured spin-locking decay rate and the lab T1.

    Inverts 1/T1rho = 1/(2 T1) + S_z(Omega).
    """
    base = 0.5 / T1
    if rate < base * (1 - 1e-12):
        raise SpectrumError(f"spin-locking rate {rate:g}/s is below 1/(2 T1) = {base:g}/s")
    return max(rate - base, 0.0)


def rates(scenario, psd: NoisePSDSet, *, Omega: float, omega0: float, delta: float = 0.0,
          eps_m: float = 0.0, variant="exact", static: str = "raise") -> DecayRates:
    """Dispatch on ``scenario``."""
    sc = Scenario(scenario)
    if sc is Scenario.SINGLE_RESONANT:
        return rates_single_resonant(psd, Omega, omega0, variant, static)
    if sc is Scenario.SINGLE_DETUNED:
        return rates_single_detuned(psd, Omega, delta, omega0, variant, static)
    if sc is Scenario.CCD_AMPLITUDE:
        return rates_ccd_amplitude(psd, Omega, eps_m, omega0, variant, static)
    return rates_ccd_phase(psd, Omega, eps_m, omega0, variant, static)


def sweep_eps_m(scenario, psd: NoisePSDSet, eps_values, *, Omega: float, omega0: float,
                em_relative: Lorentzian | None = None, variant="exact", static: str = "raise") -> list[DecayRates]:
    """Rates over a list of modulation strengths.

    ``em_relative`` is the spectrum of a fractional modulation-amplitude noise
    eta (xi_em = eps_m * eta); it adds eps_m^2 * S_eta to ``S_em`` at each point.
    A fixed ``S_em`` only offsets the rates, a fractional one grows with eps_m.
    """
    out = []
    for e in eps_values:
        p = psd
        if em_relative is not None:
            p = replace(psd, S_em=psd.S_em + em_relative.scaled(float(e) ** 2))
        out.append(rates(scenario, p, Omega=Omega, omega0=omega0, eps_m=float(e), variant=variant, static=static))
    return out
