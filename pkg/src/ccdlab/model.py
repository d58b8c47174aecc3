"""Domain types, drive waveforms and two-level Hamiltonians.

All frequencies are angular (rad/s), all times in seconds. A Hamiltonian
``H = h0*I + hx*sx + hy*sy + hz*sz`` is represented internally by its Pauli
coefficients ``(h0, hx, hy, hz)``; the public ``hamiltonian_*`` functions
return explicit 2x2 matrices.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

TWO_PI = 2.0 * math.pi

#: NV |m_S=0> <-> |m_S=-1> splitting of the driven hyperfine line.
DEFAULT_OMEGA0 = TWO_PI * 2.2072e9

SIGMA_I = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.stack([SIGMA_I, SIGMA_X, SIGMA_Y, SIGMA_Z])


class ConfigError(ValueError):
    """Invalid physical configuration."""


class SpectrumError(ValueError):
    """A spectral function was evaluated where it is not defined."""


class Modulation(str, enum.Enum):
    AMPLITUDE = "amplitude"
    PHASE = "phase"
    NONE = "none"


class Frame(str, enum.Enum):
    LAB = "lab"
    FRAME1 = "frame1"
    FRAME2 = "frame2"


@dataclass(frozen=True)
class DriveConfig:
    """Drive parameters of a (possibly modulated) resonant microwave.

    ``omega`` and ``delta`` are redundant (``delta = omega - omega0``); give
    either one and the other is filled in.
    """

    Omega: float
    omega_m: float = 0.0
    eps_m: float = 0.0
    delta: float | None = None
    omega: float | None = None
    omega0: float = DEFAULT_OMEGA0
    phi0: float = 0.0
    phi_m: float = 0.0
    modulation: Modulation = Modulation.AMPLITUDE

    def __post_init__(self):
        mod = Modulation(self.modulation)
        object.__setattr__(self, "modulation", mod)
        if self.delta is None and self.omega is None:
            object.__setattr__(self, "delta", 0.0)
        if self.omega is None:
            object.__setattr__(self, "omega", self.omega0 + self.delta)
        elif self.delta is None:
            object.__setattr__(self, "delta", self.omega - self.omega0)
        else:
            tol = 4 * np.finfo(float).eps * max(abs(self.omega), abs(self.omega0), 1.0)
            if abs((self.omega - self.omega0) - self.delta) > tol:
                raise ConfigError(
                    f"delta={self.delta} inconsistent with omega-omega0={self.omega - self.omega0}"
                )
        values = [self.Omega, self.omega_m, self.eps_m, self.delta, self.omega, self.omega0,
                  self.phi0, self.phi_m]
        if not all(math.isfinite(v) for v in values):
            raise ConfigError("drive parameters must be finite")
        if self.Omega < 0 or self.eps_m < 0:
            raise ConfigError("Omega and eps_m must be nonnegative")
        if mod is not Modulation.NONE and self.omega_m <= 0:
            raise ConfigError("omega_m must be positive for a modulated drive")
        if mod is Modulation.PHASE and self.Omega == 0:
            raise ConfigError("phase modulation needs Omega > 0")

    @classmethod
    def resonant_ccd(cls, Omega, eps_m, omega_m=None, **kw) -> "DriveConfig":
        """CCD drive with ``omega_m = Omega`` unless given."""
        return cls(Omega=Omega, eps_m=eps_m, omega_m=Omega if omega_m is None else omega_m, **kw)

    def with_(self, **changes) -> "DriveConfig":
        """Copy with changes; keeps ``omega`` consistent when ``delta`` changes."""
        if "delta" in changes and "omega" not in changes:
            changes["omega"] = None
        if "omega0" in changes and "omega" not in changes and "delta" not in changes:
            changes["omega"] = None
        return replace(self, **changes)

    @property
    def period(self) -> float:
        return TWO_PI / self.omega_m

    @property
    def Omega_R(self) -> float:
        return math.hypot(self.Omega, self.delta)

    def rwa_flags(self, first_ratio=0.01, second_ratio=0.1) -> dict:
        """Whether the rotating-wave conditions hold (warning thresholds only)."""
        first = max(self.Omega, self.eps_m) <= first_ratio * self.omega0
        second = self.Omega > 0 and self.eps_m <= second_ratio * self.Omega
        return {"first_rwa": bool(first), "second_rwa": bool(second)}

    def max_frequency(self, frame: Frame = Frame.FRAME1) -> float:
        """Largest angular frequency present in the Hamiltonian of ``frame``."""
        rates = [abs(self.delta), self.Omega, self.eps_m]
        if self.modulation is not Modulation.NONE:
            rates.append(self.omega_m)
        if self.modulation is Modulation.PHASE:
            rates.append(self.eps_m * self.omega_m / self.Omega)
        if Frame(frame) is Frame.LAB:
            rates += [self.omega0, self.omega, self.omega + self.omega_m]
        return max(rates)


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def norm(self) -> float:
        return math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)


@dataclass(frozen=True)
class QubitState:
    """Normalized pure state ``a0|0> + a1|1>``, global phase fixed so a0 >= 0."""

    a0: complex
    a1: complex

    def __post_init__(self):
        a0, a1 = complex(self.a0), complex(self.a1)
        norm = math.sqrt(abs(a0) ** 2 + abs(a1) ** 2)
        if not math.isfinite(norm) or norm == 0:
            raise ValueError("state vector must be finite and nonzero")
        a0, a1 = a0 / norm, a1 / norm
        if abs(a0) > 1e-12:
            phase = a0 / abs(a0)
            a0, a1 = complex(abs(a0), 0.0), a1 / phase
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "a1", a1)

    @classmethod
    def from_vector(cls, v) -> "QubitState":
        v = np.asarray(v, dtype=complex).reshape(2)
        return cls(v[0], v[1])

    @classmethod
    def from_angles(cls, theta: float, phi: float = 0.0) -> "QubitState":
        """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""
        return cls(math.cos(theta / 2), complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2))

    @classmethod
    def from_bloch(cls, r) -> "QubitState":
        x, y, z = (float(c) for c in r)
        return cls.from_angles(math.atan2(math.hypot(x, y), z), math.atan2(y, x))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a0, self.a1], dtype=complex)

    def bloch(self) -> BlochVector:
        c = self.a0.conjugate() * self.a1
        return BlochVector(2 * c.real, 2 * c.imag, abs(self.a0) ** 2 - abs(self.a1) ** 2)

    def overlap(self, other: "QubitState") -> complex:
        return complex(np.vdot(self.vector, other.vector))


KET0 = QubitState(1, 0)
KET1 = QubitState(0, 1)
#: Second initial state used for center-band protection experiments.
TILTED_STATE = QubitState.from_angles(math.pi / 4, math.pi / 4)


# --- noise spectra -------------------------------------------------------
#
# Two-sided spectra in angular frequency: <xi(t1) xi(t2)> = (1/2pi) Int S(nu) e^{-i nu (t2-t1)} dnu.


@dataclass(frozen=True)
class White:
    level: float = 0.0

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("white level must be nonnegative")

    def evaluate(self, nu, static="raise"):
        return np.full(np.shape(nu), float(self.level)) if np.ndim(nu) else float(self.level)

    __call__ = evaluate

    def scaled(self, k: float) -> "White":
        return White(self.level * k)

    def correlation_rates(self) -> list[float]:
        return []


@dataclass(frozen=True)
class Lorentzian:
    """PSD of an Ornstein-Uhlenbeck process with the given variance."""

    variance: float
    tau_c: float

    def __post_init__(self):
        if self.variance < 0 or self.tau_c <= 0:
            raise ValueError("Lorentzian needs variance >= 0 and tau_c > 0")

    def evaluate(self, nu, static="raise"):
        nu = np.asarray(nu, dtype=float)
        out = 2 * self.variance * self.tau_c / (1 + (nu * self.tau_c) ** 2)
        return out if out.ndim else float(out)

    __call__ = evaluate

    def scaled(self, k: float) -> "Lorentzian":
        return Lorentzian(self.variance * k, self.tau_c)

    def correlation_rates(self) -> list[float]:
        return [1.0 / self.tau_c]


@dataclass(frozen=True)
class StaticGaussian:
    """Quasi-static Gaussian offset (a delta peak at nu = 0).

    Evaluates to 0 away from nu = 0. At nu = 0 the value diverges: with
    ``static="raise"`` a :class:`SpectrumError` is raised, with
    ``static="zero"`` it contributes nothing. Static spreads are handled by
    the ensemble and stochastic modules, never by the rate formulas.
    """

    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    def evaluate(self, nu, static="raise"):
        nu_arr = np.asarray(nu, dtype=float)
        if self.sigma > 0 and static == "raise" and np.any(nu_arr == 0):
            raise SpectrumError("static Gaussian spectrum is divergent at nu = 0")
        out = np.zeros(nu_arr.shape)
        return out if out.ndim else 0.0

    __call__ = evaluate

    def scaled(self, k: float) -> "StaticGaussian":
        return StaticGaussian(self.sigma * math.sqrt(k))

    def correlation_rates(self) -> list[float]:
        return []


@dataclass(frozen=True)
class Sum:
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    def evaluate(self, nu, static="raise"):
        total = 0.0
        for term in self.terms:
            total = total + term.evaluate(nu, static)
        return total

    __call__ = evaluate

    def scaled(self, k: float) -> "Sum":
        return Sum(tuple(t.scaled(k) for t in self.terms))

    def correlation_rates(self) -> list[float]:
        return [r for t in self.terms for r in t.correlation_rates()]


SpectralFunction = Union[White, Lorentzian, StaticGaussian, Sum]


def _add(a, b):
    left = a.terms if isinstance(a, Sum) else (a,)
    right = b.terms if isinstance(b, Sum) else (b,)
    return Sum(left + right)


for _cls in (White, Lorentzian, StaticGaussian, Sum):
    _cls.__add__ = _add


@dataclass(frozen=True)
class NoisePSDSet:
    """Lab-frame spectra of the transverse, longitudinal, drive and modulation noise."""

    S_x: SpectralFunction = field(default_factory=White)
    S_z: SpectralFunction = field(default_factory=White)
    S_Omega: SpectralFunction = field(default_factory=White)
    S_em: SpectralFunction = field(default_factory=White)

    def scaled(self, k: float) -> "NoisePSDSet":
        return NoisePSDSet(*(getattr(self, n).scaled(k) for n in ("S_x", "S_z", "S_Omega", "S_em")))

    def one_sided(self) -> "NoisePSDSet":
        """Spectra in the normalization the decay-rate formulas expect.

        The rate formulas in :mod:`ccdlab.gbe` are exact (to second order) for
        one-sided spectra ``S+(nu) = 2 Int C(tau) e^{i nu tau} dtau``, i.e.
        twice the two-sided spectra defined above.
        """
        return self.scaled(2.0)

    def correlation_rates(self) -> list[float]:
        return [r for n in ("S_x", "S_z", "S_Omega", "S_em") for r in getattr(self, n).correlation_rates()]


@dataclass(frozen=True)
class InhomogeneityModel:
    """Static drive/detuning spread plus hyperfine sublevels.

    Defaults: 1.6 % drive spread, (2pi) 0.32 MHz detuning spread, 13 us
    intrinsic coherence, A = (2pi) 2.2 MHz, 73 % in the driven sublevel.
    """

    sigma_Omega_rel: float = 0.016
    sigma_omega: float = TWO_PI * 0.32e6
    tau0: float = 13e-6
    hyperfine_A: float = TWO_PI * 2.2e6
    sublevel_populations: tuple = (0.135, 0.73, 0.135)
    sublevel_offsets: tuple | None = None

    def __post_init__(self):
        pops = tuple(float(p) for p in self.sublevel_populations)
        object.__setattr__(self, "sublevel_populations", pops)
        if self.sublevel_offsets is None:
            A = self.hyperfine_A
            object.__setattr__(self, "sublevel_offsets", (-A, 0.0, A))
        else:
            object.__setattr__(self, "sublevel_offsets", tuple(float(o) for o in self.sublevel_offsets))
        if len(pops) != len(self.sublevel_offsets):
            raise ConfigError("need one offset per sublevel population")
        if any(p < 0 for p in pops) or abs(sum(pops) - 1) > 1e-9:
            raise ConfigError("sublevel populations must be nonnegative and sum to 1")
        if self.sigma_Omega_rel < 0 or self.sigma_omega < 0:
            raise ConfigError("inhomogeneity widths must be nonnegative")
        if not self.tau0 > 0:
            raise ConfigError("tau0 must be positive (math.inf for none)")

    @classmethod
    def single_sublevel(cls, **kw) -> "InhomogeneityModel":
        return cls(sublevel_populations=(1.0,), sublevel_offsets=(0.0,), **kw)


# --- waveforms and Hamiltonians ------------------------------------------


def waveform(cfg: DriveConfig, t):
    """Lab-frame coefficient of sigma_x at time ``t``."""
    t = np.asarray(t, dtype=float)
    carrier = cfg.omega * t + cfg.phi0
    if cfg.modulation is Modulation.PHASE:
        if cfg.Omega == 0:
            raise ConfigError("phase modulation needs Omega > 0")
        out = cfg.Omega * np.cos(carrier + 2 * cfg.eps_m / cfg.Omega * np.cos(cfg.omega_m * t + cfg.phi_m))
    elif cfg.modulation is Modulation.AMPLITUDE:
        out = cfg.Omega * np.cos(carrier) - 2 * cfg.eps_m * np.sin(carrier) * np.cos(cfg.omega_m * t + cfg.phi_m)
    else:
        out = cfg.Omega * np.cos(carrier)
    return out if out.ndim else float(out)


def field_frame1(cfg: DriveConfig, t) -> np.ndarray:
    """Pauli coefficients (h0, hx, hy, hz) of the first-rotating-frame RWA Hamiltonian.

    Shape ``(4,) + shape(t)``. ``phi0`` rotates the transverse axes about z.
    """
    t = np.asarray(t, dtype=float)
    zero = np.zeros_like(t)
    hz = np.full_like(t, -cfg.delta / 2)
    # transverse field in the drive-fixed axes (x', y'), then rotated by phi0
    xp = np.full_like(t, cfg.Omega / 2)
    yp = zero.copy()
    if cfg.modulation is Modulation.AMPLITUDE:
        yp = cfg.eps_m * np.cos(cfg.omega_m * t + cfg.phi_m)
    elif cfg.modulation is Modulation.PHASE:
        hz = hz + cfg.eps_m * cfg.omega_m / cfg.Omega * np.sin(cfg.omega_m * t + cfg.phi_m)
    c, s = math.cos(cfg.phi0), math.sin(cfg.phi0)
    return np.stack([zero, c * xp - s * yp, s * xp + c * yp, hz])


def field_lab(cfg: DriveConfig, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    zero = np.zeros_like(t)
    return np.stack([zero, waveform(cfg, t) * np.ones_like(t), zero, np.full_like(t, cfg.omega0 / 2)])


def pauli_matrix(coeffs) -> np.ndarray:
    """(4, ...) Pauli coefficients -> (..., 2, 2) matrices."""
    coeffs = np.asarray(coeffs)
    return np.einsum("k...,kij->...ij", coeffs, PAULI)


def pauli_coefficients(H) -> np.ndarray:
    """(..., 2, 2) matrices -> (4, ...) real Pauli coefficients (Hermitian input)."""
    H = np.asarray(H, dtype=complex)
    c = np.einsum("kji,...ij->k...", PAULI, H) / 2
    return c.real


def hamiltonian_frame1(cfg: DriveConfig, t) -> np.ndarray:
    return pauli_matrix(field_frame1(cfg, t))


def hamiltonian_lab(cfg: DriveConfig, t) -> np.ndarray:
    return pauli_matrix(field_lab(cfg, t))


def second_frame_axis(phi0: float, phi_m: float) -> np.ndarray:
    """Unit vector of the static second-frame field (second RWA, resonance).

    The modulation term averages to ``(eps_m/2) n.sigma`` with
    ``n = cos(phi_m) y' + sin(phi_m) z`` and ``y' = (-sin phi0, cos phi0, 0)``;
    the same holds for both modulation kinds at ``omega_m = Omega``.
    """
    cm = math.cos(phi_m)
    return np.array([-math.sin(phi0) * cm, math.cos(phi0) * cm, math.sin(phi_m)])


def check_rwa(cfg: DriveConfig) -> None:
    flags = cfg.rwa_flags()
    if not flags["first_rwa"]:
        warnings.warn("Omega or eps_m not small against omega0: first RWA questionable", stacklevel=2)
