"""Deterministic Schroedinger evolution of a single qubit, frame changes, observables.

Integration uses the fourth-order Magnus step on a fixed grid: each step is
an exact SU(2) exponential, so unitarity only degrades by rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

from .model import (
    ConfigError,
    DriveConfig,
    Frame,
    Modulation,
    QubitState,
    field_frame1,
    field_lab,
    pauli_coefficients,
)

#: Default integration steps per period of the fastest frequency (>= 50 required).
STEPS_PER_CYCLE = 128
MAX_SUBSTEPS = 10 ** 8

_GAUSS = math.sqrt(3.0) / 6.0


class NumericError(ArithmeticError):
    """Non-finite or otherwise unusable numbers during integration."""


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError("TimeGrid needs n_points >= 2")
        if not self.t_end > self.t_start:
            raise ValueError("TimeGrid needs t_end > t_start")
        object.__setattr__(self, "n_points", int(self.n_points))

    @classmethod
    def from_step(cls, t_start: float, dt: float, n_points: int) -> "TimeGrid":
        return cls(t_start, t_start + dt * (n_points - 1), n_points)

    @property
    def dt(self) -> float:
        return (self.t_end - self.t_start) / (self.n_points - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on a time grid. ``psi`` has shape ``(n_points, 2)``."""

    grid: TimeGrid
    psi: np.ndarray
    frame: Frame = Frame.FRAME1

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def states(self) -> list[QubitState]:
        return [QubitState.from_vector(v) for v in self.psi]


@numba.njit(cache=True, nogil=True)
def _chain(k, psi0, stride):
    """Apply exp(-i(k0 + k.sigma)) step by step.

    k: (4, n_steps, B) float; psi0: (B, 2) complex. Returns the states after
    every ``stride`` steps, shape (n_steps // stride + 1, B, 2).
    """
    n = k.shape[1]
    nb = k.shape[2]
    out = np.empty((n // stride + 1, nb, 2), dtype=np.complex128)
    for b in range(nb):
        a = psi0[b, 0]
        c = psi0[b, 1]
        out[0, b, 0] = a
        out[0, b, 1] = c
        for j in range(n):
            kx = k[1, j, b]
            ky = k[2, j, b]
            kz = k[3, j, b]
            norm = math.sqrt(kx * kx + ky * ky + kz * kz)
            co = math.cos(norm)
            s = math.sin(norm) / norm if norm > 0.0 else 1.0
            na = co * a - 1j * s * (kz * a + (kx - 1j * ky) * c)
            nc = co * c - 1j * s * ((kx + 1j * ky) * a - kz * c)
            k0 = k[0, j, b]
            if k0 != 0.0:
                ph = complex(math.cos(k0), -math.sin(k0))
                na = ph * na
                nc = ph * nc
            a = na
            c = nc
            if (j + 1) % stride == 0:
                out[(j + 1) // stride, b, 0] = a
                out[(j + 1) // stride, b, 1] = c
    return out


def magnus_vectors(f1: np.ndarray, f2: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order Magnus exponent from Pauli fields at the two Gauss nodes.

    ``f1``, ``f2``: (4, ...) coefficients at ``t + h(1/2 -+ sqrt(3)/6)``.
    Returns K (4, ...) with the step propagator ``exp(-i K)``.
    """
    k = np.empty(np.broadcast_shapes(f1.shape, f2.shape))
    k[0] = 0.5 * h * (f1[0] + f2[0])
    k[1:] = 0.5 * h * (f1[1:] + f2[1:])
    c = (math.sqrt(3.0) / 6.0) * h * h
    a1, a2 = f1[1:], f2[1:]
    k[1] += c * (a2[1] * a1[2] - a2[2] * a1[1])
    k[2] += c * (a2[2] * a1[0] - a2[0] * a1[2])
    k[3] += c * (a2[0] * a1[1] - a2[1] * a1[0])
    return k


def substeps_for(dt: float, f_max: float | None, steps_per_cycle: int = STEPS_PER_CYCLE) -> int:
    """Integration substeps per grid interval; ``f_max`` is an angular frequency."""
    if not f_max:
        return 1
    n = dt * steps_per_cycle * f_max / (2 * math.pi)
    if not n < MAX_SUBSTEPS:
        raise NumericError(f"drive frequency {f_max:g} rad/s needs {n:g} substeps per grid interval")
    return max(1, math.ceil(n * (1 - 1e-12)))


def step_nodes(grid: TimeGrid, m: int):
    """Gauss nodes of all integration steps and the step size."""
    h = grid.dt / m
    starts = grid.t_start + h * np.arange((grid.n_points - 1) * m)
    return starts + h * (0.5 - _GAUSS), starts + h * (0.5 + _GAUSS), h


def evolve_field(field: Callable, psi0, grid: TimeGrid, substeps: int = 1) -> np.ndarray:
    """Evolve states under a Pauli-coefficient field.

    ``field(t)`` maps an array of times to (4, n) or (4, n, B) coefficients.
    ``psi0`` is (2,) or (B, 2). Returns (n_points, 2) or (n_points, B, 2).
    """
    psi0 = np.asarray(psi0, dtype=complex)
    single = psi0.ndim == 1
    batch = psi0.reshape(-1, 2)
    t1, t2, h = step_nodes(grid, substeps)
    f1 = np.asarray(field(t1), dtype=float)
    f2 = np.asarray(field(t2), dtype=float)
    if not (np.all(np.isfinite(f1)) and np.all(np.isfinite(f2))):
        raise NumericError("Hamiltonian has non-finite entries")
    k = magnus_vectors(f1, f2, h)
    if k.ndim == 2:
        k = np.broadcast_to(k[:, :, None], k.shape + (batch.shape[0],))
    out = _chain(np.ascontiguousarray(k), np.ascontiguousarray(batch), substeps)
    return out[:, 0, :] if single else out


def propagate(h: Callable, psi0, grid: TimeGrid, *, f_max: float | None = None,
              steps_per_cycle: int = STEPS_PER_CYCLE, frame: Frame = Frame.FRAME1) -> Trajectory:
    """Solve i d/dt psi = H(t) psi on ``grid``.

    ``h(t)`` returns Hermitian (n, 2, 2) matrices for an array of times.
    ``f_max`` (rad/s) is the fastest frequency in H; the grid is subdivided
    internally so that each period gets at least ``steps_per_cycle`` steps.
    """
    if not isinstance(grid, TimeGrid):
        raise ValueError("grid must be a TimeGrid")
    if isinstance(psi0, QubitState):
        psi0 = psi0.vector
    m = substeps_for(grid.dt, f_max, steps_per_cycle)
    psi = evolve_field(lambda t: pauli_coefficients(h(t)), psi0, grid, m)
    return Trajectory(grid, psi, Frame(frame))


def evolve(cfg: DriveConfig, psi0, grid: TimeGrid, frame: Frame = Frame.FRAME1, *,
           allow_lab: bool = False, steps_per_cycle: int = STEPS_PER_CYCLE) -> Trajectory:
    """Propagate under the drive of ``cfg`` in the lab or first rotating frame.

    Lab-frame runs resolve the GHz carrier and are opt-in via ``allow_lab``.
    """
    frame = Frame(frame)
    if isinstance(psi0, QubitState):
        psi0 = psi0.vector
    if frame is Frame.LAB:
        if not allow_lab:
            raise ConfigError("lab-frame evolution resolves omega0; pass allow_lab=True")
        fn = lambda t: field_lab(cfg, t)  # noqa: E731
    elif frame is Frame.FRAME1:
        fn = lambda t: field_frame1(cfg, t)  # noqa: E731
    else:
        traj = evolve(cfg, psi0, grid, Frame.FRAME1, steps_per_cycle=steps_per_cycle)
        return to_frame(traj, Frame.FRAME2, cfg)
    m = substeps_for(grid.dt, cfg.max_frequency(frame), steps_per_cycle)
    return Trajectory(grid, evolve_field(fn, psi0, grid, m), frame)


# --- observables -------------------------------------------------------


def population0(traj) -> np.ndarray:
    psi = traj.psi if isinstance(traj, Trajectory) else np.asarray(traj)
    return np.abs(psi[..., 0]) ** 2


def bloch(psi) -> np.ndarray:
    """Bloch components (3, ...) of states with trailing axis of length 2."""
    psi = traj_psi(psi)
    c = np.conj(psi[..., 0]) * psi[..., 1]
    return np.stack([2 * c.real, 2 * c.imag, np.abs(psi[..., 0]) ** 2 - np.abs(psi[..., 1]) ** 2])


def expectation(psi, axis) -> np.ndarray:
    """<axis . sigma> for each state."""
    return np.tensordot(np.asarray(axis, dtype=float), bloch(psi), axes=1)


def traj_psi(x) -> np.ndarray:
    return x.psi if isinstance(x, Trajectory) else np.asarray(x)


# --- frames ------------------------------------------------------------


def frame1_phase(cfg: DriveConfig, t) -> np.ndarray:
    """Accumulated rotation angle of the first rotating frame."""
    t = np.asarray(t, dtype=float)
    phase = cfg.omega * t
    if cfg.modulation is Modulation.PHASE:
        phase = phase + 2 * cfg.eps_m / cfg.Omega * np.cos(cfg.omega_m * t + cfg.phi_m)
    return phase


def _rotate_z(psi, angle):
    """exp(i angle sz / 2) psi."""
    out = np.empty_like(psi)
    e = np.exp(0.5j * angle)
    out[..., 0] = e * psi[..., 0]
    out[..., 1] = np.conj(e) * psi[..., 1]
    return out


def _rotate_axis(psi, angle, axis):
    """exp(i angle (n.sigma) / 2) psi for a unit vector n."""
    nx, ny, nz = axis
    c = np.cos(angle / 2)
    s = np.sin(angle / 2)
    a, b = psi[..., 0], psi[..., 1]
    out = np.empty_like(psi)
    out[..., 0] = c * a + 1j * s * (nz * a + (nx - 1j * ny) * b)
    out[..., 1] = c * b + 1j * s * ((nx + 1j * ny) * a - nz * b)
    return out


def _expand(angle, psi):
    angle = np.asarray(angle)
    return angle.reshape(angle.shape + (1,) * (psi.ndim - 1 - angle.ndim))


def frame_transform(psi, t, source: Frame, target: Frame, cfg: DriveConfig) -> np.ndarray:
    """Map states at times ``t`` (leading axis) from ``source`` to ``target`` frame.

    Lab -> frame 1 multiplies by exp(i Phi(t) sz/2) with Phi the accumulated
    carrier phase (plus the phase-modulation term). Frame 1 -> frame 2
    multiplies by exp(i omega_m t (x'.sigma)/2), x' the drive axis rotated by
    phi0 about z.
    """
    source, target = Frame(source), Frame(target)
    psi = np.asarray(psi, dtype=complex)
    t = np.asarray(t, dtype=float)
    order = [Frame.LAB, Frame.FRAME1, Frame.FRAME2]
    i, j = order.index(source), order.index(target)
    if i == j:
        raise ValueError(f"source and target frame are both {source.value}")
    x_axis = (math.cos(cfg.phi0), math.sin(cfg.phi0), 0.0)
    while i != j:
        if i < j:
            if i == 0:
                psi = _rotate_z(psi, _expand(frame1_phase(cfg, t), psi))
            else:
                psi = _rotate_axis(psi, _expand(cfg.omega_m * t, psi), x_axis)
            i += 1
        else:
            if i == 1:
                psi = _rotate_z(psi, _expand(-frame1_phase(cfg, t), psi))
            else:
                psi = _rotate_axis(psi, _expand(-cfg.omega_m * t, psi), x_axis)
            i -= 1
    return psi


def to_frame(traj: Trajectory, target: Frame, cfg: DriveConfig) -> Trajectory:
    psi = frame_transform(traj.psi, traj.times, traj.frame, target, cfg)
    return Trajectory(traj.grid, psi, Frame(target))
