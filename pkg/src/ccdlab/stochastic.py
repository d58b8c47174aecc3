"""Classical noise realizations and Monte Carlo averaging of driven-qubit signals.

Noise enters the first-rotating-frame Hamiltonian:

* ``xi_z`` adds to the sigma_z coefficient,
* ``xi_Omega`` adds ``xi/2`` along the drive axis x',
* ``xi_em`` adds to the modulation strength (the phase-modulation index for
  phase modulation),
* ``xi_x`` is the lab transverse noise, entering as
  ``xi (cos Phi(t) sigma_x - sin Phi(t) sigma_y)`` with Phi the frame phase;
  this resolves the carrier and is costly.

Each noise value is held constant over one integration step. Trajectory k
draws spec j from ``SeedSequence([base_seed, k, j, spec.seed])``, so results
do not depend on batching or thread count.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .analysis import FitError, FitModel, fit
from .evolution import (
    STEPS_PER_CYCLE,
    TimeGrid,
    bloch,
    evolve,
    evolve_field,
    frame1_phase,
    frame_transform,
    substeps_for,
)
from .model import ConfigError, DriveConfig, Frame, Lorentzian, Modulation, QubitState, StaticGaussian, field_frame1

#: Upper bound on batch size x integration steps held in memory at once.
MAX_BATCH_CELLS = 4_000_000


class Target(str, enum.Enum):
    XI_X = "xi_x"
    XI_Z = "xi_z"
    XI_OMEGA = "xi_Omega"
    XI_EM = "xi_em"


@dataclass(frozen=True)
class OU:
    """Ornstein-Uhlenbeck noise: correlation variance * exp(-|tau|/tau_c)."""

    variance: float
    tau_c: float

    def __post_init__(self):
        if self.variance < 0 or not self.tau_c > 0:
            raise ConfigError("OU needs variance >= 0 and tau_c > 0")

    def psd(self) -> Lorentzian:
        return Lorentzian(self.variance, self.tau_c)


@dataclass(frozen=True)
class WhiteBandLimited:
    """Approximately white noise of two-sided level ``level`` up to ``cutoff`` (rad/s).

    Realized as OU noise with tau_c = 1/cutoff and S(0) = level.
    """

    level: float
    cutoff: float

    def __post_init__(self):
        if self.level < 0 or not self.cutoff > 0:
            raise ConfigError("WhiteBandLimited needs level >= 0 and cutoff > 0")

    def as_ou(self) -> OU:
        return OU(self.level * self.cutoff / 2, 1.0 / self.cutoff)

    def psd(self) -> Lorentzian:
        return self.as_ou().psd()


Source = OU | WhiteBandLimited | StaticGaussian


@dataclass(frozen=True)
class NoiseTrajectorySpec:
    source: Source
    target: Target
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "target", Target(self.target))
        if not isinstance(self.source, (OU, WhiteBandLimited, StaticGaussian)):
            raise ConfigError(f"unsupported noise source {self.source!r}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def correlation_time(self) -> float:
        src = self.source.as_ou() if isinstance(self.source, WhiteBandLimited) else self.source
        return src.tau_c if isinstance(src, OU) else math.inf


def _generator(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in key])))


def ou_filter(variance: float, tau_c: float, dt: float, normals: np.ndarray) -> np.ndarray:
    """Exact OU recursion over the last axis, started from the stationary law.

    ``x_0 = sigma g_0``, ``x_{k+1} = x_k e^{-dt/tau_c} + sigma sqrt(1 - e^{-2 dt/tau_c}) g_{k+1}``.
    """
    sigma = math.sqrt(variance)
    a = math.exp(-dt / tau_c)
    u = normals * (sigma * math.sqrt(-math.expm1(-2 * dt / tau_c)))
    u[..., :1] = normals[..., :1] * sigma
    return lfilter([1.0], [1.0, -a], u, axis=-1)


def ou_trajectory(spec: NoiseTrajectorySpec, dt: float, n: int) -> np.ndarray:
    """One realization of ``n`` samples spaced ``dt``, seeded by ``spec.seed``."""
    if not dt > 0:
        raise ConfigError("dt must be positive")
    if n == 0:
        return np.zeros(0)
    g = _generator(spec.seed).standard_normal(n)
    return _realize(spec.source, dt, g)


def _realize(source, dt, normals):
    if isinstance(source, StaticGaussian):
        return np.full(normals.shape, source.sigma * normals[..., :1])
    ou = source.as_ou() if isinstance(source, WhiteBandLimited) else source
    if ou.variance == 0:
        return np.zeros(normals.shape)
    return ou_filter(ou.variance, ou.tau_c, dt, normals)


def validate_specs(specs) -> list[NoiseTrajectorySpec]:
    specs = list(specs)
    seen = set()
    for s in specs:
        key = (s.target, type(s.source).__name__)
        if key in seen:
            raise ConfigError(f"duplicate {key[1]} noise on {s.target.value}")
        seen.add(key)
    return specs


def realizations(specs, dt: float, n_steps: int, trajectories, base_seed: int) -> dict:
    """Summed noise per target, arrays of shape (n_steps, len(trajectories))."""
    specs = validate_specs(specs)
    out = {}
    for j, s in enumerate(specs):
        cols = np.empty((len(trajectories), n_steps))
        for i, k in enumerate(trajectories):
            rng = _generator(base_seed, k, j, s.seed)
            if isinstance(s.source, StaticGaussian):
                cols[i] = s.source.sigma * rng.standard_normal()
            else:
                cols[i] = rng.standard_normal(n_steps)
        if not isinstance(s.source, StaticGaussian):
            cols = _realize(s.source, dt, cols)
        out[s.target] = out.get(s.target, 0.0) + cols.T
    return out


# --- Monte Carlo -------------------------------------------------------


def _substeps(cfg: DriveConfig, specs, grid: TimeGrid, steps_per_cycle: int) -> int:
    f_max = cfg.max_frequency(Frame.FRAME1)
    if any(s.target is Target.XI_X for s in specs):
        f_max = max(f_max, cfg.omega + cfg.omega_m)
    m = substeps_for(grid.dt, f_max, steps_per_cycle)
    tau = min((s.correlation_time for s in specs), default=math.inf)
    if math.isfinite(tau):
        m = max(m, math.ceil(grid.dt / (tau / 10) * (1 - 1e-12)))
    return m


def _noisy_field(cfg: DriveConfig, noise: dict, batch: int):
    c0, s0 = math.cos(cfg.phi0), math.sin(cfg.phi0)

    def field(t):
        f = np.repeat(field_frame1(cfg, t)[:, :, None], batch, axis=2)
        if Target.XI_Z in noise:
            f[3] += noise[Target.XI_Z]
        if Target.XI_OMEGA in noise:
            f[1] += 0.5 * c0 * noise[Target.XI_OMEGA]
            f[2] += 0.5 * s0 * noise[Target.XI_OMEGA]
        if Target.XI_EM in noise:
            if cfg.modulation is Modulation.AMPLITUDE:
                m = np.cos(cfg.omega_m * t + cfg.phi_m)[:, None] * noise[Target.XI_EM]
                f[1] -= s0 * m
                f[2] += c0 * m
            elif cfg.modulation is Modulation.PHASE:
                f[3] += (cfg.omega_m / cfg.Omega) * np.sin(cfg.omega_m * t + cfg.phi_m)[:, None] * noise[Target.XI_EM]
        if Target.XI_X in noise:
            phase = frame1_phase(cfg, t)[:, None]
            f[1] += np.cos(phase) * noise[Target.XI_X]
            f[2] -= np.sin(phase) * noise[Target.XI_X]
        return f

    return field


def _observe(psi, times, cfg, observable, frame):
    """Observable per (time, trajectory) from states in frame 1."""
    frame = Frame(frame)
    if frame is Frame.FRAME2:
        psi = frame_transform(psi, times, Frame.FRAME1, Frame.FRAME2, cfg)
    elif frame is not Frame.FRAME1:
        raise ConfigError("Monte Carlo observables are available in frame1 or frame2")
    if isinstance(observable, str):
        if observable != "p0":
            raise ConfigError(f"unknown observable {observable!r}")
        return np.abs(psi[..., 0]) ** 2
    axis = np.asarray(observable, dtype=float)
    return np.tensordot(axis / np.linalg.norm(axis), bloch(psi), axes=1)


def _threads(threads):
    if threads is None:
        env = os.environ.get("CCDLAB_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def mc_samples(cfg: DriveConfig, specs, psi0, grid: TimeGrid, n_traj: int, base_seed: int, *,
               observable="p0", frame=Frame.FRAME1, threads=None,
               steps_per_cycle: int = STEPS_PER_CYCLE, batch_size: int | None = None) -> np.ndarray:
    """Observable for every trajectory, shape (n_traj, n_points)."""
    specs = validate_specs(specs)
    if n_traj < 1:
        raise ConfigError("n_traj must be >= 1")
    psi0 = psi0.vector if isinstance(psi0, QubitState) else np.asarray(psi0, dtype=complex)
    m = _substeps(cfg, specs, grid, steps_per_cycle)
    n_steps = (grid.n_points - 1) * m
    h = grid.dt / m
    if batch_size is None:
        batch_size = int(max(1, min(250, MAX_BATCH_CELLS // n_steps)))
    batches = [range(b, min(b + batch_size, n_traj)) for b in range(0, n_traj, batch_size)]
    times = grid.times

    def run(traj_ids):
        noise = realizations(specs, h, n_steps, traj_ids, base_seed)
        start = np.repeat(psi0[None, :], len(traj_ids), axis=0)
        psi = evolve_field(_noisy_field(cfg, noise, len(traj_ids)), start, grid, m)
        return _observe(psi, times, cfg, observable, frame).T

    n_workers = min(_threads(threads), len(batches))
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            parts = list(pool.map(run, batches))
    else:
        parts = [run(b) for b in batches]
    return np.concatenate(parts, axis=0)


def pairwise_mean(samples: np.ndarray) -> np.ndarray:
    """Mean over axis 0 summed in a fixed binary tree (independent of batching)."""
    rows = [samples[i] for i in range(samples.shape[0])]
    while len(rows) > 1:
        nxt = [rows[i] + rows[i + 1] for i in range(0, len(rows) - 1, 2)]
        if len(rows) % 2:
            nxt.append(rows[-1])
        rows = nxt
    return rows[0] / samples.shape[0]


def mc_signal(cfg: DriveConfig, specs, psi0, grid: TimeGrid, n_traj: int, base_seed: int, **kw):
    """Trajectory-averaged observable and its standard error per time point.

    Keywords as for :func:`mc_samples`; the default observable is P|0>.
    Without noise specs the deterministic evolution is returned with zero error.
    """
    specs = validate_specs(specs)
    if not specs:
        traj = evolve(cfg, psi0, grid, steps_per_cycle=kw.get("steps_per_cycle", STEPS_PER_CYCLE))
        psi = traj.psi[:, None, :]
        value = _observe(psi, grid.times, cfg, kw.get("observable", "p0"), kw.get("frame", Frame.FRAME1))[:, 0]
        return value, np.zeros_like(value)
    samples = mc_samples(cfg, specs, psi0, grid, n_traj, base_seed, **kw)
    return summarize(samples)


def summarize(samples: np.ndarray):
    mean = pairwise_mean(samples)
    n = samples.shape[0]
    if n < 2:
        return mean, np.zeros_like(mean)
    var = pairwise_mean((samples - mean) ** 2) * n / (n - 1)
    return mean, np.sqrt(var / n)


def _fit_rate(t, y, model):
    model = FitModel(model)
    if np.ptp(y) <= 1e-9 * max(1.0, float(np.max(np.abs(y)))):
        return 0.0
    r = fit(t, y, model)
    rate = r.rate
    # refit on the first 3/rate of the record
    t_end = t[0] + 3.0 / rate
    keep = t <= t_end
    n_min = 8 * (3 if model is FitModel.EXP else 6)
    if n_min <= keep.sum() < t.size:
        r = fit(t[keep], y[keep], model, hints=r.params)
    return r.rate


def decay_rate_from_samples(t, samples: np.ndarray, model=FitModel.EXP, n_boot: int = 20, seed: int = 0):
    """Fitted 1/tau of the mean signal and a bootstrap 95 % half-width."""
    mean = pairwise_mean(samples)
    rate = _fit_rate(t, mean, model)
    rng = _generator(seed, 0xB007)
    n = samples.shape[0]
    boot = []
    for _ in range(n_boot):
        idx = np.sort(rng.integers(0, n, n))
        boot.append(_fit_rate(t, pairwise_mean(samples[idx]), model))
    half = 1.96 * float(np.std(boot, ddof=1)) if n_boot > 1 else math.nan
    return rate, half


def mc_decay_rate(cfg: DriveConfig, specs, psi0, grid: TimeGrid, n_traj: int, base_seed: int,
                  model=FitModel.EXP, *, n_boot: int = 20, **kw):
    """Monte Carlo decay rate (1/s) and bootstrap half-width.

    ``model`` is an analysis fit model; ``exp_decay`` suits spin-locking
    signals, ``multi_damped_cosine`` oscillating ones. Fit failures raise
    :class:`ccdlab.analysis.FitError` with the partial result attached.
    """
    specs = validate_specs(specs)
    if specs:
        samples = mc_samples(cfg, specs, psi0, grid, n_traj, base_seed, **kw)
    else:
        samples = mc_signal(cfg, specs, psi0, grid, n_traj, base_seed, **kw)[0][None, :]
    try:
        return decay_rate_from_samples(grid.times, samples, model, n_boot, base_seed)
    except FitError:
        raise
    except ValueError as exc:
        raise FitError(f"decay fit failed: {exc}") from exc
