"""Command-line front end: ``ccdlab <command> --config run.yaml --out DIR``.

Config files are YAML. Frequencies are ordinary frequencies in MHz (the
code multiplies by 2 pi), times are in microseconds and phases in radians.
Noise and PSD levels are in 1/s. See README.md for the full grammar.

Exit codes: 0 success, 2 configuration error, 3 numeric or fit failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import analysis, ensemble, floquet, gbe, stochastic
from .evolution import NumericError, TimeGrid, evolve, population0
from .model import (
    DEFAULT_OMEGA0,
    TWO_PI,
    ConfigError,
    DriveConfig,
    Frame,
    InhomogeneityModel,
    Lorentzian,
    Modulation,
    NoisePSDSet,
    QubitState,
    SpectrumError,
    StaticGaussian,
    Sum,
    White,
)

log = logging.getLogger("ccdlab")

MHZ = TWO_PI * 1e6
US = 1e-6
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


# --- schema ------------------------------------------------------------


@dataclass
class AxisRange:
    start: float
    stop: float
    num: int

    def values(self) -> list[float]:
        return [float(v) for v in np.linspace(self.start, self.stop, self.num)]


Axis = typing.Union[list[float], AxisRange]


def axis_values(ax) -> list[float]:
    return ax.values() if isinstance(ax, AxisRange) else [float(v) for v in ax]


@dataclass
class DriveSection:
    Omega: float = 0.0
    omega_m: typing.Optional[float] = None
    eps_m: float = 0.0
    delta: float = 0.0
    omega0: float = DEFAULT_OMEGA0 / MHZ
    phi0: float = 0.0
    phi_m: float = 0.0
    modulation: str = "amplitude"

    def build(self, **override) -> DriveConfig:
        kw = dict(dataclasses.asdict(self), **override)
        mod = Modulation(kw["modulation"])
        omega_m = kw["omega_m"]
        if omega_m is None:
            omega_m = kw["Omega"] if mod is not Modulation.NONE else 0.0
        return DriveConfig(Omega=kw["Omega"] * MHZ, omega_m=omega_m * MHZ, eps_m=kw["eps_m"] * MHZ,
                           delta=kw["delta"] * MHZ, omega0=kw["omega0"] * MHZ, phi0=kw["phi0"],
                           phi_m=kw["phi_m"], modulation=mod)


@dataclass
class StateSection:
    ket: typing.Optional[str] = None
    theta: typing.Optional[float] = None
    phi: float = 0.0
    bloch: typing.Optional[list[float]] = None

    def build(self) -> QubitState:
        given = [self.ket is not None, self.theta is not None, self.bloch is not None]
        if sum(given) != 1:
            raise ConfigError("state: give exactly one of ket, theta or bloch")
        if self.ket is not None:
            return _named_state(self.ket)
        if self.theta is not None:
            return QubitState.from_angles(self.theta, self.phi)
        if len(self.bloch) != 3:
            raise ConfigError("state.bloch: need three components")
        return QubitState.from_bloch(self.bloch)


def _named_state(name: str) -> QubitState:
    axes = {"0": (0, 0, 1), "1": (0, 0, -1), "+x": (1, 0, 0), "-x": (-1, 0, 0), "+y": (0, 1, 0), "-y": (0, -1, 0)}
    if name not in axes:
        raise ConfigError(f"state: unknown ket {name!r} (use one of {sorted(axes)})")
    return QubitState.from_bloch(axes[name])


def build_state(s) -> QubitState:
    return _named_state(s) if isinstance(s, str) else s.build()


@dataclass
class GridSection:
    t_end: float
    n_points: int
    t_start: float = 0.0

    def build(self) -> TimeGrid:
        try:
            return TimeGrid(self.t_start * US, self.t_end * US, self.n_points)
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from exc


@dataclass
class SpectrumSection:
    """kind: white (level), lorentzian (sigma MHz, tau_c us), static_gaussian (sigma MHz), sum (terms)."""

    kind: str
    level: typing.Optional[float] = None
    sigma: typing.Optional[float] = None
    tau_c: typing.Optional[float] = None
    terms: typing.Optional[list["SpectrumSection"]] = None

    def build(self):
        k = self.kind
        if k == "white":
            return White(_need(self.level, "level"))
        if k == "lorentzian":
            return Lorentzian((_need(self.sigma, "sigma") * MHZ) ** 2, _need(self.tau_c, "tau_c") * US)
        if k == "static_gaussian":
            return StaticGaussian(_need(self.sigma, "sigma") * MHZ)
        if k == "sum":
            return Sum(tuple(t.build() for t in _need(self.terms, "terms")))
        raise ConfigError(f"unknown spectrum kind {k!r}")


def _need(value, name):
    if value is None:
        raise ConfigError(f"missing {name}")
    return value


@dataclass
class RelativeNoiseSection:
    """Fractional modulation-amplitude noise: sigma is a fraction of eps_m, tau_c in us."""

    sigma: float
    tau_c: float

    def build(self) -> Lorentzian:
        return Lorentzian(self.sigma ** 2, self.tau_c * US)


@dataclass
class PSDSection:
    S_x: typing.Optional[SpectrumSection] = None
    S_z: typing.Optional[SpectrumSection] = None
    S_Omega: typing.Optional[SpectrumSection] = None
    S_em: typing.Optional[SpectrumSection] = None

    def build(self) -> NoisePSDSet:
        return NoisePSDSet(*(getattr(self, n).build() if getattr(self, n) else White()
                             for n in ("S_x", "S_z", "S_Omega", "S_em")))


@dataclass
class NoiseSection:
    """kind: ou (sigma MHz, tau_c us), white_band_limited (level 1/s, cutoff MHz), static_gaussian (sigma MHz)."""

    target: str
    kind: str
    sigma: typing.Optional[float] = None
    tau_c: typing.Optional[float] = None
    level: typing.Optional[float] = None
    cutoff: typing.Optional[float] = None
    seed: int = 0

    def build(self) -> stochastic.NoiseTrajectorySpec:
        if self.kind == "ou":
            src = stochastic.OU((_need(self.sigma, "sigma") * MHZ) ** 2, _need(self.tau_c, "tau_c") * US)
        elif self.kind == "white_band_limited":
            src = stochastic.WhiteBandLimited(_need(self.level, "level"), _need(self.cutoff, "cutoff") * MHZ)
        elif self.kind == "static_gaussian":
            src = StaticGaussian(_need(self.sigma, "sigma") * MHZ)
        else:
            raise ConfigError(f"unknown noise kind {self.kind!r}")
        try:
            return stochastic.NoiseTrajectorySpec(src, stochastic.Target(self.target), self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class InhomSection:
    sigma_Omega_rel: float = 0.016
    sigma_omega: float = 0.32
    tau0: float = 13.0
    hyperfine_A: float = 2.2
    sublevel_populations: list[float] = field(default_factory=lambda: [0.135, 0.73, 0.135])
    sublevel_offsets: typing.Optional[list[float]] = None

    def build(self) -> InhomogeneityModel:
        offs = None if self.sublevel_offsets is None else tuple(o * MHZ for o in self.sublevel_offsets)
        return InhomogeneityModel(self.sigma_Omega_rel, self.sigma_omega * MHZ, self.tau0 * US,
                                  self.hyperfine_A * MHZ, tuple(self.sublevel_populations), offs)


@dataclass
class FitSection:
    model: str = "multi_damped_cosine"
    n_components: int = 1


@dataclass
class EvolveConfig:
    drive: DriveSection
    grid: GridSection
    state: typing.Union[str, StateSection] = "0"
    frame: str = "frame1"
    allow_lab: bool = False
    steps_per_cycle: int = 128
    fit: typing.Optional[FitSection] = None


@dataclass
class FloquetConfig:
    drive: DriveSection
    state: typing.Union[str, StateSection] = "0"
    n_max: int = 8
    n_samples: int = 256
    mode_control: bool = False
    sweep_eps_m: typing.Optional[Axis] = None


@dataclass
class RatesConfig:
    scenario: str
    psd: PSDSection
    Omega: float
    delta: float = 0.0
    eps_m: float = 0.0
    omega0: float = DEFAULT_OMEGA0 / MHZ
    variant: str = "exact"
    static: str = "raise"
    psd_convention: str = "formula"
    em_relative: typing.Optional[RelativeNoiseSection] = None
    sweep_eps_m: typing.Optional[Axis] = None


@dataclass
class MonteCarloConfig:
    drive: DriveSection
    grid: GridSection
    noise: list[NoiseSection]
    state: typing.Union[str, StateSection] = "0"
    n_traj: int = 200
    seed: int = 0
    observable: typing.Union[str, list[float]] = "p0"
    frame: str = "frame1"
    steps_per_cycle: int = 128
    fit: typing.Optional[FitSection] = None
    bootstrap: int = 20


@dataclass
class EnsembleConfig:
    window: GridSection
    inhomogeneity: InhomSection = field(default_factory=InhomSection)
    Omegas: typing.Optional[Axis] = None
    delta: float = 0.0
    deltas: typing.Optional[Axis] = None
    Omega: typing.Optional[float] = None
    order: typing.Optional[int] = None
    standard: bool = False


@dataclass
class MapConfig:
    drive: DriveSection
    Omegas: Axis
    deltas: Axis
    rho: float
    window: GridSection = field(default_factory=lambda: GridSection(t_start=50.0, t_end=50.5, n_points=201))
    state: typing.Union[str, StateSection] = "0"
    mode: str = "single_spin"
    inhomogeneity: InhomSection = field(default_factory=InhomSection)
    order: int = 6


@dataclass
class FitConfig:
    model: str = "multi_damped_cosine"
    n_components: int = 1


SCHEMAS = {
    "evolve": EvolveConfig, "floquet": FloquetConfig, "rates": RatesConfig, "montecarlo": MonteCarloConfig,
    "ensemble": EnsembleConfig, "map": MapConfig, "fit": FitConfig,
}


def _coerce(tp, value, path):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None:
            if type(None) in args:
                return None
            raise ConfigError(f"{path}: value required")
        errors = []
        for a in args:
            if a is type(None):
                continue
            try:
                return _coerce(a, value, path)
            except ConfigError as exc:
                errors.append(str(exc))
        raise ConfigError(errors[-1] if len(errors) == 1 else f"{path}: no accepted form matches ({'; '.join(errors)})")
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list")
        (item,) = typing.get_args(tp)
        return [_coerce(item, v, f"{path}[{i}]") for i, v in enumerate(value)]
    if dataclasses.is_dataclass(tp):
        return build_section(tp, value, path)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ConfigError(f"{path}: expected a number")
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true or false")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    return value


def build_section(cls, data, path: str = ""):
    """Instantiate dataclass ``cls`` from a mapping, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected a mapping")
    hints = typing.get_type_hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in fields:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"{where}: unknown key (allowed: {', '.join(sorted(fields))})")
    kw = {}
    for name, f in fields.items():
        where = f"{path}.{name}" if path else name
        if name in data:
            kw[name] = _coerce(hints[name], data[name], where)
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"{where}: missing required key")
    return cls(**kw)


def load_config(command: str, text: str):
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return build_section(SCHEMAS[command], data if data is not None else {})


def dump_config(cfg) -> str:
    """YAML text that :func:`load_config` maps back to an equal object."""
    def plain(x):
        if dataclasses.is_dataclass(x):
            return {f.name: plain(getattr(x, f.name)) for f in dataclasses.fields(x) if getattr(x, f.name) is not None}
        if isinstance(x, list):
            return [plain(v) for v in x]
        return x
    return yaml.safe_dump(plain(cfg), sort_keys=True)


# --- output ------------------------------------------------------------


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else ("nan" if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    if isinstance(x, dict):
        return {str(k): _num(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_num(v) for v in x]
    return x


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_num(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


class Table:
    """Row sink written as CSV (streamed) or JSON (on close); partial rows survive failures."""

    def __init__(self, out_dir: Path, name: str, columns: list[str], fmt: str):
        self.columns, self.fmt, self.rows = columns, fmt, []
        self.path = out_dir / f"{name}.{fmt}"
        self._fh = None
        if fmt == "csv":
            self._fh = open(self.path, "w", encoding="utf-8", newline="")
            self._writer = csv.writer(self._fh, lineterminator="\n")
            self._writer.writerow(columns)

    def add(self, *row):
        if self._fh is not None:
            self._writer.writerow([_fmt(v) for v in row])
            self._fh.flush()
        else:
            self.rows.append(list(row))

    def close(self):
        if self._fh is not None:
            self._fh.close()
        else:
            write_json(self.path, {"columns": self.columns, "rows": self.rows})

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


# --- commands ----------------------------------------------------------


def _fit_dict(res: analysis.FitResult) -> dict:
    return {"model": res.model.value, "n_components": res.n_components, "params": res.params,
            "stderr": res.stderr, "residual_rms": res.residual_rms, "converged": res.converged}


def cmd_evolve(cfg: EvolveConfig, out: Path, opts) -> None:
    drive = cfg.drive.build()
    grid = cfg.grid.build()
    traj = evolve(drive, build_state(cfg.state), grid, Frame(cfg.frame), allow_lab=cfg.allow_lab,
                  steps_per_cycle=cfg.steps_per_cycle)
    p0 = population0(traj)
    with Table(out, "evolve", ["t_us", "p0"], opts.format) as tab:
        for t, p in zip(grid.times, p0):
            tab.add(t / US, p)
    if cfg.fit is not None:
        res = analysis.fit(grid.times / US, p0, cfg.fit.model, cfg.fit.n_components)
        write_json(out / "evolve_fit.json", _fit_dict(res))


def _floquet_summary(drive, state, cfg: FloquetConfig) -> dict:
    fd = floquet.floquet_data(drive, cfg.n_samples)
    bs = floquet.band_spectrum(fd, state, cfg.n_max)
    cp, cm = floquet.mode_decomposition(state, fd)
    bands = [{"frequency": f / MHZ, "amplitude_re": a.real, "amplitude_im": a.imag, "family": int(fa), "order": int(o)}
             for f, a, fa, o in zip(bs.frequencies, bs.amplitudes, bs.family, bs.order)]
    return {"lambda_plus": fd.lambda_plus / MHZ, "lambda_minus": fd.lambda_minus / MHZ, "gap": fd.gap / MHZ,
            "c_plus_abs": abs(cp), "c_minus_abs": abs(cm), "bands": bands}


def cmd_floquet(cfg: FloquetConfig, out: Path, opts) -> None:
    drive = cfg.drive.build()
    state = build_state(cfg.state)
    result = {}
    if cfg.mode_control:
        phi0, phi_m = floquet.mode_control_phases(state, drive)
        result["phases"] = {"phi0": phi0, "phi_m": phi_m}
        drive = drive.with_(phi0=phi0, phi_m=phi_m)
    if cfg.sweep_eps_m is not None:
        with Table(out, "floquet_sweep", ["eps_m_MHz", "lambda_plus_MHz", "lambda_minus_MHz", "gap_MHz"],
                   opts.format) as tab:
            for e in axis_values(cfg.sweep_eps_m):
                fd = floquet.floquet_data(drive.with_(eps_m=e * MHZ), cfg.n_samples)
                tab.add(e, fd.lambda_plus / MHZ, fd.lambda_minus / MHZ, fd.gap / MHZ)
    result.update(_floquet_summary(drive, state, cfg))
    write_json(out / "floquet.json", result)


def _psd_for_rates(cfg: RatesConfig) -> NoisePSDSet:
    psd = cfg.psd.build()
    if cfg.psd_convention == "two_sided":
        return psd.one_sided()
    if cfg.psd_convention != "formula":
        raise ConfigError("psd_convention: expected 'formula' or 'two_sided'")
    return psd


def cmd_rates(cfg: RatesConfig, out: Path, opts) -> None:
    psd = _psd_for_rates(cfg)
    rel = cfg.em_relative.build() if cfg.em_relative else None
    if rel is not None and cfg.psd_convention == "two_sided":
        rel = rel.scaled(2.0)
    kw = dict(Omega=cfg.Omega * MHZ, omega0=cfg.omega0 * MHZ, em_relative=rel, variant=cfg.variant,
              static=cfg.static)
    scenario = gbe.Scenario(cfg.scenario)
    if scenario is gbe.Scenario.SINGLE_DETUNED:
        r = gbe.rates(scenario, psd, Omega=kw["Omega"], omega0=kw["omega0"], delta=cfg.delta * MHZ,
                      variant=cfg.variant, static=cfg.static)
        write_json(out / "rates.json", r.as_dict())
        return
    if cfg.sweep_eps_m is not None:
        cols = ["eps_m_MHz", "gamma_x", "gamma_y", "gamma_z", "t1", "t2", "t2_pure", "valid"]
        with Table(out, "rates_sweep", cols, opts.format) as tab:
            for e in axis_values(cfg.sweep_eps_m):
                (r,) = gbe.sweep_eps_m(scenario, psd, [e * MHZ], **kw)
                tab.add(e, r.gamma_x, r.gamma_y, r.gamma_z, r.t1, r.t2, r.t2_pure, int(r.valid))
    (r,) = gbe.sweep_eps_m(scenario, psd, [cfg.eps_m * MHZ], **kw)
    write_json(out / "rates.json", r.as_dict())


def cmd_montecarlo(cfg: MonteCarloConfig, out: Path, opts) -> None:
    drive = cfg.drive.build()
    grid = cfg.grid.build()
    specs = [n.build() for n in cfg.noise]
    seed = opts.seed if opts.seed is not None else cfg.seed
    kw = dict(observable=cfg.observable, frame=Frame(cfg.frame), threads=opts.threads,
              steps_per_cycle=cfg.steps_per_cycle)
    state = build_state(cfg.state)
    if specs:
        samples = stochastic.mc_samples(drive, specs, state, grid, cfg.n_traj, seed, **kw)
        mean, err = stochastic.summarize(samples)
    else:
        mean, err = stochastic.mc_signal(drive, specs, state, grid, cfg.n_traj, seed, **kw)
        samples = mean[None, :]
    with Table(out, "montecarlo", ["t_us", "mean", "stderr"], opts.format) as tab:
        for row in zip(grid.times / US, mean, err):
            tab.add(*row)
    summary = {"n_traj": cfg.n_traj, "seed": seed}
    if cfg.fit is not None:
        model = analysis.FitModel(cfg.fit.model)
        rate, half = stochastic.decay_rate_from_samples(grid.times, samples, model, cfg.bootstrap, seed)
        summary.update(rate=rate, half_width=half, model=model.value)
    write_json(out / "montecarlo.json", summary)


def cmd_ensemble(cfg: EnsembleConfig, out: Path, opts) -> None:
    inhom = cfg.inhomogeneity.build()
    window = cfg.window.build()
    if cfg.Omegas is None and cfg.deltas is None:
        raise ConfigError("ensemble: give Omegas and/or deltas")
    if cfg.Omegas is not None:
        with Table(out, "ensemble_power", ["Omega_MHz", "tau_us"], opts.format) as tab:
            for Om in axis_values(cfg.Omegas):
                (_, tau), = ensemble.coherence_vs_power([Om * MHZ], inhom, window, cfg.delta * MHZ,
                                                         cfg.order, cfg.standard)
                tab.add(Om, tau / US)
    if cfg.deltas is not None:
        if cfg.Omega is None:
            raise ConfigError("Omega: required with deltas")
        with Table(out, "ensemble_detuning", ["delta_MHz", "tau_us"], opts.format) as tab:
            for d in axis_values(cfg.deltas):
                (_, tau), = ensemble.coherence_vs_detuning(cfg.Omega * MHZ, [d * MHZ], inhom, window,
                                                           cfg.order, cfg.standard)
                tab.add(d, tau / US)


def cmd_map(cfg: MapConfig, out: Path, opts) -> None:
    template = cfg.drive.build()
    Omegas = axis_values(cfg.Omegas)
    deltas = axis_values(cfg.deltas)
    window = cfg.window.build()
    state = build_state(cfg.state)
    if cfg.mode not in ("single_spin", "ensemble"):
        raise ConfigError("mode: expected 'single_spin' or 'ensemble'")
    inhom = cfg.inhomogeneity.build() if cfg.mode == "ensemble" else None
    widths = {}
    with Table(out, "map", ["Omega_MHz"] + [_fmt(d) for d in deltas], opts.format) as tab:
        for Om in Omegas:
            m = ensemble.contrast_map(template, ensemble.SweepGrid2D((Om * MHZ,), tuple(d * MHZ for d in deltas)),
                                      window, cfg.rho, psi0=state, inhom=inhom, order=cfg.order)
            tab.add(Om, *m.c1[0])
            widths[_fmt(Om)] = ensemble.fwhm(deltas, m.c1[0])
    om_m = template.omega_m / MHZ
    locus = [[o, d] for o in Omegas if o <= om_m for d in sorted({-math.sqrt(om_m ** 2 - o ** 2),
                                                                  math.sqrt(om_m ** 2 - o ** 2)})]
    write_json(out / "map.json", {"rho": cfg.rho, "fwhm_delta_MHz": widths, "resonance_locus_MHz": locus})


def cmd_fit(cfg: FitConfig, out: Path, opts) -> None:
    if not opts.input:
        raise ConfigError("fit: --input CSV is required")
    try:
        with open(opts.input, encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {opts.input}: {exc}") from exc
    data = []
    for i, row in enumerate(rows):
        if len(row) < 2:
            continue
        try:
            data.append((float(row[0]), float(row[1])))
        except ValueError:
            if i:
                raise ConfigError(f"{opts.input}:{i + 1}: non-numeric row") from None
    if not data:
        raise ConfigError(f"{opts.input}: no data rows")
    t, y = np.array(data).T
    res = analysis.fit(t, y, cfg.model, cfg.n_components)
    write_json(out / "fit.json", _fit_dict(res))


COMMANDS = {
    "evolve": cmd_evolve, "floquet": cmd_floquet, "rates": cmd_rates, "montecarlo": cmd_montecarlo,
    "ensemble": cmd_ensemble, "map": cmd_map, "fit": cmd_fit,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ccdlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, required=name != "fit")
        s.add_argument("--out", type=Path, default=Path("."))
        s.add_argument("--seed", type=int)
        s.add_argument("--threads", type=int)
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "fit":
            s.add_argument("--input", type=Path)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.threads is None and os.environ.get("CCDLAB_THREADS"):
        args.threads = int(os.environ["CCDLAB_THREADS"])
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.command, text)
        args.out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, args.out, args)
    except (ConfigError, SpectrumError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, analysis.FitError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # invalid enum values and similar input problems
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
