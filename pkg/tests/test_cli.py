import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from ccdlab import cli
from ccdlab.analysis import fit
from ccdlab.floquet import floquet_data
from ccdlab.model import DriveConfig

from conftest import MHZ

CONFIGS = {
    "evolve": "drive: {Omega: 7.5, eps_m: 1.0}\ngrid: {t_end: 2.0, n_points: 401}\nfit: {n_components: 1}\n",
    "floquet": "drive: {Omega: 10.0, eps_m: 0.4}\nmode_control: true\nsweep_eps_m: {start: 0, stop: 1, num: 3}\n",
    "rates": ("scenario: ccd_amplitude\nOmega: 10.0\neps_m: 1.0\n"
              "psd:\n  S_z: {kind: lorentzian, sigma: 0.4, tau_c: 0.1}\n"
              "sweep_eps_m: [0.5, 1.0]\n"),
    "montecarlo": ("drive: {Omega: 5.0, modulation: none}\ngrid: {t_end: 1.0, n_points: 41}\nn_traj: 16\nseed: 3\n"
                   "noise:\n  - {target: xi_z, kind: ou, sigma: 0.4, tau_c: 0.1}\nfit: {model: exp_decay}\n"
                   "bootstrap: 5\n"),
    "ensemble": "window: {t_end: 5.0, n_points: 501}\nOmegas: [2.0, 7.5]\ndeltas: [-1.0, 1.0]\nOmega: 7.5\n",
    "map": "drive: {omega_m: 7.5, phi_m: 1.5707963267948966}\nOmegas: [7.5]\ndeltas: {start: -15, stop: 15, num: 13}\n"
           "rho: 0.5\n",
}
OUTPUTS = {
    "evolve": ["evolve.csv", "evolve_fit.json"],
    "floquet": ["floquet.json", "floquet_sweep.csv"],
    "rates": ["rates.json", "rates_sweep.csv"],
    "montecarlo": ["montecarlo.csv", "montecarlo.json"],
    "ensemble": ["ensemble_power.csv", "ensemble_detuning.csv"],
    "map": ["map.csv", "map.json"],
}


def run(tmp_path, command, text, *extra, name="cfg.yaml"):
    cfg = tmp_path / name
    cfg.write_text(text)
    return cli.main([command, "--config", str(cfg), "--out", str(tmp_path / "out"), *extra])


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


@pytest.mark.parametrize("command", sorted(CONFIGS))
def test_command_runs(tmp_path, command):
    assert run(tmp_path, command, CONFIGS[command]) == 0
    for f in OUTPUTS[command]:
        assert (tmp_path / "out" / f).stat().st_size > 0


@pytest.mark.parametrize("command", sorted(CONFIGS))
def test_deterministic_output(tmp_path, command):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert run(a, command, CONFIGS[command]) == 0
    assert run(b, command, CONFIGS[command]) == 0
    for f in OUTPUTS[command]:
        assert (a / "out" / f).read_bytes() == (b / "out" / f).read_bytes()


@pytest.mark.parametrize("command", sorted(CONFIGS))
def test_schema_roundtrip(command):
    cfg = cli.load_config(command, CONFIGS[command])
    assert cli.load_config(command, cli.dump_config(cfg)) == cfg


def test_unknown_key(tmp_path, capsys):
    assert run(tmp_path, "evolve", CONFIGS["evolve"] + "bogus: 1\n") == 2
    err = capsys.readouterr().err
    assert "bogus: unknown key" in err and "allowed:" in err


def test_nested_unknown_key_names_path(tmp_path, capsys):
    assert run(tmp_path, "evolve", "drive: {Omega: 1.0, omgea: 2}\ngrid: {t_end: 1.0, n_points: 3}\n") == 2
    assert "drive.omgea: unknown key" in capsys.readouterr().err


def test_missing_key(tmp_path, capsys):
    assert run(tmp_path, "evolve", "drive: {Omega: 1.0}\n") == 2
    assert "missing required key" in capsys.readouterr().err


def test_invalid_value_is_config_error(tmp_path):
    assert run(tmp_path, "evolve", "drive: {Omega: -1.0}\ngrid: {t_end: 1.0, n_points: 3}\n") == 2
    assert run(tmp_path, "rates", "scenario: nope\nOmega: 1.0\npsd: {}\n") == 2


def test_numeric_failure_exit_code(tmp_path, capsys):
    assert run(tmp_path, "evolve", "drive: {Omega: 1.0e+300}\ngrid: {t_end: 1.0, n_points: 3}\n") == 3
    assert "numeric error" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(CONFIGS["floquet"])
    r = subprocess.run([sys.executable, "-m", "ccdlab", "floquet", "--config", str(cfg), "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr


def test_undriven_evolve(tmp_path):
    assert run(tmp_path, "evolve", "drive: {modulation: none}\ngrid: {t_end: 1.0, n_points: 11}\n") == 0
    header, data = read_csv(tmp_path / "out" / "evolve.csv")
    assert header == ["t_us", "p0"]
    assert np.all(data[:, 1] == 1.0)


def test_floquet_gap_without_modulation(tmp_path):
    assert run(tmp_path, "floquet", "drive: {Omega: 3.0, omega_m: 10.0, eps_m: 0.0}\n") == 0
    out = json.loads((tmp_path / "out" / "floquet.json").read_text())
    assert out["gap"] == pytest.approx(3.0, rel=1e-9)


def test_floquet_mode_control_for_ground_state(tmp_path):
    assert run(tmp_path, "floquet", CONFIGS["floquet"]) == 0
    out = json.loads((tmp_path / "out" / "floquet.json").read_text())
    assert out["phases"]["phi0"] == pytest.approx(0.0, abs=1e-9)
    assert out["phases"]["phi_m"] == pytest.approx(math.pi / 2, abs=1e-9)


def test_floquet_gap_sweep_monotone(tmp_path):
    text = "drive: {Omega: 10.0}\nsweep_eps_m: {start: 0.0, stop: 2.5, num: 11}\n"
    assert run(tmp_path, "floquet", text) == 0
    header, data = read_csv(tmp_path / "out" / "floquet_sweep.csv")
    assert header[0] == "eps_m_MHz" and header[-1] == "gap_MHz"
    assert np.all(np.diff(data[:, -1]) > 0)
    assert data[0, -1] == pytest.approx(0.0, abs=1e-12)
    for e, gap in data[:, [0, -1]]:
        fd = floquet_data(DriveConfig.resonant_ccd(10 * MHZ, e * MHZ), 256)
        assert gap == pytest.approx(fd.gap / MHZ, rel=1e-12, abs=1e-12)


def test_rates_white_dephasing(tmp_path):
    s0 = 1e4
    text = f"scenario: ccd_amplitude\nOmega: 5.0\neps_m: 1.0\npsd:\n  S_z: {{kind: white, level: {s0}}}\n"
    assert run(tmp_path, "rates", text) == 0
    r = json.loads((tmp_path / "out" / "rates.json").read_text())
    assert r["t1"] == pytest.approx(2 / s0, rel=1e-12)
    assert r["t2"] == pytest.approx(4 / (3 * s0), rel=1e-12)


def test_rates_two_sided_doubles_rates(tmp_path):
    base = "scenario: single_resonant\nOmega: 5.0\npsd:\n  S_z: {kind: white, level: 1.0e+4}\n"
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert run(a, "rates", base) == 0
    assert run(b, "rates", base + "psd_convention: two_sided\n") == 0
    ra = json.loads((a / "out" / "rates.json").read_text())
    rb = json.loads((b / "out" / "rates.json").read_text())
    assert rb["rate1"] == pytest.approx(2 * ra["rate1"], rel=1e-12)


def test_map_strong_wider_than_weak(tmp_path):
    widths = {}
    for rho in (0.5, 0.04):
        d = tmp_path / str(rho)
        d.mkdir()
        text = CONFIGS["map"].replace("rho: 0.5", f"rho: {rho}")
        text = text.replace("num: 13", "num: 31")
        assert run(d, "map", text) == 0
        widths[rho] = json.loads((d / "out" / "map.json").read_text())["fwhm_delta_MHz"]["7.5"]
    assert widths[0.5] > 2 * widths[0.04]


def test_map_header_and_locus(tmp_path):
    assert run(tmp_path, "map", CONFIGS["map"]) == 0
    header, data = read_csv(tmp_path / "out" / "map.csv")
    assert header[0] == "Omega_MHz" and len(header) == 14 and data.shape == (1, 14)
    locus = json.loads((tmp_path / "out" / "map.json").read_text())["resonance_locus_MHz"]
    assert locus == [[7.5, 0.0]]


def test_fit_matches_library(tmp_path):
    t = np.linspace(0, 5, 501)
    y = 0.5 + 0.4 * np.exp(-t / 1.3) * np.cos(2 * np.pi * 2.1 * t + 0.2)
    src = tmp_path / "data.csv"
    src.write_text("t_us,p0\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(t, y)))
    assert cli.main(["fit", "--input", str(src), "--out", str(tmp_path / "out")]) == 0
    got = json.loads((tmp_path / "out" / "fit.json").read_text())
    ref = fit(t, y)
    for k, v in ref.params.items():
        assert got["params"][k] == pytest.approx(v, rel=1e-12)


def test_fit_reads_evolve_output(tmp_path):
    assert run(tmp_path, "evolve", "drive: {Omega: 2.0, modulation: none}\ngrid: {t_end: 3.0, n_points: 301}\n") == 0
    out = tmp_path / "out"
    assert cli.main(["fit", "--input", str(out / "evolve.csv"), "--out", str(out)]) == 0
    p = json.loads((out / "fit.json").read_text())["params"]
    assert p["omega1"] == pytest.approx(2 * math.pi * 2.0, rel=1e-6)


def test_fit_bad_input(tmp_path):
    src = tmp_path / "x.csv"
    src.write_text("t,y\n1,abc\n")
    assert cli.main(["fit", "--input", str(src), "--out", str(tmp_path)]) == 2
    assert cli.main(["fit", "--out", str(tmp_path)]) == 2


def test_json_format(tmp_path):
    assert run(tmp_path, "evolve", CONFIGS["evolve"], "--format", "json") == 0
    tab = json.loads((tmp_path / "out" / "evolve.json").read_text())
    assert tab["columns"] == ["t_us", "p0"] and len(tab["rows"]) == 401


def test_partial_rows_flushed_on_failure(tmp_path, monkeypatch):
    from ccdlab import floquet

    real = floquet.floquet_data
    calls = []

    def failing(drive, *a, **k):
        calls.append(drive)
        if len(calls) == 3:
            raise ArithmeticError("boom")
        return real(drive, *a, **k)

    monkeypatch.setattr(floquet, "floquet_data", failing)
    assert run(tmp_path, "floquet", "drive: {Omega: 10.0}\nsweep_eps_m: [0.1, 0.2, 0.3, 0.4]\n") == 3
    _, data = read_csv(tmp_path / "out" / "floquet_sweep.csv")
    assert data.shape == (2, 4)


def test_seed_override_changes_montecarlo(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert run(a, "montecarlo", CONFIGS["montecarlo"]) == 0
    assert run(b, "montecarlo", CONFIGS["montecarlo"], "--seed", "99") == 0
    assert (a / "out" / "montecarlo.csv").read_bytes() != (b / "out" / "montecarlo.csv").read_bytes()


def test_thread_count_does_not_change_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert run(a, "montecarlo", CONFIGS["montecarlo"], "--threads", "1") == 0
    assert run(b, "montecarlo", CONFIGS["montecarlo"], "--threads", "3") == 0
    assert (a / "out" / "montecarlo.csv").read_bytes() == (b / "out" / "montecarlo.csv").read_bytes()
