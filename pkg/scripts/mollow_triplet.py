"""Spectral lines of resonant CCD: direct propagation vs Floquet bands.

Sidebands come from phi_m = 0 (no center line), the center line from
phi_m = pi/2 (|0> is then nearly a single Floquet mode).
"""
import argparse
import csv
import math
from pathlib import Path

from ccdlab.analysis import spectrum_peaks
from ccdlab.evolution import TimeGrid, evolve, population0
from ccdlab.floquet import band_spectrum, floquet_data
from ccdlab.model import KET0, DriveConfig

MHZ = 2 * math.pi * 1e6


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--omega", type=float, default=7.5, help="Rabi = modulation frequency, MHz")
    ap.add_argument("--eps", type=float, nargs="+", default=[0.5, 1.0, 2.0, 3.75], help="eps_m values, MHz")
    ap.add_argument("--t-end", type=float, default=50.0, help="record length, us")
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    W = args.omega * MHZ
    grid = TimeGrid(0, args.t_end * 1e-6, 20001)
    rows = []
    print(f"{'eps':>6} {'gap':>8} {'lower':>8} {'center':>8} {'upper':>8}   (MHz)")
    for e in args.eps:
        side = population0(evolve(DriveConfig.resonant_ccd(W, e * MHZ, phi_m=0.0), KET0, grid))
        cent_cfg = DriveConfig.resonant_ccd(W, e * MHZ, phi_m=math.pi / 2)
        cent = population0(evolve(cent_cfg, KET0, grid))
        lo, hi = sorted(w / MHZ for w, _ in spectrum_peaks(side, grid.dt, n_peaks=2))
        mid = spectrum_peaks(cent, grid.dt, n_peaks=1)[0][0] / MHZ
        gap = floquet_data(cent_cfg).gap / MHZ
        print(f"{e:6.2f} {gap:8.4f} {lo:8.4f} {mid:8.4f} {hi:8.4f}")
        for f, a in band_spectrum(DriveConfig.resonant_ccd(W, e * MHZ, phi_m=0.0), KET0).dominant(3):
            rows.append((e, gap, f / MHZ, a))

    with open(args.out / "mollow_bands.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps_m_MHz", "gap_MHz", "line_MHz", "abs_amplitude"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
