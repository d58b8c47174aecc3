"""Center-band contrast over drive strength and detuning, weak vs strong modulation."""
import argparse
import csv
import math
from pathlib import Path

import numpy as np

from ccdlab.ensemble import SweepGrid2D, contrast_map, fwhm
from ccdlab.evolution import TimeGrid
from ccdlab.model import DriveConfig

MHZ = 2 * math.pi * 1e6


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omega-m", type=float, default=7.5, help="modulation frequency, MHz")
    ap.add_argument("--rho", type=float, nargs="+", default=[0.5, 0.04], help="eps_m / Omega")
    ap.add_argument("--n-omega", type=int, default=21)
    ap.add_argument("--n-delta", type=int, default=61)
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    wm = args.omega_m * MHZ
    Omegas = np.linspace(0.6, 1.4, args.n_omega) * wm
    deltas = np.linspace(-2, 2, args.n_delta) * wm
    window = TimeGrid(50e-6, 50.5e-6, 201)
    for rho in args.rho:
        tmpl = DriveConfig.resonant_ccd(wm, rho * wm, phi_m=math.pi / 2)
        m = contrast_map(tmpl, SweepGrid2D(tuple(Omegas), tuple(deltas)), window, rho)
        path = args.out / f"map_rho{rho:g}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["Omega_MHz"] + [f"{d / MHZ:.6g}" for d in deltas])
            for Om, row in zip(Omegas, m.c1):
                w.writerow([f"{Om / MHZ:.6g}"] + [f"{c:.6g}" for c in row])
        width = fwhm(deltas / MHZ, m.detuning_cut(wm))
        print(f"rho = {rho:g}: detuning FWHM at Omega = omega_m is {width:.2f} MHz -> {path}")


if __name__ == "__main__":
    main()
