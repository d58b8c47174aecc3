"""Ensemble Rabi coherence time vs drive strength and vs detuning."""
import argparse
import csv
import math
from pathlib import Path

import numpy as np

from ccdlab.ensemble import coherence_vs_detuning, coherence_vs_power
from ccdlab.evolution import TimeGrid
from ccdlab.model import InhomogeneityModel

MHZ = 2 * math.pi * 1e6


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma-omega-rel", type=float, default=0.016)
    ap.add_argument("--sigma-detuning", type=float, default=0.32, help="MHz")
    ap.add_argument("--tau0", type=float, default=13.0, help="us")
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    inh = InhomogeneityModel(args.sigma_omega_rel, args.sigma_detuning * MHZ, args.tau0 * 1e-6)
    window = TimeGrid(0, 5e-6, 1001)
    power = coherence_vs_power(np.arange(1, 11) * MHZ, inh, window)
    write(args.out / "tau_vs_omega.csv", ["Omega_MHz", "tau_us"], [(o / MHZ, t * 1e6) for o, t in power])
    for o, t in power:
        print(f"Omega = {o / MHZ:5.2f} MHz  tau = {t * 1e6:6.3f} us")

    det = coherence_vs_detuning(7.5 * MHZ, np.linspace(-3, 3, 13) * MHZ, inh, window)
    write(args.out / "tau_vs_delta.csv", ["delta_MHz", "tau_us"], [(d / MHZ, t * 1e6) for d, t in det])
    print("tau(delta) at Omega = 7.5 MHz:", " ".join(f"{t * 1e6:.3f}" for _, t in det))


if __name__ == "__main__":
    main()
