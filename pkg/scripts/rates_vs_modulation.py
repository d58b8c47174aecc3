"""Analytic CCD relaxation times vs modulation strength, amplitude vs phase modulation.

Noise: Lorentzian S_z and S_Omega, plus fractional modulation-amplitude noise
(only present for amplitude modulation).
"""
import argparse
import csv
import math
import warnings
from pathlib import Path

import numpy as np

from ccdlab import gbe
from ccdlab.model import Lorentzian, NoisePSDSet

MHZ = 2 * math.pi * 1e6


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--omega", type=float, default=3.0, help="Rabi frequency, MHz")
    ap.add_argument("--eta", type=float, default=0.01, help="rms fractional eps_m noise")
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    W = args.omega * MHZ
    w0 = 2 * math.pi * 2.87e9
    psd = NoisePSDSet(S_z=Lorentzian((0.1 * MHZ) ** 2, 1e-6),
                      S_Omega=Lorentzian((0.3 * MHZ) ** 2, 3e-6)).one_sided()
    eta = Lorentzian(args.eta ** 2, 1e-6).scaled(2.0)
    eps = np.linspace(0, 0.95, 96) * W
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        amp = gbe.sweep_eps_m("ccd_amplitude", psd, eps, Omega=W, omega0=w0, em_relative=eta)
        pha = gbe.sweep_eps_m("ccd_phase", psd, eps, Omega=W, omega0=w0)

    with open(args.out / "rates_vs_eps.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps_over_Omega", "T1_amp_ms", "T2_amp_ms", "T1_phase_ms", "T2_phase_ms"])
        for e, a, p in zip(eps / W, amp, pha):
            w.writerow([f"{e:.4f}", a.t1 * 1e3, a.t2 * 1e3, p.t1 * 1e3, p.t2 * 1e3])

    for name, rs in (("amplitude", amp), ("phase", pha)):
        t1 = np.array([r.t1 for r in rs])
        t2 = np.array([r.t2 for r in rs])
        print(f"{name:9s}: T1 max {t1.max() * 1e3:.2f} ms at {eps[t1.argmax()] / W:.2f} Omega, "
              f"T2 max {t2.max() * 1e3:.2f} ms at {eps[t2.argmax()] / W:.2f} Omega")


if __name__ == "__main__":
    main()
