"""Monte Carlo decay rates against the analytic rates for the four drive scenarios."""
import argparse
import math

from ccdlab import gbe
from ccdlab.analysis import FitModel
from ccdlab.evolution import TimeGrid
from ccdlab.model import KET0, DriveConfig, Frame, Modulation, NoisePSDSet, QubitState
from ccdlab.stochastic import OU, NoiseTrajectorySpec, mc_decay_rate

MHZ = 2 * math.pi * 1e6
W0 = 2 * math.pi * 2.87e9


def cases():
    W = 1 * MHZ
    sz, so = OU((0.15 * MHZ) ** 2, 0.1e-6), OU((0.3 * MHZ) ** 2, 0.1e-6)
    x = (1.0, 0.0, 0.0)
    psd = NoisePSDSet(S_z=sz.psd()).one_sided()
    yield ("single_resonant", DriveConfig(Omega=W, modulation=Modulation.NONE), {"xi_z": sz},
           gbe.rates_single_resonant(psd, W, W0), QubitState.from_bloch(x), x, Frame.FRAME1)
    e = (1 / math.sqrt(2), 0.0, -1 / math.sqrt(2))
    psd = NoisePSDSet(S_z=sz.psd(), S_Omega=so.psd()).one_sided()
    yield ("single_detuned", DriveConfig(Omega=W, delta=W, modulation=Modulation.NONE),
           {"xi_z": sz, "xi_Omega": so}, gbe.rates_single_detuned(psd, W, W, W0), QubitState.from_bloch(e), e,
           Frame.FRAME1)

    W, eps = 10 * MHZ, 1 * MHZ
    sz, so, se = (OU((s * MHZ) ** 2, 0.1e-6) for s in (0.4, 0.2, 0.2))
    psd = NoisePSDSet(S_z=sz.psd(), S_Omega=so.psd(), S_em=se.psd()).one_sided()
    z = (0.0, 0.0, 1.0)
    yield ("ccd_amplitude", DriveConfig.resonant_ccd(W, eps, phi_m=math.pi / 2),
           {"xi_z": sz, "xi_Omega": so, "xi_em": se}, gbe.rates_ccd_amplitude(psd, W, eps, W0), KET0, z,
           Frame.FRAME2)
    yield ("ccd_phase", DriveConfig.resonant_ccd(W, eps, phi_m=math.pi / 2, modulation=Modulation.PHASE),
           {"xi_z": sz, "xi_Omega": so}, gbe.rates_ccd_phase(psd, W, eps, W0), KET0, z, Frame.FRAME2)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-traj", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    print(f"{'scenario':16s} {'analytic 1/s':>13s} {'MC 1/s':>10s} {'+-':>8s} {'ratio':>6s}")
    for name, cfg, noise, r, psi0, axis, frame in cases():
        specs = [NoiseTrajectorySpec(src, tgt, i) for i, (tgt, src) in enumerate(noise.items(), 1)]
        grid = TimeGrid(0, 3 / r.rate1, 401)
        rate, half = mc_decay_rate(cfg, specs, psi0, grid, args.n_traj, args.seed, FitModel.EXP,
                                   observable=axis, frame=frame, threads=args.threads)
        print(f"{name:16s} {r.rate1:13.4g} {rate:10.4g} {half:8.2g} {rate / r.rate1:6.3f}")


if __name__ == "__main__":
    main()
