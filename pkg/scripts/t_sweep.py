"""Route residual, fidelity, separability and drift across total times.

    python scripts/t_sweep.py moving_well 10 20 40 80
"""

import argparse

import numpy as np

from adiabatica.pipeline import execute
from adiabatica.scenario import PRESETS, preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("preset", choices=sorted(PRESETS))
    ap.add_argument("T", nargs="*", type=float, default=[10.0, 20.0, 40.0])
    args = ap.parse_args()
    print(f"{'T':>7} {'residual':>10} {'fidelity':>10} {'separab.':>10} "
          f"{'rho_inst':>10} {'q_inst':>10} {'|a-d|':>8}")
    for T in args.T:
        r = execute(preset(args.preset).with_overrides(T=T))
        print(f"{T:7.1f} {r.route_residual:10.5f} {r.fidelity[-1]:10.6f} "
              f"{np.max(r.separability):10.4g} {np.max(r.rho_drift_inst):10.4g} "
              f"{np.max(r.q_drift_inst):10.4g} {abs(r.alpha[-1] - r.delta[-1]):8.4f}")


if __name__ == "__main__":
    main()
