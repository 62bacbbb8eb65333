"""Compare the coherent-loop route residual with the second-order phase.

A classical particle dragged along the loop lags the well and picks up
kinetic energy, which adds (1/2hbar) int |dR/dt|^2 dt to the phase at
second order in 1/T.  With smoothstep edges of duration T/4 this is
9.6/T for the unit square.  The residual alpha - delta - gamma should
approach it as T grows.

    python scripts/second_order_phase.py [T ...]
"""

import argparse
import dataclasses

import numpy as np

from adiabatica.pipeline import execute
from adiabatica.scenario import preset


def kinetic_phase(path):
    t = path.times
    v = np.diff(path.points, axis=0) / np.diff(t)[:, None]
    return 0.5 * float(np.sum(np.sum(v**2, axis=1) * np.diff(t)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("T", nargs="*", type=float, default=[40.0, 80.0, 160.0, 320.0])
    args = ap.parse_args()
    print(f"{'T':>8} {'residual':>12} {'9.6/T':>10} {'sampled':>10} {'ratio':>8}")
    for T in args.T:
        # hold dt fixed so the Crank-Nicolson phase error does not grow with T
        sc = preset("coherent_loop").with_overrides(T=T)
        sc = dataclasses.replace(sc, steps_per_sample=max(8, round(8 * T / 40)))
        r = execute(sc)
        res = r.route_residual
        print(f"{T:8.1f} {res:12.6f} {9.6 / T:10.6f} {kinetic_phase(r.path):10.6f} "
              f"{res * T / 9.6:8.3f}")


if __name__ == "__main__":
    main()
