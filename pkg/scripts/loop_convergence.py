"""Berry phase of the coherent loop by three routes against path sampling.

    python scripts/loop_convergence.py 4 8 16 64
"""

import argparse

from adiabatica import phases as ph
from adiabatica.scenario import Segment, preset, segment_path
from adiabatica.spectrum import track_level

SQUARE = [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("per_edge", nargs="*", type=int, default=[4, 8, 16, 32, 64])
    args = ap.parse_args()
    spec = preset("coherent_loop").spec()
    print(f"{'samples':>8} {'overlap':>12} {'bohm':>12} {'pancharatnam':>13} {'skipped':>8}")
    for k in args.per_edge:
        path = segment_path([0.0, 0.0], [Segment(c, k, "linear") for c in SQUARE], 1.0)
        slices = track_level(spec, path, 0, 4).tracked()
        pairs = ph.link_pairs(slices)
        conn_b, skipped = ph.connection_bohm(pairs)
        go = ph.geometric_phase(ph.connection_overlap(pairs), path)[-1]
        gb = ph.geometric_phase(conn_b, path)[-1]
        gp = ph.loop_phase_pancharatnam(slices)
        print(f"{4 * k:8d} {go:12.8f} {gb:12.8f} {gp:13.8f} {len(skipped):8d}")


if __name__ == "__main__":
    main()
