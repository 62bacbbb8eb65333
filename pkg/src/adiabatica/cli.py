"""Command line: ``adiabatica run <scenario> [--out DIR] [--T T] [--n LEVEL]``, ``adiabatica presets``.

Exit codes: 0 all assertions pass, 1 an assertion failed, 2 the scenario
is invalid, 3 a numerical module raised (tracking loss, gap alarm, ...).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AdiabaticaError, ScenarioError
from .pipeline import RunResult, connection_table, execute
from .scenario import PRESETS, Scenario, list_presets, load_scenario, preset

log = logging.getLogger("adiabatica")

EXIT_OK, EXIT_ASSERT, EXIT_SCENARIO, EXIT_RUNTIME = 0, 1, 2, 3

PHASE_UNITS = ("# units: t [time]; alpha, delta, gamma [rad]; fidelity [1]; "
               "separability [hbar]; rho_drift [1]; q_drift [energy]")
CONN_UNITS = "# units: R [parameter]; A [1/parameter]; link midpoints, connection projected on the link"


def _fmt(v: float) -> str:
    return repr(float(v) + 0.0)  # no negative zeros


def write_phases(result: RunResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(PHASE_UNITS + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "alpha", "delta", "gamma", "fidelity", "separability", "rho_drift",
                    "q_drift"])
        cols = (result.path.times, result.alpha, result.delta, result.gamma, result.fidelity,
                result.separability, result.rho_drift, result.q_drift)
        for row in zip(*cols):
            w.writerow([_fmt(v) for v in row])


def write_connection(result: RunResult, path: Path) -> None:
    R, Ao, Ab = connection_table(result)
    m = result.path.m
    with open(path, "w", newline="") as fh:
        fh.write(CONN_UNITS + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"R{j + 1}" for j in range(m)]
                   + [f"A{j + 1}_overlap" for j in range(m)]
                   + [f"A{j + 1}_bohm" for j in range(m)])
        for r, a, b in zip(R, Ao, Ab):
            w.writerow([_fmt(v) for v in (*r, *a, *b)])


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if np.isfinite(v) else None


def summary(result: RunResult) -> dict:
    sc = result.scenario
    return {
        "scenario": sc.name,
        "preset": sc.preset,
        "version": __version__,
        "hamiltonian": {"V": sc.V, "A": sc.A, "g": sc.g, "m": sc.m, "hbar": sc.hbar},
        "T": sc.T,
        "level": sc.level,
        "samples": len(result.path),
        "closed": result.path.closed,
        "terminal": {
            "alpha": _num(result.alpha[-1]),
            "delta": _num(result.delta[-1]),
            "gamma_overlap": _num(result.gamma[-1]),
            "gamma_bohm": _num(result.gamma_bohm[-1]),
            "alpha_bohm_rate": _num(result.alpha_rate),
            "route_residual": _num(result.route_residual),
            "fidelity": _num(result.fidelity[-1]),
        },
        "gamma_total": _num(result.gamma[-1]),
        "gamma_loop": _num(result.gamma_loop),
        "wkb_index": _num(result.wkb),
        "gap_min": _num(result.track.min_gap),
        "tracking_overlap_min": _num(np.min(result.track.overlaps)),
        "separability_max": _num(np.max(result.separability)),
        "rho_drift_final": _num(result.rho_drift[-1]),
        "q_drift_final": _num(result.q_drift[-1]),
        "rho_drift_instantaneous_max": _num(np.max(result.rho_drift_inst)),
        "q_drift_instantaneous_max": _num(np.max(result.q_drift_inst)),
        "continuity_max": _num(result.continuity_max),
        "qhj_max": _num(result.qhj_max),
        "max_norm_step": _num(result.trajectory.max_norm_step),
        "skipped_bohm_links": list(result.skipped_links),
        "tolerances": {
            "eps_node_rel": sc.tolerances.eps_node_rel,
            "gap_threshold": sc.tolerances.gap_threshold,
            "norm_step": sc.tolerances.norm_step,
            "steps_per_sample": sc.steps_per_sample,
            "k_buffer": sc.k_buffer,
        },
        "assertions": [
            {"name": c.name, "value": _num(c.value),
             "limit": list(c.limit) if isinstance(c.limit, tuple) else c.limit,
             "passed": c.passed}
            for c in result.checks
        ],
        "passed": result.passed,
    }


def error_record(err: Exception) -> dict:
    rec = {"type": type(err).__name__, "message": str(err)}
    for attr in ("field", "line", "sample", "overlap", "gap", "threshold", "increment",
                 "position"):
        v = getattr(err, attr, None)
        if v is not None:
            rec[attr] = v
    return rec


def _write_json(obj: dict, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")


def _resolve(target: str) -> Scenario:
    """A scenario file, or a bare preset name."""
    p = Path(target)
    if not p.exists() and target in PRESETS:
        return preset(target)
    return load_scenario(p)


def cmd_run(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        sc = _resolve(args.scenario).with_overrides(T=args.T, level=args.n)
    except ScenarioError as err:
        log.error("invalid scenario: %s", err)
        _write_json({"scenario": args.scenario, "passed": False, "error": error_record(err)},
                    out / "summary.json")
        return EXIT_SCENARIO
    log.info("running %s: T=%g level=%d samples=%s", sc.name, sc.T, sc.level,
             "explicit" if sc.samples is not None else sum(s.samples for s in sc.segments) + 1)
    try:
        result = execute(sc)
    except (AdiabaticaError, ValueError) as err:
        log.error("%s: %s", type(err).__name__, err)
        _write_json({"scenario": sc.name, "T": sc.T, "level": sc.level, "passed": False,
                     "error": error_record(err)}, out / "summary.json")
        return EXIT_RUNTIME
    if "phases" in sc.outputs:
        write_phases(result, out / "phases.csv")
    if "connection" in sc.outputs:
        write_connection(result, out / "connection.csv")
    # summary.json is always written: it carries the exit status
    _write_json(summary(result), out / "summary.json")
    for c in result.checks:
        log.info("%-26s %s value=%.6g limit=%s", c.name, "pass" if c.passed else "FAIL",
                 c.value, c.limit)
    return EXIT_OK if result.passed else EXIT_ASSERT


def cmd_presets(args) -> int:
    print(list_presets())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adiabatica", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file (or a preset name)")
    r.add_argument("scenario")
    r.add_argument("--out", default="out", help="output directory (default: ./out)")
    r.add_argument("--T", type=float, default=None, help="override the total time")
    r.add_argument("--n", type=int, default=None, help="override the tracked level")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("presets", help="list presets and their expressions")
    s.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
