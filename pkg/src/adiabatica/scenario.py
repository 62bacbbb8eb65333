"""Scenario files: strict YAML schema, presets and path construction.

A scenario is a YAML mapping.  Every section is optional except where a
preset does not supply it::

    name: my_run
    preset: moving_well          # optional; the keys below override it
    hamiltonian: {V: "0.5*(x-R1)^2", A: "0", g: "1", hbar: 1.0, m: 1}
    grid: {x_min: -10, x_max: 10, n: 512, boundary: dirichlet, order: 4}
    path:
      start: [0.0]
      segments:
        - {to: [1.0], samples: 64, profile: smoothstep, weight: 1}
      # or explicit rows of (t, R1, ..., Rm):
      # samples: [[0.0, 0.0], [1.0, 0.5], ...]
    run: {level: 0, T: 40, steps_per_sample: 16, k_buffer: 4}
    tolerances: {eps_node_rel: 1e-10, gap_threshold: 0.0, norm_step: 1e-10}
    outputs: [phases, connection, summary]
    assertions: {fidelity_min: 0.999, gamma_abs_max: 1e-6}

Unknown keys anywhere are rejected.  Errors carry the dotted field name and,
when the key came from a file, its line number.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import expr as ex
from .errors import AdiabaticaError, ScenarioError
from .grid import SpatialGrid, make_grid
from .hamiltonian import HamiltonianSpec
from .spectrum import ParameterPath

PROFILES = ("linear", "smoothstep")
OUTPUTS = ("phases", "connection", "summary")

# name -> kind; "range" is a {value, tol} mapping
ASSERTIONS = {
    "fidelity_min": "real",
    "gamma_abs_max": "real",
    "connection_abs_max": "real",
    "connection_agreement_max": "real",
    "gamma_total": "range",
    "gamma_loop": "range",
    "route_residual_max": "real",
    "naive_guard_min": "real",
    "separability_max": "real",
    "drift_max": "real",
    "continuity_max": "real",
    "min_gap": "real",
}

SCHEMA = {
    "name": "str",
    "preset": "str",
    "description": "str",
    "hamiltonian": {"V": "str", "A": "str", "g": "str", "hbar": "real", "m": "int"},
    "grid": {"x_min": "real", "x_max": "real", "n": "int", "boundary": "str", "order": "int"},
    "path": {"start": "list", "segments": "list", "samples": "list"},
    "run": {"level": "int", "T": "real", "steps_per_sample": "int", "k_buffer": "int"},
    "tolerances": {"eps_node_rel": "real", "gap_threshold": "real", "norm_step": "real"},
    "outputs": "list",
    "assertions": {k: ("real" if v == "real" else {"value": "real", "tol": "real"})
                   for k, v in ASSERTIONS.items()},
}
SEGMENT_KEYS = {"to", "samples", "profile", "weight"}
REQUIRED = ("hamiltonian.V", "grid.x_min", "grid.x_max", "grid.n", "run.T")

_COMMON_RUN = {"level": 0, "steps_per_sample": 16, "k_buffer": 4}
_GRID = {"x_min": -10.0, "x_max": 10.0, "n": 512, "boundary": "dirichlet", "order": 4}

PRESETS: dict[str, dict] = {
    "static": {
        "description": "oscillator held fixed; stationary evolution",
        "hamiltonian": {"V": "0.5*(x-R1)^2", "A": "0", "g": "1", "m": 1},
        "grid": dict(_GRID),
        "path": {"start": [0.0], "segments": [{"to": [0.0], "samples": 64, "profile": "linear"}]},
        "run": {**_COMMON_RUN, "T": 40.0},
        "assertions": {"fidelity_min": 0.99999999, "gamma_abs_max": 1e-8,
                       "separability_max": 1e-6, "drift_max": 1e-8, "continuity_max": 1e-6},
    },
    "moving_well": {
        "description": "oscillator dragged from R1=0 to R1=1; real eigenfunctions",
        "hamiltonian": {"V": "0.5*(x-R1)^2", "A": "0", "g": "1", "m": 1},
        "grid": dict(_GRID),
        "path": {"start": [0.0], "segments": [{"to": [1.0], "samples": 64}]},
        "run": {**_COMMON_RUN, "T": 40.0},
        "assertions": {"fidelity_min": 0.999, "gamma_abs_max": 1e-6, "connection_abs_max": 1e-8,
                       "route_residual_max": 0.02, "separability_max": 0.05,
                       "continuity_max": 1e-6},
    },
    "coherent_loop": {
        "description": "displaced oscillator with uniform vector potential R2 around the unit square",
        "hamiltonian": {"V": "0.5*(x-R1)^2", "A": "R2", "g": "1", "m": 2},
        "grid": dict(_GRID),
        "path": {"start": [0.0, 0.0], "segments": [
            {"to": [1.0, 0.0], "samples": 64},
            {"to": [1.0, 1.0], "samples": 64},
            {"to": [0.0, 1.0], "samples": 64},
            {"to": [0.0, 0.0], "samples": 64},
        ]},
        "run": {**_COMMON_RUN, "T": 40.0, "steps_per_sample": 8},
        "assertions": {"gamma_loop": {"value": -1.0, "tol": 1e-2},
                       "gamma_total": {"value": -1.0, "tol": 1e-2},
                       "connection_agreement_max": 1e-4, "naive_guard_min": 0.5,
                       "continuity_max": 1e-6},
    },
    "avoided_crossing": {
        "description": "tilted double well swept through its avoided crossing",
        "hamiltonian": {"V": "(x^2-2.25)^2/8+R1*x", "A": "0", "g": "1", "m": 1},
        "grid": dict(_GRID),
        "path": {"start": [-0.5], "segments": [{"to": [0.5], "samples": 64}]},
        "run": {**_COMMON_RUN, "T": 160.0},
        "tolerances": {"gap_threshold": 0.1},
        "assertions": {"fidelity_min": 0.999, "gamma_abs_max": 1e-6, "min_gap": 0.3,
                       "continuity_max": 1e-6},
    },
}


@dataclass(frozen=True)
class Segment:
    to: tuple[float, ...]
    samples: int
    profile: str = "smoothstep"
    weight: float = 1.0


@dataclass(frozen=True)
class Tolerances:
    eps_node_rel: float = 1e-10
    gap_threshold: float = 0.0
    norm_step: float = 1e-10


@dataclass(frozen=True)
class Scenario:
    name: str
    V: str
    A: str
    g: str
    m: int
    hbar: float
    grid: SpatialGrid
    T: float
    level: int = 0
    steps_per_sample: int = 16
    k_buffer: int = 4
    start: tuple[float, ...] | None = None
    segments: tuple[Segment, ...] = ()
    samples: np.ndarray | None = None  # explicit (t, R...) rows
    tolerances: Tolerances = field(default_factory=Tolerances)
    outputs: tuple[str, ...] = OUTPUTS
    assertions: dict = field(default_factory=dict)
    preset: str | None = None

    def spec(self) -> HamiltonianSpec:
        return HamiltonianSpec.from_strings(self.V, self.A, self.g, grid=self.grid, m=self.m,
                                            hbar=self.hbar)

    def path(self) -> ParameterPath:
        if self.samples is not None:
            rows = self.samples
            times = rows[:, 0] * (self.T / rows[-1, 0])
            pts = rows[:, 1:]
            return ParameterPath(times, pts, closed=_returns(pts))
        return segment_path(self.start, self.segments, self.T)

    def with_overrides(self, T: float | None = None, level: int | None = None) -> "Scenario":
        changes = dict(self.__dict__)
        if T is not None:
            if not (np.isfinite(T) and T > 0):
                raise ScenarioError(f"T must be positive, got {T}", field="run.T")
            changes["T"] = float(T)
        if level is not None:
            if not 0 <= level < self.k_buffer:
                raise ScenarioError(f"level {level} must lie in 0..{self.k_buffer - 1}",
                                    field="run.level")
            changes["level"] = int(level)
        return Scenario(**changes)


def smoothstep(tau):
    return 3 * tau**2 - 2 * tau**3


def _returns(points: np.ndarray) -> bool:
    return len(points) > 1 and bool(np.all(np.abs(points[-1] - points[0]) <= 1e-12))


def segment_path(start, segments, T: float) -> ParameterPath:
    """Piecewise path; each segment gets ``T * weight / sum(weights)`` of time,
    sampled uniformly in time with R following the segment's profile."""
    cur = np.asarray(start, dtype=float)
    weights = np.array([s.weight for s in segments], dtype=float)
    durations = T * weights / weights.sum()
    times, points = [0.0], [cur.copy()]
    t0 = 0.0
    for seg, dur in zip(segments, durations):
        end = np.asarray(seg.to, dtype=float)
        tau = np.arange(1, seg.samples + 1) / seg.samples
        s = smoothstep(tau) if seg.profile == "smoothstep" else tau
        for tk, sk in zip(tau, s):
            times.append(t0 + tk * dur)
            points.append(cur + sk * (end - cur))
        points[-1] = end.copy()
        cur, t0 = end, t0 + dur
    times[-1] = float(T)
    points = np.array(points)
    closed = _returns(points)
    if closed:
        points[-1] = points[0]
    return ParameterPath(np.array(times), points, closed=closed)


# --- loading -----------------------------------------------------------------

class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads YAML 1.2 floats such as ``1e-3``."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:\d+\.?\d*|\.\d+)[eE][-+]?\d+$"),
    list("-+0123456789."),
)


def _load(node):
    return yaml.load(yaml.serialize(node), Loader=_Loader)


def _to_python(node, lines: dict, prefix: str):
    """Convert a composed YAML node to plain data, recording key line numbers."""
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = str(_load(k))
            name = f"{prefix}.{key}" if prefix else key
            if key in out:
                raise ScenarioError(f"duplicate key '{name}'", field=name, line=k.start_mark.line + 1)
            lines[name] = k.start_mark.line + 1
            out[key] = _to_python(v, lines, name)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_to_python(v, lines, f"{prefix}[{i}]") for i, v in enumerate(node.value)]
    return _load(node)


def parse_text(text: str) -> tuple[dict, dict]:
    """YAML text to ``(data, lines)``."""
    try:
        node = yaml.compose(text, Loader=_Loader)
    except yaml.MarkedYAMLError as err:
        line = err.problem_mark.line + 1 if err.problem_mark else None
        raise ScenarioError(f"YAML parse error: {err.problem}", line=line) from err
    if node is None:
        raise ScenarioError("scenario file is empty")
    lines: dict = {}
    data = _to_python(node, lines, "")
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping at top level", line=1)
    return data, lines


def _check_keys(data: dict, schema: dict, lines: dict, prefix: str = ""):
    for key, value in data.items():
        name = f"{prefix}.{key}" if prefix else key
        if key not in schema:
            raise ScenarioError(f"unknown key '{name}'", field=name, line=lines.get(name))
        sub = schema[key]
        if isinstance(sub, dict):
            if not isinstance(value, dict):
                raise ScenarioError(f"'{name}' must be a mapping", field=name, line=lines.get(name))
            _check_keys(value, sub, lines, name)
        else:
            _check_type(value, sub, name, lines)


def _check_type(value, kind: str, name: str, lines: dict):
    ok = {
        "str": isinstance(value, str),
        "int": isinstance(value, int) and not isinstance(value, bool),
        "real": isinstance(value, (int, float)) and not isinstance(value, bool),
        "list": isinstance(value, list),
    }[kind]
    if not ok:
        raise ScenarioError(f"'{name}' must be of type {kind}, got {value!r}", field=name,
                            line=lines.get(name))


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _get(data: dict, dotted: str):
    cur = data
    for part in dotted.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return None
        cur = cur[part]
    return cur


def _point(value, m: int, name: str, lines: dict) -> tuple[float, ...]:
    if not isinstance(value, list) or len(value) != m or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ScenarioError(f"'{name}' must be a list of {m} numbers", field=name,
                            line=lines.get(name))
    return tuple(float(v) for v in value)


def from_dict(data: dict, lines: dict | None = None, default_name: str = "scenario") -> Scenario:
    """Validate a scenario mapping (after optional preset expansion)."""
    lines = lines or {}
    _check_keys(data, SCHEMA, lines)
    preset = data.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ScenarioError(f"unknown preset '{preset}' (have {', '.join(PRESETS)})",
                                field="preset", line=lines.get("preset"))
        data = _merge(PRESETS[preset], data)
    for req in REQUIRED:
        if _get(data, req) is None:
            raise ScenarioError(f"missing required field '{req}'", field=req)

    ham = data["hamiltonian"]
    m = ham.get("m", 1)
    if m < 1:
        raise ScenarioError("hamiltonian.m must be at least 1", field="hamiltonian.m",
                            line=lines.get("hamiltonian.m"))
    for key in ("V", "A", "g"):
        src = ham.get(key, "0" if key == "A" else "1")
        variables = ex.variables_for(m, x=key != "g")
        try:
            ex.parse(src, m, variables=variables)
        except AdiabaticaError as err:
            raise ScenarioError(f"hamiltonian.{key}: {err}", field=f"hamiltonian.{key}",
                                line=lines.get(f"hamiltonian.{key}")) from err

    gd = data["grid"]
    try:
        grid = make_grid(float(gd["x_min"]), float(gd["x_max"]), gd["n"],
                         gd.get("boundary", "dirichlet"), gd.get("order", 2))
    except (AdiabaticaError, ValueError) as err:
        raise ScenarioError(f"grid: {err}", field="grid", line=lines.get("grid")) from err

    run = data["run"]
    T = float(run["T"])
    if not T > 0:
        raise ScenarioError("run.T must be positive", field="run.T", line=lines.get("run.T"))
    level = run.get("level", 0)
    k_buffer = run.get("k_buffer", max(4, level + 2))
    sps = run.get("steps_per_sample", 16)
    if not 0 <= level < k_buffer:
        raise ScenarioError(f"run.level must lie in 0..k_buffer-1 = {k_buffer - 1}",
                            field="run.level", line=lines.get("run.level"))
    if k_buffer > grid.n:
        raise ScenarioError("run.k_buffer exceeds the number of grid points",
                            field="run.k_buffer", line=lines.get("run.k_buffer"))
    if sps < 1:
        raise ScenarioError("run.steps_per_sample must be at least 1",
                            field="run.steps_per_sample", line=lines.get("run.steps_per_sample"))

    path = data.get("path")
    if not path:
        raise ScenarioError("missing required field 'path'", field="path")
    start, segments, samples = None, (), None
    if "samples" in path:
        if "segments" in path or "start" in path:
            raise ScenarioError("path takes either 'samples' or 'start'+'segments'",
                                field="path", line=lines.get("path"))
        rows = path["samples"]
        try:
            samples = np.array(rows, dtype=float)
        except (TypeError, ValueError) as err:
            raise ScenarioError("path.samples must be rows of numbers", field="path.samples",
                                line=lines.get("path.samples")) from err
        if samples.ndim != 2 or samples.shape[1] != m + 1 or len(samples) < 2:
            raise ScenarioError(f"path.samples needs at least two rows of {m + 1} numbers (t, R)",
                                field="path.samples", line=lines.get("path.samples"))
        try:
            ParameterPath(samples[:, 0], samples[:, 1:], closed=_returns(samples[:, 1:]))
        except ValueError as err:
            raise ScenarioError(f"path.samples: {err}", field="path.samples",
                                line=lines.get("path.samples")) from err
        if not samples[-1, 0] > 0:
            raise ScenarioError("path.samples must end at a positive time", field="path.samples")
    else:
        if "start" not in path or "segments" not in path:
            raise ScenarioError("path needs 'start' and 'segments' (or 'samples')",
                                field="path.start" if "start" not in path else "path.segments",
                                line=lines.get("path"))
        start = _point(path["start"], m, "path.start", lines)
        segs = []
        for i, s in enumerate(path["segments"]):
            name = f"path.segments[{i}]"
            if not isinstance(s, dict):
                raise ScenarioError(f"'{name}' must be a mapping", field=name)
            for k in s:
                if k not in SEGMENT_KEYS:
                    raise ScenarioError(f"unknown key '{name}.{k}'", field=f"{name}.{k}",
                                        line=lines.get(f"{name}.{k}"))
            if "to" not in s or "samples" not in s:
                raise ScenarioError(f"'{name}' needs 'to' and 'samples'", field=name)
            _check_type(s["samples"], "int", f"{name}.samples", lines)
            profile = s.get("profile", "smoothstep")
            weight = s.get("weight", 1.0)
            _check_type(weight, "real", f"{name}.weight", lines)
            if s["samples"] < 1 or profile not in PROFILES or not weight > 0:
                raise ScenarioError(
                    f"'{name}': samples >= 1, weight > 0 and profile in {PROFILES} required",
                    field=name, line=lines.get(f"{name}.to"))
            segs.append(Segment(_point(s["to"], m, f"{name}.to", lines), s["samples"],
                                profile, float(weight)))
        if not segs:
            raise ScenarioError("path.segments is empty", field="path.segments")
        segments = tuple(segs)

    tol = Tolerances(**data.get("tolerances", {}))
    if not (tol.eps_node_rel > 0 and tol.norm_step > 0 and tol.gap_threshold >= 0):
        raise ScenarioError("tolerances must be positive (gap_threshold non-negative)",
                            field="tolerances", line=lines.get("tolerances"))
    outputs = tuple(data.get("outputs", OUTPUTS))
    for o in outputs:
        if o not in OUTPUTS:
            raise ScenarioError(f"unknown output '{o}' (have {', '.join(OUTPUTS)})",
                                field="outputs", line=lines.get("outputs"))
    assertions = data.get("assertions", {})
    for k, v in assertions.items():
        if ASSERTIONS[k] == "range" and set(v) != {"value", "tol"}:
            raise ScenarioError(f"assertions.{k} needs 'value' and 'tol'",
                                field=f"assertions.{k}", line=lines.get(f"assertions.{k}"))

    scenario = Scenario(
        name=data.get("name", preset or default_name),
        V=ham["V"], A=ham.get("A", "0"), g=ham.get("g", "1"), m=m,
        hbar=float(ham.get("hbar", 1.0)), grid=grid, T=T, level=level,
        steps_per_sample=sps, k_buffer=k_buffer, start=start, segments=segments,
        samples=samples, tolerances=tol, outputs=outputs, assertions=dict(assertions),
        preset=preset,
    )
    try:
        scenario.spec()
        scenario.path()
    except (AdiabaticaError, ValueError) as err:
        raise ScenarioError(str(err)) from err
    return scenario


def load_scenario(file) -> Scenario:
    path = Path(file)
    try:
        text = path.read_text()
    except OSError as err:
        raise ScenarioError(f"cannot read scenario file: {err}") from err
    data, lines = parse_text(text)
    return from_dict(data, lines, default_name=path.stem)


def preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise ScenarioError(f"unknown preset '{name}'", field="preset")
    return from_dict({"preset": name})


def list_presets() -> str:
    out = []
    for name, p in PRESETS.items():
        h = p["hamiltonian"]
        out.append(f"{name}: {p['description']}")
        out.append(f"  V = {h['V']}")
        out.append(f"  A = {h['A']}")
        out.append(f"  g = {h['g']}")
        out.append(f"  m = {h['m']}, T = {p['run']['T']:g}")
    return "\n".join(out)
