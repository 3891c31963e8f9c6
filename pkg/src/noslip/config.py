"""YAML run configurations and table descriptions.

A table is given either by a builder (or preset) name with parameters::

    table:
      builder: stadium
      params: {half_length: 1.0, cap_radius: 1.0}

or as a raw piece list::

    table:
      pieces:
        - segment: {a: [0, 0], b: [1, 0]}
        - arc: {center: [0.5, 0], radius: 0.5, start: 0, span: 3.141592653589793}
        - line: {point: [0, 0], direction: [1, 0], side: 1}
      gluings:
        - {source: 0, target: 2, translation: [0, 1]}
      bounded: true
      escape_radius: 1.0e6

Run settings::

    run:
      max_collisions: 2000
      seed: 0
      format: csv          # or jsonl
      jobs: 1
      law: no_slip         # or specular
      detect_period: true
      pos_tol: null        # default 1e-9 x table diameter
      vel_tol: 1.0e-9
    initial_conditions:
      kind: random         # random | grid | list
      count: 20
      positions: 4         # grid only
      velocities: 5        # grid only
      list:                # list only
        - {position: [0.1, 0.2], velocity: [0.0, 0.6, 0.8]}
        - {piece: 0, s: 0.5, velocity: [0.1, 0.2, 0.97]}   # collision-frame velocity

All lengths are in table units and all angles in radians.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .portrait import Sampling
from .tables import BUILDERS, PRESETS, Arc, Gluing, InfiniteLine, Segment, Table, build

FORMATS = ("csv", "jsonl")
LAWS = ("no_slip", "specular")


class ConfigError(ValueError):
    """Invalid configuration; the message names the field and, when known, the line."""

    def __init__(self, path: str, message: str, line: int | None = None):
        self.path = path
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{path}: {message}")


def _line_index(text: str) -> dict[str, int]:
    """Map dotted field paths to 1-based line numbers in the YAML source."""
    out: dict[str, int] = {}
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return out

    def walk(node, path):
        out[path or "<root>"] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                walk(v, f"{path}.{k.value}" if path else str(k.value))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, f"{path}[{i}]")

    if root is not None:
        walk(root, "")
    return out


@dataclass
class RunConfig:
    table: Table
    sampling: Sampling
    max_collisions: int = 2000
    seed: int = 0
    format: str = "csv"
    jobs: int = 1
    law: str = "no_slip"
    detect_period: bool = True
    pos_tol: float | None = None
    vel_tol: float = 1e-9
    source: dict = field(default_factory=dict)


class _Reader:
    def __init__(self, lines: dict[str, int]):
        self.lines = lines

    def fail(self, path: str, message: str):
        line = self.lines.get(path)
        # fall back to the closest enclosing field that has a line
        p = path
        while line is None and ("." in p or "[" in p):
            p = p[: max(p.rfind("."), p.rfind("["))]
            line = self.lines.get(p)
        raise ConfigError(path, message, line)

    def mapping(self, value, path) -> dict:
        if value is None:
            return {}
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping, got {type(value).__name__}")
        return value

    def number(self, d: dict, key: str, path: str, default=None, kind=float, positive=False):
        if key not in d or d[key] is None:
            if default is None and kind is not None and positive:
                self.fail(f"{path}.{key}", "required field is missing")
            return default
        v = d[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"{path}.{key}", f"expected a number, got {v!r}")
        if kind is int and (not float(v).is_integer()):
            self.fail(f"{path}.{key}", f"expected an integer, got {v!r}")
        v = kind(v)
        if not math.isfinite(v):
            self.fail(f"{path}.{key}", "must be finite")
        if positive and v <= 0:
            self.fail(f"{path}.{key}", f"must be positive, got {v!r}")
        return v

    def vector(self, d: dict, key: str, path: str, size: int):
        v = d.get(key)
        if (not isinstance(v, (list, tuple)) or len(v) != size
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
            self.fail(f"{path}.{key}", f"expected a list of {size} numbers, got {v!r}")
        return [float(x) for x in v]


def _piece(r: _Reader, spec, path: str):
    spec = r.mapping(spec, path)
    if len(spec) != 1:
        r.fail(path, "each piece must have exactly one of: segment, arc, line")
    (kind, body), = spec.items()
    p = f"{path}.{kind}"
    body = r.mapping(body, p)
    side = int(r.number(body, "side", p, default=1, kind=int))
    try:
        if kind == "segment":
            return Segment(tuple(r.vector(body, "a", p, 2)), tuple(r.vector(body, "b", p, 2)), side)
        if kind == "arc":
            return Arc(tuple(r.vector(body, "center", p, 2)),
                       r.number(body, "radius", p, positive=True),
                       r.number(body, "start", p, default=0.0),
                       r.number(body, "span", p, default=2.0 * math.pi), side)
        if kind == "line":
            return InfiniteLine(tuple(r.vector(body, "point", p, 2)),
                                tuple(r.vector(body, "direction", p, 2)), side)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        r.fail(p, str(exc))
    r.fail(path, f"unknown piece kind {kind!r}; use segment, arc or line")


def _table(r: _Reader, spec, path: str = "table") -> Table:
    if isinstance(spec, str):
        spec = {"builder": spec}
    spec = r.mapping(spec, path)
    if "builder" in spec:
        params = r.mapping(spec.get("params"), f"{path}.params")
        if str(spec["builder"]) not in BUILDERS and str(spec["builder"]) not in PRESETS:
            r.fail(f"{path}.builder", f"unknown table {spec['builder']!r}; choose from "
                                      f"{sorted(set(BUILDERS) | set(PRESETS))}")
        try:
            return build(str(spec["builder"]), **params)
        except TypeError as exc:
            r.fail(f"{path}.params", str(exc))
        except ValueError as exc:
            r.fail(f"{path}.params", str(exc))
    if "pieces" not in spec:
        r.fail(path, "give either 'builder' or 'pieces'")
    pieces = spec["pieces"]
    if not isinstance(pieces, list) or not pieces:
        r.fail(f"{path}.pieces", "expected a non-empty list")
    built = [_piece(r, p, f"{path}.pieces[{i}]") for i, p in enumerate(pieces)]
    gluings = []
    for i, g in enumerate(spec.get("gluings") or []):
        gp = f"{path}.gluings[{i}]"
        g = r.mapping(g, gp)
        gluings.append(Gluing(int(r.number(g, "source", gp, kind=int, default=-1)),
                              int(r.number(g, "target", gp, kind=int, default=-1)),
                              tuple(r.vector(g, "translation", gp, 2))))
    bounded = bool(spec.get("bounded", True))
    esc = r.number(spec, "escape_radius", path, default=math.inf)
    try:
        return Table(tuple(built), tuple(gluings), bounded=bounded, escape_radius=esc,
                     name="pieces", params={"pieces": len(built)})
    except ValueError as exc:
        r.fail(path, str(exc))


def _sampling(r: _Reader, spec, seed: int) -> Sampling:
    path = "initial_conditions"
    spec = r.mapping(spec, path)
    kind = spec.get("kind", "random")
    if kind not in ("random", "grid", "list"):
        r.fail(f"{path}.kind", f"expected random, grid or list, got {kind!r}")
    ics = ()
    if kind == "list":
        items = spec.get("list")
        if not isinstance(items, list) or not items:
            r.fail(f"{path}.list", "expected a non-empty list of initial conditions")
        out = []
        for i, ic in enumerate(items):
            ip = f"{path}.list[{i}]"
            ic = r.mapping(ic, ip)
            if "piece" in ic:
                out.append({"piece": int(r.number(ic, "piece", ip, kind=int, default=0)),
                            "s": r.number(ic, "s", ip, default=0.0),
                            "velocity": r.vector(ic, "velocity", ip, 3)})
            else:
                out.append({"position": r.vector(ic, "position", ip, 2),
                            "velocity": r.vector(ic, "velocity", ip, 3),
                            "x0": r.number(ic, "x0", ip, default=0.0)})
        ics = tuple(out)
    return Sampling(kind=kind,
                    count=int(r.number(spec, "count", path, default=20, kind=int)),
                    seed=seed,
                    grid_positions=int(r.number(spec, "positions", path, default=4, kind=int)),
                    grid_velocities=int(r.number(spec, "velocities", path, default=5, kind=int)),
                    initial_conditions=ics)


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("<document>", f"invalid YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from None
    r = _Reader(_line_index(text))
    data = r.mapping(data, "<root>")
    unknown = set(data) - {"table", "run", "initial_conditions"}
    if unknown:
        r.fail(sorted(unknown)[0], "unknown top-level field")
    if "table" not in data:
        r.fail("table", "required field is missing")
    table = _table(r, data["table"])
    run = r.mapping(data.get("run"), "run")
    seed = int(r.number(run, "seed", "run", default=0, kind=int))
    if not 0 <= seed < 2 ** 64:
        r.fail("run.seed", "seed must be a 64-bit unsigned integer")
    fmt = run.get("format", "csv")
    if fmt not in FORMATS:
        r.fail("run.format", f"expected one of {FORMATS}, got {fmt!r}")
    law = run.get("law", "no_slip")
    if law not in LAWS:
        r.fail("run.law", f"expected one of {LAWS}, got {law!r}")
    sampling = _sampling(r, data.get("initial_conditions"), seed)
    return RunConfig(
        table=table,
        sampling=sampling,
        max_collisions=int(r.number(run, "max_collisions", "run", default=2000, kind=int)),
        seed=seed,
        format=fmt,
        jobs=int(r.number(run, "jobs", "run", default=1, kind=int)),
        law=law,
        detect_period=bool(run.get("detect_period", True)),
        pos_tol=r.number(run, "pos_tol", "run", default=None),
        vel_tol=r.number(run, "vel_tol", "run", default=1e-9),
        source=data,
    )


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())


def table_from_arg(arg: str) -> Table:
    """A builder/preset name, ``name:key=value,...``, or a YAML file path."""
    p = Path(arg)
    if p.suffix in (".yaml", ".yml") or p.is_file():
        text = p.read_text()
        data = yaml.safe_load(text)
        r = _Reader(_line_index(text))
        data = r.mapping(data, "<root>")
        return _table(r, data.get("table", data))
    name, _, rest = arg.partition(":")
    params: dict[str, Any] = {}
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError("--table", f"expected key=value, got {item!r}")
        try:
            params[key.strip()] = yaml.safe_load(value)
        except yaml.YAMLError:
            raise ConfigError("--table", f"cannot parse value {value!r}") from None
    try:
        return build(name, **params)
    except (TypeError, ValueError) as exc:
        raise ConfigError("--table", str(exc)) from None
