"""Command-line front end.

Exit codes: 0 success, 1 configuration or argument error, 2 verification failure.
"""
from __future__ import annotations

import argparse
import collections
import contextlib
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis as A
from . import collision as C
from . import portrait as P
from . import tables as T
from .config import ConfigError, RunConfig, load_config, table_from_arg
from .flow import TRACE_COLUMNS, PhasePoint, iterate, trace_rows

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2


def _floats(text: str, n: int, flag: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(flag, f"expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise ConfigError(flag, f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _resolve(args) -> RunConfig:
    """Merge ``--config`` with command-line overrides."""
    if args.config:
        cfg = load_config(args.config)
    else:
        if not args.table:
            raise ConfigError("--table", "give --table or --config")
        cfg = RunConfig(table=table_from_arg(args.table), sampling=P.Sampling())
    if args.table and args.config:
        cfg.table = table_from_arg(args.table)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed", "seed must be a 64-bit unsigned integer")
        cfg.seed = args.seed
    if args.max_collisions is not None:
        if args.max_collisions < 1:
            raise ConfigError("--max-collisions", "must be at least 1")
        cfg.max_collisions = args.max_collisions
    if args.format:
        cfg.format = args.format
    if args.jobs is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs", "must be at least 1")
        cfg.jobs = args.jobs
    s = cfg.sampling
    count = getattr(args, "count", None)
    cfg.sampling = P.Sampling(kind=s.kind, count=count or s.count, seed=cfg.seed,
                              grid_positions=s.grid_positions, grid_velocities=s.grid_velocities,
                              initial_conditions=s.initial_conditions)
    if getattr(args, "velocity", None):
        v = _floats(args.velocity, 3, "--velocity")
        if args.position:
            ic = {"position": _floats(args.position, 2, "--position"), "velocity": v}
        else:
            ic = {"piece": args.piece, "s": args.s, "velocity": v}
        cfg.sampling = P.Sampling(kind="list", seed=cfg.seed, initial_conditions=(ic,))
    return cfg


@contextlib.contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit(obj, path: str | None = None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    if path and path != "-":
        Path(path).write_text(text + "\n")
    else:
        print(text)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _starts(cfg: RunConfig) -> list[PhasePoint]:
    if cfg.sampling.kind == "list":
        return P.sample_initial_conditions(cfg.table, cfg.sampling)
    if not cfg.table.bounded:
        raise ConfigError("initial_conditions", "unbounded tables need an explicit list of "
                                                "initial conditions (or --position/--velocity)")
    return P.sample_initial_conditions(cfg.table, cfg.sampling)


# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _resolve(args)
    starts = _starts(cfg)
    summaries = []
    header = {"format": "noslip-trace", "version": 1, "table": cfg.table.describe(),
              "sampling": cfg.sampling.describe(), "seed": cfg.seed, "law": cfg.law,
              "max_collisions": cfg.max_collisions}
    with _output(args.out) as fh:
        if cfg.format == "csv":
            for k, v in header.items():
                fh.write(f"# {k}: {json.dumps(v, sort_keys=True)}\n")
            fh.write(",".join(("orbit",) + TRACE_COLUMNS) + "\n")
        else:
            fh.write(json.dumps({**header, "columns": ["orbit", *TRACE_COLUMNS]},
                                sort_keys=True) + "\n")
        for k, pp in enumerate(starts):
            try:
                o = iterate(cfg.table, pp, cfg.max_collisions, law=cfg.law,
                            detect=cfg.detect_period, pos_tol=cfg.pos_tol, vel_tol=cfg.vel_tol)
            except ValueError as exc:
                summaries.append({"orbit": k, "termination": "ERROR", "error": str(exc)})
                continue
            summaries.append({"orbit": k, "termination": o.termination.name,
                              "period": o.period, "events": o.n_events})
            for r in trace_rows(o):
                if cfg.format == "csv":
                    fh.write(",".join([str(k), str(r[0]), str(r[1]), *map(_fmt, r[2:])]) + "\n")
                else:
                    rec = {"orbit": k, "index": r[0], "piece": r[1]}
                    rec.update({c: float(_fmt(x)) for c, x in zip(TRACE_COLUMNS[2:], r[2:])})
                    fh.write(json.dumps(rec) + "\n")
    terms = collections.Counter(s["termination"] for s in summaries)
    periods = collections.Counter(s.get("period") for s in summaries if s.get("period"))
    report = {"orbits": len(summaries), "terminations": dict(terms),
              "periodic_fraction": terms.get("PERIOD_DETECTED", 0) / max(1, len(summaries)),
              "period_histogram": {str(p): c for p, c in sorted(periods.items())}}
    if len(summaries) <= 20:
        report["per_orbit"] = summaries
    print(json.dumps(report, sort_keys=True), file=sys.stderr if args.out in (None, "-")
          else sys.stdout)
    if terms.get("ERROR", 0) == len(summaries):
        print("error: no initial condition could be run", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def cmd_portrait(args) -> int:
    cfg = _resolve(args)
    if not cfg.table.bounded:
        raise ConfigError("table", "phase portraits need a bounded table")
    ds = P.run_portrait(cfg.table, cfg.sampling, cfg.max_collisions, jobs=cfg.jobs, law=cfg.law,
                        detect=False, pos_tol=cfg.pos_tol, vel_tol=cfg.vel_tol)
    meta = {"seed": cfg.seed}
    with _output(args.out) as fh:
        (P.write_dataset_csv if cfg.format == "csv" else P.write_dataset_jsonl)(ds, fh, meta)
    if args.svg:
        with open(args.svg, "w") as fh:
            P.write_svg(ds, fh)
    return EXIT_OK


def _wedge_row(theta: float, samples: int, seed: int) -> dict:
    region = A.escape_region(theta)
    row = {"theta": theta, "alpha": region.alpha, "cos_alpha": math.cos(region.alpha),
           "periodic": region.period is not None,
           "period": 2 * region.period if region.period else None,
           "region": region.kind, "cap_radius": region.cap_radius}
    if region.kind == "polygon":
        row["polygon_order"] = region.order
    else:
        row["cap_area"] = A.cap_area(theta)
    if samples:
        row["non_escape_area"] = A.non_escape_area(theta, samples, seed)
    return row


def cmd_wedge(args) -> int:
    rows = []
    if args.theta is not None:
        rows.append(_wedge_row(args.theta, args.samples, args.seed or 0))
    if args.alpha is not None:
        for theta in C.theta_for_alpha(args.alpha):
            rows.append(_wedge_row(theta, args.samples, args.seed or 0))
        if not rows:
            raise ConfigError("--alpha", "no wedge angle gives this rotation angle")
    if args.sweep:
        lo, hi, step = _floats(args.sweep, 3, "--sweep")
        if step <= 0 or not (0 < lo <= hi < math.pi):
            raise ConfigError("--sweep", "need 0 < start <= stop < pi and step > 0")
        grid = np.round(np.arange(lo, hi + 0.5 * step, step), 12)
        rows.extend(_wedge_row(float(t), args.samples, args.seed or 0) for t in grid)
        areas = [r.get("non_escape_area") for r in rows[-len(grid):]]
        if args.samples:
            monotone = all(b <= a for a, b in zip(areas, areas[1:]))
            rows.append({"sweep_area_non_increasing": monotone})
    if not rows:
        raise ConfigError("wedge", "give --theta, --alpha or --sweep")
    _emit(rows, args.out)
    return EXIT_OK


def cmd_circle(args) -> int:
    if args.n is not None:
        v = A.circle_ngon_velocity(args.n)
    elif args.velocity:
        v = np.asarray(_floats(args.velocity, 3, "--velocity"))
        v = v / np.linalg.norm(v)
    else:
        raise ConfigError("circle", "give --n or --velocity")
    cp = A.circle_caustics(v) if v[2] != 0 else None
    x, vg = A.circle_start(1.0, 0.0, v)
    o = iterate(T.circle(1.0), PhasePoint(x, vg), args.max_collisions or 1000, detect=False)
    mids = A.chord_distances(o, (0.0, 0.0), start=x)
    report = {"velocity": v, "r1": cp.r1, "r2": cp.r2, "collisions": o.n_events,
              "odd_flight_midpoint_error": float(np.abs(mids[0::2] - abs(cp.r1)).max()),
              "even_flight_midpoint_error": float(np.abs(mids[1::2] - abs(cp.r2)).max()),
              "max_speed_error": o.max_speed_error}
    if args.n is not None and args.n >= 2:
        report["closure_error"] = float(np.linalg.norm(o.points[args.n - 1] - x))
    _emit(report, args.out)
    return EXIT_OK


def cmd_triangle(args) -> int:
    tri = T.regular_polygon(3, 1.0)
    rng = np.random.default_rng(args.seed or 0)
    hist, words = collections.Counter(), collections.Counter()
    degenerate = not_allowed = 0
    x0, y0, x1, y1 = tri.bbox
    for _ in range(args.count or 1000):
        while True:
            p = rng.uniform((x0, y0), (x1, y1))
            if tri.contains(p) and tri.distance_to_boundary(p) > 1e-6:
                break
        o = iterate(tri, PhasePoint.unit(p, rng.standard_normal(3)), args.max_collisions or 200)
        cls = A.triangle_classify(o)
        if cls.degenerate:
            degenerate += 1
            continue
        hist[str(cls.period)] += 1
        words[cls.word] += 1
        not_allowed += not cls.allowed
    S1, S2 = A.triangle_cycle_matrices()
    _emit({"period_histogram": dict(hist), "words": dict(words), "degenerate": degenerate,
           "outside_allowed_classes": not_allowed,
           "identity_S1_S2^3_S1^2": float(np.abs(S1 @ np.linalg.matrix_power(S2, 3) @ S1 @ S1
                                                 - np.eye(3)).max()),
           "identity_S1^6": float(np.abs(np.linalg.matrix_power(S1, 6) - np.eye(3)).max()),
           "seed": args.seed or 0}, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify
    names = args.only.split(",") if args.only else list(verify.CHECKS)
    unknown = [n for n in names if n not in verify.CHECKS]
    if unknown:
        raise ConfigError("--only", f"unknown checks {unknown}; available: {list(verify.CHECKS)}")
    results = []
    for n in names:
        r = verify.run_check(n)
        results.append(r)
        print(r.line())
        if not r.passed:
            print(f"    observed: {json.dumps(r.observed, default=_json_default)}")
            print(f"    expected: {json.dumps(r.expected, default=_json_default)}")
        if r.budget is not None and r.runtime > r.budget:
            print(f"    note: runtime {r.runtime:.2f}s over the {r.budget:.0f}s budget")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if args.out:
        _emit([r.__dict__ for r in results], args.out)
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--table", help="builder or preset name (name:key=value,...) or YAML file")
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--seed", type=int, help="64-bit seed for sampled initial conditions")
    common.add_argument("--max-collisions", type=int, dest="max_collisions")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "jsonl"))
    common.add_argument("--jobs", type=int, help="worker threads")

    p = argparse.ArgumentParser(prog="noslip", description="No-slip billiard simulations.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run orbits and write event traces")
    s.add_argument("--count", type=int, help="number of sampled initial conditions")
    s.add_argument("--position", help="start position x,y")
    s.add_argument("--velocity", help="start velocity v0,v1,v2 (rescaled to unit speed)")
    s.add_argument("--piece", type=int, default=0,
                   help="boundary piece for a collision-frame --velocity without --position")
    s.add_argument("--s", type=float, default=0.0, help="arclength on --piece")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("portrait", parents=[common], help="velocity phase-portrait dataset")
    s.add_argument("--count", type=int)
    s.add_argument("--svg", help="also write an SVG scatter plot")
    s.set_defaults(func=cmd_portrait)

    s = sub.add_parser("wedge", parents=[common], help="wedge spectrum and escape regions")
    s.add_argument("--theta", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--sweep", help="start,stop,step over wedge angles")
    s.add_argument("--samples", type=int, default=0,
                   help="Monte Carlo samples for the non-escape area (0 to skip)")
    s.set_defaults(func=cmd_wedge)

    s = sub.add_parser("circle", parents=[common], help="circle caustics and n-gon orbits")
    s.add_argument("--n", type=int)
    s.add_argument("--velocity", help="collision-frame velocity v0,v_t,v_n")
    s.set_defaults(func=cmd_circle)

    s = sub.add_parser("triangle", parents=[common], help="equilateral-triangle period census")
    s.add_argument("--count", type=int)
    s.set_defaults(func=cmd_triangle)

    s = sub.add_parser("verify", parents=[common], help="run the acceptance checks")
    s.add_argument("--only", help="comma-separated check names")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
