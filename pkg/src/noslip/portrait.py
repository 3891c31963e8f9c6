"""Velocity phase portraits: seeded initial conditions, batch runs, output files.

Every collision is projected to ``(s, v_t, v0)``: arclength along the
boundary, outgoing tangential velocity along the piece's forward tangent,
and rotational velocity. ``(v_t, v0)`` lies in the closed unit disk.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from . import _kernels as K
from .flow import Orbit, PhasePoint, iterate
from .tables import Table

DATASET_VERSION = 1
DATASET_COLUMNS = ("orbit", "index", "piece", "s", "s_boundary", "v_t", "v0")
GENERATOR = "numpy.random.Generator(PCG64)"


@dataclass(frozen=True)
class Sampling:
    """Initial-condition spec: ``random`` (seeded), ``grid``, or an explicit ``list``."""

    kind: str = "random"
    count: int = 20
    seed: int = 0
    grid_positions: int = 4
    grid_velocities: int = 5
    initial_conditions: tuple = ()

    def __post_init__(self):
        if self.kind not in ("random", "grid", "list"):
            raise ValueError(f"sampling kind must be random, grid or list, got {self.kind!r}")
        if self.kind == "random" and self.count < 1:
            raise ValueError("sampling count must be at least 1")
        if self.kind == "list" and not self.initial_conditions:
            raise ValueError("list sampling needs at least one initial condition")

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "random":
            d.update(count=self.count, seed=self.seed, generator=GENERATOR)
        elif self.kind == "grid":
            d.update(positions=self.grid_positions, velocities=self.grid_velocities)
        else:
            d.update(count=len(self.initial_conditions))
        return d


@dataclass
class OrbitRecord:
    initial: PhasePoint
    termination: str
    period: int | None
    pieces: np.ndarray
    s: np.ndarray
    s_boundary: np.ndarray
    v_t: np.ndarray
    v0: np.ndarray
    error: str | None = None

    def __len__(self) -> int:
        return len(self.pieces)


@dataclass
class PortraitDataset:
    table: dict
    sampling: dict
    max_collisions: int
    orbits: list[OrbitRecord] = field(default_factory=list)

    def points(self, k: int | None = None) -> np.ndarray:
        """``(v_t, v0)`` pairs of one orbit, or of all orbits stacked."""
        recs = self.orbits if k is None else [self.orbits[k]]
        if not recs:
            return np.empty((0, 2))
        return np.column_stack([np.concatenate([r.v_t for r in recs]),
                                np.concatenate([r.v0 for r in recs])])


# ---------------------------------------------------------------------------
# boundary geometry helpers


def _collision_pieces(table: Table) -> list[int]:
    return [i for i, p in enumerate(table.pieces)
            if i not in table.glued and math.isfinite(p.length)]


def boundary_point(table: Table, sigma: float) -> tuple[int, float]:
    """Piece and local arclength of the point at total boundary arclength ``sigma``."""
    idx = _collision_pieces(table)
    lengths = np.array([table.pieces[i].length for i in idx])
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    k = int(np.clip(np.searchsorted(cum, sigma, side="right") - 1, 0, len(idx) - 1))
    return idx[k], float(min(sigma - cum[k], lengths[k]))


def forward_tangents(table: Table, pieces: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Forward tangent ``(n2, -n1)`` of the inward normal at each collision point."""
    P = table.packed
    out = np.empty((len(pieces), 2))
    kinds = P[pieces, 0].astype(int)
    side = P[pieces, 6]
    arc = kinds == K.ARC
    if np.any(arc):
        c = P[pieces[arc]][:, 1:3]
        r = P[pieces[arc], 3]
        nrm = -side[arc, None] * (points[arc] - c) / r[:, None]
        out[arc] = np.column_stack([nrm[:, 1], -nrm[:, 0]])
    st = ~arc
    if np.any(st):
        rows = P[pieces[st]]
        seg = rows[:, 0] == K.SEGMENT
        u = np.where(seg[:, None], rows[:, 3:5] - rows[:, 1:3], rows[:, 3:5])
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        # inward normal is side * left-normal, tangent = (n2, -n1) = side * u
        out[st] = side[st, None] * u
    return out


def _inward_normal(table: Table, piece: int, s: float) -> np.ndarray:
    return table.pieces[piece].normal_at(s)


# ---------------------------------------------------------------------------
# sampling


def _hemisphere(rng: np.random.Generator, nu: np.ndarray) -> np.ndarray:
    """Uniform unit velocity with positive planar component along ``nu``."""
    while True:
        v = rng.standard_normal(3)
        n = float(np.linalg.norm(v))
        if n == 0.0:
            continue
        v /= n
        dot = v[1] * nu[0] + v[2] * nu[1]
        if dot == 0.0:
            continue
        if dot < 0.0:
            v[1:] -= 2.0 * dot * nu
        return v


def _boundary_start(table: Table, piece: int, s: float, v_local: np.ndarray) -> PhasePoint:
    """Start on the boundary with collision-frame velocity ``(v0, v_t, v_n)``."""
    nu = _inward_normal(table, piece, s)
    t = np.array([nu[1], -nu[0]])
    planar = v_local[1] * t + v_local[2] * nu
    pos = table.pieces[piece].point_at(s)
    return PhasePoint.unit(pos, [v_local[0], planar[0], planar[1]])


def sample_initial_conditions(table: Table, sampling: Sampling) -> list[PhasePoint]:
    """Deterministic list of starting phase points for a bounded table."""
    if sampling.kind == "list":
        out = []
        for ic in sampling.initial_conditions:
            if "piece" in ic:
                out.append(_boundary_start(table, int(ic["piece"]), float(ic["s"]),
                                           np.asarray(ic["velocity"], dtype=float)))
            else:
                out.append(PhasePoint.unit(ic["position"], ic["velocity"], ic.get("x0", 0.0)))
        return out
    total = table.boundary_length
    if not total > 0.0 or not math.isfinite(total):
        raise ValueError("boundary sampling needs a table with finite collision boundary")
    out = []
    if sampling.kind == "random":
        rng = np.random.default_rng(sampling.seed)
        for _ in range(sampling.count):
            piece, s = boundary_point(table, float(rng.uniform(0.0, total)))
            nu = _inward_normal(table, piece, s)
            v = _hemisphere(rng, nu)
            out.append(PhasePoint(table.pieces[piece].point_at(s), v))
        return out
    m = sampling.grid_velocities
    axis = (np.arange(m) + 0.5) / m * 2.0 - 1.0
    for j in range(sampling.grid_positions):
        piece, s = boundary_point(table, (j + 0.5) / sampling.grid_positions * total)
        for vt in axis:
            for v0 in axis:
                r2 = vt * vt + v0 * v0
                if r2 >= 1.0:
                    continue
                out.append(_boundary_start(table, piece, s, np.array([v0, vt, math.sqrt(1.0 - r2)])))
    return out


# ---------------------------------------------------------------------------
# running


def project(orbit: Orbit) -> OrbitRecord:
    table = orbit.table
    pieces = orbit.pieces
    tang = forward_tangents(table, pieces, orbit.points)
    va = orbit.v_after
    v_t = np.einsum("ij,ij->i", va[:, 1:], tang)
    offsets = table.piece_offsets
    return OrbitRecord(orbit.initial, orbit.termination.name, orbit.period, pieces.copy(),
                       orbit.arclength.copy(), offsets[pieces] + orbit.arclength,
                       v_t, va[:, 0].copy())


def _run_one(table: Table, pp: PhasePoint, max_collisions: int, law: str, detect: bool,
             pos_tol, vel_tol: float) -> OrbitRecord:
    try:
        orbit = iterate(table, pp, max_collisions, law=law, detect=detect,
                        pos_tol=pos_tol, vel_tol=vel_tol)
    except ValueError as exc:
        empty = np.empty(0)
        return OrbitRecord(pp, "ERROR", None, np.empty(0, dtype=np.int64), empty, empty,
                           empty, empty, error=str(exc))
    return project(orbit)


def run_portrait(table: Table, sampling: Sampling, max_collisions: int = 2000, *,
                 jobs: int = 1, law: str = "no_slip", detect: bool = False,
                 pos_tol: float | None = None, vel_tol: float = 1e-9) -> PortraitDataset:
    """Iterate every sampled initial condition and collect velocity projections.

    Orbits are independent, so they may run on ``jobs`` worker threads;
    results are gathered in initial-condition order.
    """
    if not table.bounded:
        raise ValueError("phase portraits need a bounded table")
    ics = sample_initial_conditions(table, sampling)
    args = (max_collisions, law, detect, pos_tol, vel_tol)
    if jobs <= 1:
        recs = [_run_one(table, pp, *args) for pp in ics]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            recs = list(pool.map(lambda pp: _run_one(table, pp, *args), ics))
    return PortraitDataset(table.describe(), sampling.describe(), int(max_collisions), recs)


# ---------------------------------------------------------------------------
# output


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _header(ds: PortraitDataset, meta: dict | None) -> dict:
    return {"format": "noslip-portrait", "version": DATASET_VERSION, "table": ds.table,
            "sampling": ds.sampling, "max_collisions": ds.max_collisions, **(meta or {})}


def _orbit_summary(k: int, r: OrbitRecord) -> dict:
    return {"orbit": k, "position": [float(_fmt(x)) for x in r.initial.position],
            "velocity": [float(_fmt(x)) for x in r.initial.velocity],
            "termination": r.termination, "period": r.period, "events": len(r),
            **({"error": r.error} if r.error else {})}


def write_dataset_csv(ds: PortraitDataset, fh: IO[str], meta: dict | None = None) -> None:
    """CSV dataset: ``#`` header lines (JSON values), then one row per collision."""
    for key, value in _header(ds, meta).items():
        fh.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    for k, r in enumerate(ds.orbits):
        fh.write(f"# orbit: {json.dumps(_orbit_summary(k, r), sort_keys=True)}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(DATASET_COLUMNS)
    for k, r in enumerate(ds.orbits):
        for i in range(len(r)):
            w.writerow([k, i, int(r.pieces[i]), _fmt(r.s[i]), _fmt(r.s_boundary[i]),
                        _fmt(r.v_t[i]), _fmt(r.v0[i])])


def write_dataset_jsonl(ds: PortraitDataset, fh: IO[str], meta: dict | None = None) -> None:
    """JSON lines: a header object, then one object per orbit with column arrays."""
    fh.write(json.dumps(_header(ds, meta), sort_keys=True) + "\n")
    for k, r in enumerate(ds.orbits):
        rec = _orbit_summary(k, r)
        rec.update({
            "piece": r.pieces.tolist(),
            "s": [float(_fmt(x)) for x in r.s],
            "s_boundary": [float(_fmt(x)) for x in r.s_boundary],
            "v_t": [float(_fmt(x)) for x in r.v_t],
            "v0": [float(_fmt(x)) for x in r.v0],
        })
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


def dataset_bytes(ds: PortraitDataset, fmt: str = "csv", meta: dict | None = None) -> bytes:
    buf = io.StringIO()
    {"csv": write_dataset_csv, "jsonl": write_dataset_jsonl}[fmt](ds, buf, meta)
    return buf.getvalue().encode()


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f")


def write_svg(ds: PortraitDataset, fh: IO[str], size: int = 600, radius: float = 0.8) -> None:
    """Scatter of ``(v_t, v0)`` in the unit disk, one color per orbit."""
    half = size / 2.0
    scale = 0.95 * half
    fh.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">\n')
    fh.write(f'<rect width="{size}" height="{size}" fill="white"/>\n')
    fh.write(f'<circle cx="{half}" cy="{half}" r="{scale:.2f}" fill="none" stroke="black"/>\n')
    for k, r in enumerate(ds.orbits):
        color = _PALETTE[k % len(_PALETTE)]
        fh.write(f'<g fill="{color}">\n')
        for x, y in zip(r.v_t, r.v0):
            fh.write(f'<circle cx="{half + scale * x:.2f}" cy="{half - scale * y:.2f}" '
                     f'r="{radius}"/>\n')
        fh.write("</g>\n")
    fh.write("</svg>\n")


# ---------------------------------------------------------------------------
# dataset checks


def lifted_velocities(rec: OrbitRecord) -> np.ndarray:
    """Collision-frame outgoing velocities ``(v0, v_t, v_n)`` on the unit sphere."""
    vn = np.sqrt(np.clip(1.0 - rec.v0 ** 2 - rec.v_t ** 2, 0.0, None))
    return np.column_stack([rec.v0, rec.v_t, vn])


def closed_curve_thickness(rec: OrbitRecord, max_period: int = 64,
                           min_points: int = 4, exact: float = 1e-12) -> tuple[float, int | None]:
    """Width of the thinnest tube around a union of circles containing the orbit.

    An orbit circling a periodic point of period ``p`` visits ``p`` small
    circles on the velocity sphere in turn, so each residue class of
    collision indices mod ``p`` lies on one plane section. The width for
    ``p`` is twice the largest distance to the fitted planes; the smallest
    width over ``p <= max_period`` is returned with its ``p``. The search
    stops at the first ``p`` narrower than ``exact``, so rounding noise
    cannot favor a multiple of the true period.
    """
    X = lifted_velocities(rec)
    best, best_p = math.inf, None
    for p in range(1, max_period + 1):
        width = 0.0
        for r in range(p):
            Y = X[r::p]
            if len(Y) < min_points:
                continue
            c = Y - Y.mean(axis=0)
            _, _, vt = np.linalg.svd(c, full_matrices=False)
            width = max(width, 2.0 * float(np.abs(c @ vt[-1]).max()))
            if width >= best:
                break
        if width < best:
            best, best_p = width, p
            if best < exact:
                break
    return best, best_p


def global_velocities(table: Table, rec: OrbitRecord) -> np.ndarray:
    """Rebuild the global outgoing velocities of an orbit record."""
    X = lifted_velocities(rec)
    out = np.empty_like(X)
    out[:, 0] = X[:, 0]
    for k, (i, s) in enumerate(zip(rec.pieces, rec.s)):
        nu = table.pieces[int(i)].normal_at(float(s))
        t = np.array([nu[1], -nu[0]])
        out[k, 1:] = X[k, 1] * t + X[k, 2] * nu
    return out


def corner_frame(table: Table, a: int, b: int) -> tuple[float, float]:
    """Opening angle of the corner between segments ``a`` and ``b`` and the frame rotation
    that turns its bisector (pointing into the table) to +x2."""
    pa, pb = table.pieces[a], table.pieces[b]
    shared = [p for p in pa.endpoints if any(math.dist(p, q) < 1e-12 for q in pb.endpoints)]
    if not shared:
        raise ValueError(f"pieces {a} and {b} do not share a vertex")
    v = np.asarray(shared[0])
    dirs = []
    for piece in (pa, pb):
        far = max(piece.endpoints, key=lambda q: math.dist(q, v))
        d = np.asarray(far) - v
        dirs.append(d / np.linalg.norm(d))
    theta = math.acos(float(np.clip(dirs[0] @ dirs[1], -1.0, 1.0)))
    bis = dirs[0] + dirs[1]
    return theta, 0.5 * math.pi - math.atan2(bis[1], bis[0])


def corner_dispersion(table: Table, ds: PortraitDataset, a: int, b: int) -> list[float]:
    """Relative spread (std / mean) of the axis distance for orbits confined to a corner.

    Only orbits whose every collision is on pieces ``a`` or ``b`` count;
    their velocities are measured in the corner's wedge frame against the
    periodic axis of that wedge.
    """
    from .analysis import wedge_axis_distance
    from .collision import frame_rotation

    theta, rot = corner_frame(table, a, b)
    F = frame_rotation(rot)
    out = []
    for rec in ds.orbits:
        if len(rec) < 2 or not np.all(np.isin(rec.pieces, [a, b])):
            continue
        d = wedge_axis_distance(theta, global_velocities(table, rec) @ F.T)
        m = float(np.mean(d))
        out.append(float(np.std(d)) / m if m > 0.0 else 0.0)
    return out


def bounded_fraction(ds: PortraitDataset, pieces: Sequence[int]) -> float:
    """Fraction of orbits whose every collision lies on the given pieces."""
    allowed = np.asarray(list(pieces))
    good = [len(r) > 0 and bool(np.all(np.isin(r.pieces, allowed))) for r in ds.orbits]
    return float(np.mean(good)) if good else 0.0


def ensure_disk(ds: PortraitDataset, tol: float = 1e-9) -> bool:
    """Every record lies in the closed velocity disk."""
    return all(np.all(r.v_t ** 2 + r.v0 ** 2 <= 1.0 + tol) for r in ds.orbits)


__all__ = [
    "Sampling", "OrbitRecord", "PortraitDataset", "sample_initial_conditions", "run_portrait",
    "write_dataset_csv", "write_dataset_jsonl", "dataset_bytes", "write_svg",
    "closed_curve_thickness", "corner_dispersion", "bounded_fraction", "ensure_disk", "forward_tangents", "boundary_point",
]
