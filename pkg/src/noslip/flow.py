"""The billiard map: free flight to the boundary, then a collision.

Orbits are run by a compiled kernel and returned as column arrays; the
``CollisionEvent`` objects are built lazily for callers that want them.
"""
from __future__ import annotations

import csv
import enum
import json
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels as K
from .tables import Table

log = logging.getLogger(__name__)

SPEED_TOL = 1e-9
DEFAULT_HORIZON = 64
DEFAULT_VEL_TOL = 1e-9
DEFAULT_POS_TOL_REL = 1e-9

TRACE_VERSION = 1
TRACE_COLUMNS = ("index", "piece", "x", "y", "x0", "s", "t",
                 "v0_before", "v1_before", "v2_before", "v0_after", "v1_after", "v2_after")

_LAWS = {"no_slip": K.NO_SLIP, "specular": K.SPECULAR}


class Termination(enum.IntEnum):
    MAX_COLLISIONS = K.MAX_COLLISIONS
    ESCAPED = K.ESCAPED
    CORNER = K.CORNER
    DEGENERATE = K.DEGENERATE
    PERIOD_DETECTED = K.PERIOD


@dataclass(frozen=True)
class PhasePoint:
    """Disk-center position, unwrapped rotational coordinate and unit velocity."""

    position: np.ndarray
    velocity: np.ndarray
    x0: float = 0.0

    def __post_init__(self):
        p = np.array(self.position, dtype=float).reshape(2)
        v = np.array(self.velocity, dtype=float).reshape(3)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v)) and math.isfinite(self.x0)):
            raise ValueError("phase point components must be finite")
        if abs(float(np.linalg.norm(v)) - 1.0) > SPEED_TOL:
            raise ValueError(f"velocity {v.tolist()} does not have unit speed")
        p.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "x0", float(self.x0))

    @classmethod
    def unit(cls, position, velocity, x0: float = 0.0) -> "PhasePoint":
        """Build a phase point after rescaling ``velocity`` to unit speed."""
        v = np.asarray(velocity, dtype=float)
        n = float(np.linalg.norm(v))
        if n == 0.0 or not math.isfinite(n):
            raise ValueError("velocity must be non-zero and finite")
        return cls(position, v / n, x0)

    def as_state(self) -> np.ndarray:
        return np.array([*self.position, self.x0, *self.velocity])


@dataclass(frozen=True)
class CollisionEvent:
    index: int
    piece: int
    point: np.ndarray
    x0: float
    arclength: float
    flight_time: float
    v_before: np.ndarray
    v_after: np.ndarray


@dataclass
class Orbit:
    """Recorded collisions of one orbit.

    ``pieces`` and ``data`` hold the last ``len(self)`` events in order;
    ``data`` columns follow ``_kernels.EV_*``. ``first_index`` is the
    index of the first retained event (non-zero when only a tail was kept).
    """

    table: Table
    initial: PhasePoint
    pieces: np.ndarray
    data: np.ndarray
    termination: Termination
    n_events: int
    period: int | None = None
    max_speed_error: float = 0.0
    final: PhasePoint | None = None
    law: str = "no_slip"
    _events: list | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.pieces)

    @property
    def first_index(self) -> int:
        return self.n_events - len(self.pieces)

    @property
    def points(self) -> np.ndarray:
        return self.data[:, [K.EV_X, K.EV_Y]]

    @property
    def x0(self) -> np.ndarray:
        return self.data[:, K.EV_X0]

    @property
    def arclength(self) -> np.ndarray:
        return self.data[:, K.EV_S]

    @property
    def flight_times(self) -> np.ndarray:
        return self.data[:, K.EV_T]

    @property
    def v_before(self) -> np.ndarray:
        return self.data[:, K.EV_VB0:K.EV_VB2 + 1]

    @property
    def v_after(self) -> np.ndarray:
        return self.data[:, K.EV_VA0:K.EV_VA2 + 1]

    @property
    def events(self) -> list[CollisionEvent]:
        if self._events is None:
            base = self.first_index
            self._events = [
                CollisionEvent(base + k, int(self.pieces[k]), row[[K.EV_X, K.EV_Y]].copy(),
                               float(row[K.EV_X0]), float(row[K.EV_S]), float(row[K.EV_T]),
                               row[K.EV_VB0:K.EV_VB2 + 1].copy(), row[K.EV_VA0:K.EV_VA2 + 1].copy())
                for k, row in enumerate(self.data)
            ]
        return self._events


def _law_code(law: str) -> int:
    try:
        return _LAWS[law]
    except KeyError:
        raise ValueError(f"unknown collision law {law!r}; choose from {sorted(_LAWS)}") from None


def _check_start(table: Table, pp: PhasePoint) -> None:
    if not table.contains(pp.position):
        raise ValueError(f"initial position {pp.position.tolist()} lies outside the table")


def _run(table: Table, pp: PhasePoint, max_events: int, capacity: int, detect: bool,
         horizon: int, pos_tol: float, vel_tol: float, law: str):
    state = pp.as_state()
    out_piece = np.empty(capacity, dtype=np.int64)
    out_f = np.empty((capacity, K.EV_WIDTH))
    n, term, period, err = K.run_orbit(
        table.packed, table.packed_corners, bool(table.bounded), float(table.escape_radius),
        _law_code(law), state, int(max_events), int(capacity), bool(detect), int(horizon),
        float(pos_tol), float(vel_tol), out_piece, out_f)
    return int(n), Termination(int(term)), int(period), float(err), state, out_piece, out_f


def default_pos_tol(table: Table) -> float:
    return DEFAULT_POS_TOL_REL * table.diameter


def iterate(table: Table, pp: PhasePoint, max_collisions: int, *, law: str = "no_slip",
            detect: bool = True, horizon: int = DEFAULT_HORIZON, pos_tol: float | None = None,
            vel_tol: float = DEFAULT_VEL_TOL, keep: int | None = None) -> Orbit:
    """Run the billiard map from ``pp`` until termination or ``max_collisions`` events.

    With ``detect`` the run stops at the first repeat of (piece, arclength,
    outgoing velocity) among the previous ``horizon`` events. ``keep``
    limits the stored events to the most recent ``keep``.
    """
    if int(max_collisions) < 1:
        raise ValueError("max_collisions must be at least 1")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    _check_start(table, pp)
    if pos_tol is None:
        pos_tol = default_pos_tol(table)
    capacity = int(max_collisions) if keep is None else max(1, min(int(keep), int(max_collisions)))
    n, term, period, err, state, pieces, data = _run(
        table, pp, max_collisions, capacity, detect, horizon, pos_tol, vel_tol, law)
    if n <= capacity:
        pieces, data = pieces[:n], data[:n]
    else:
        order = (np.arange(n - capacity, n)) % capacity
        pieces, data = pieces[order], data[order]
    final = PhasePoint.unit(state[:2], state[3:], state[2])
    return Orbit(table, pp, pieces, data, term, n, period or None, err, final, law)


def step(table: Table, pp: PhasePoint, *, law: str = "no_slip"):
    """One free flight plus collision.

    Returns ``(CollisionEvent, PhasePoint)``, or a :class:`Termination`
    when the flight ends in an escape, a corner or a degenerate hit.
    """
    orbit = iterate(table, pp, 1, law=law, detect=False)
    if orbit.n_events == 0:
        return orbit.termination
    return orbit.events[0], orbit.final


def detect_period(orbit: Orbit, pos_tol: float | None = None, vel_tol: float = DEFAULT_VEL_TOL,
                  max_lag: int | None = None) -> int | None:
    """Smallest lag ``p`` such that some events ``k`` and ``k + p`` coincide.

    Coincidence means the same piece, arclength within ``pos_tol`` and
    outgoing velocity within ``vel_tol`` in every component. Velocity
    matches on the same piece whose positions disagree are logged as
    anomalies, since a repeated velocity on one wall should force a
    repeated position.
    """
    n = len(orbit)
    if n < 2:
        return None
    if pos_tol is None:
        pos_tol = default_pos_tol(orbit.table)
    va = orbit.v_after
    tree = cKDTree(va)
    pairs = tree.query_pairs(r=vel_tol, p=np.inf, output_type="ndarray")
    if len(pairs) == 0:
        return None
    i, j = pairs.min(axis=1), pairs.max(axis=1)
    lag = j - i
    keep = orbit.pieces[i] == orbit.pieces[j]
    if max_lag is not None:
        keep &= lag <= max_lag
    i, j, lag = i[keep], j[keep], lag[keep]
    if len(lag) == 0:
        return None
    ds = np.abs(orbit.arclength[i] - orbit.arclength[j])
    closed = np.array([_closed_length(orbit.table, int(p)) for p in orbit.pieces[i]])
    wrap = np.isfinite(closed)
    ds[wrap] = np.minimum(ds[wrap], closed[wrap] - ds[wrap])
    ok = ds <= pos_tol
    bad = int(np.count_nonzero(~ok))
    if bad:
        log.warning("period detection: %d velocity matches on the same piece with "
                    "different positions (max offset %.3g)", bad, float(ds[~ok].max()))
    if not np.any(ok):
        return None
    return int(lag[ok].min())


def _closed_length(table: Table, piece: int) -> float:
    p = table.pieces[piece]
    return p.length if getattr(p, "closed", False) else math.inf


def displacement_stats(orbit: Orbit, direction) -> dict:
    """Largest displacement of collision points from the initial point along ``direction``."""
    d = np.asarray(direction, dtype=float)
    if abs(float(d @ d) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    if len(orbit) == 0:
        raise ValueError("orbit has no events")
    proj = (orbit.points - orbit.initial.position) @ d
    return {"max_displacement": float(np.max(np.abs(proj))), "collisions": int(orbit.n_events)}


# ---------------------------------------------------------------------------
# trace output


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def trace_rows(orbit: Orbit) -> Iterable[list]:
    base = orbit.first_index
    for k in range(len(orbit)):
        row = orbit.data[k]
        yield [base + k, int(orbit.pieces[k]),
               row[K.EV_X], row[K.EV_Y], row[K.EV_X0], row[K.EV_S], row[K.EV_T],
               *row[K.EV_VB0:K.EV_VA2 + 1]]


def summary(orbit: Orbit) -> dict:
    return {
        "termination": orbit.termination.name,
        "period": orbit.period,
        "events": orbit.n_events,
        "max_speed_error": orbit.max_speed_error,
    }


def write_trace_csv(orbit: Orbit, fh: IO[str], meta: dict | None = None) -> None:
    """CSV trace: ``#`` header lines with version and metadata, then one row per event."""
    fh.write(f"# noslip-trace v{TRACE_VERSION}\n")
    for key, value in {**(meta or {}), **summary(orbit)}.items():
        fh.write(f"# {key}: {value}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in trace_rows(orbit):
        w.writerow([r[0], r[1], *(_fmt(x) for x in r[2:])])


def write_trace_jsonl(orbit: Orbit, fh: IO[str], meta: dict | None = None) -> None:
    """JSON-lines trace: a header object, then one object per event with the CSV columns."""
    header = {"format": "noslip-trace", "version": TRACE_VERSION, "columns": list(TRACE_COLUMNS),
              **(meta or {}), **summary(orbit)}
    fh.write(json.dumps(header) + "\n")
    for r in trace_rows(orbit):
        rec = {"index": r[0], "piece": r[1]}
        rec.update({c: float(_fmt(x)) for c, x in zip(TRACE_COLUMNS[2:], r[2:])})
        fh.write(json.dumps(rec) + "\n")
