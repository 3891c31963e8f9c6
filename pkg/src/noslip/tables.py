"""Exact-geometry billiard tables built from segments, circular arcs and lines.

Tables describe the region available to the disk *center*; the disk radius
is already folded into the geometry. Every piece carries an explicit
interior side so that mixed convex/concave boundaries need no inference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np

from . import _kernels as K

TWO_PI = 2.0 * math.pi
ON_BOUNDARY_TOL = 1e-9


def _pt(p) -> tuple[float, float]:
    x, y = (float(c) for c in p)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"point {p!r} is not finite")
    return (x, y)


@dataclass(frozen=True)
class Segment:
    """Straight piece from ``a`` to ``b``; ``side=+1`` puts the interior on the left."""

    a: tuple[float, float]
    b: tuple[float, float]
    side: int = 1

    def __post_init__(self):
        object.__setattr__(self, "a", _pt(self.a))
        object.__setattr__(self, "b", _pt(self.b))
        if self.a == self.b:
            raise ValueError("segment endpoints coincide")
        if self.side not in (1, -1):
            raise ValueError("segment side must be +1 or -1")

    @property
    def length(self) -> float:
        return math.dist(self.a, self.b)

    @property
    def direction(self) -> np.ndarray:
        return (np.subtract(self.b, self.a)) / self.length

    @property
    def endpoints(self) -> list[tuple[float, float]]:
        return [self.a, self.b]

    def point_at(self, s: float) -> np.ndarray:
        return np.asarray(self.a) + s * self.direction

    def normal_at(self, s: float) -> np.ndarray:
        ux, uy = self.direction
        return self.side * np.array([-uy, ux])

    def distance(self, p) -> float:
        a = np.asarray(self.a)
        u = self.direction
        s = min(self.length, max(0.0, float((np.asarray(p) - a) @ u)))
        return float(np.linalg.norm(np.asarray(p) - (a + s * u)))

    def packed(self) -> list[float]:
        return [K.SEGMENT, *self.a, *self.b, 0.0, self.side, 0.0, 0.0, 0.0, -1.0, self.length]


@dataclass(frozen=True)
class Arc:
    """Circular arc, counterclockwise from ``start`` over ``span`` radians.

    ``side=+1`` puts the interior inside the circle (focusing piece);
    ``side=-1`` outside (dispersing piece, e.g. a scatterer).
    """

    center: tuple[float, float]
    radius: float
    start: float = 0.0
    span: float = TWO_PI
    side: int = 1

    def __post_init__(self):
        object.__setattr__(self, "center", _pt(self.center))
        if not self.radius > 0.0:
            raise ValueError(f"arc radius must be positive, got {self.radius!r}")
        if not (0.0 < self.span <= TWO_PI + 1e-12):
            raise ValueError(f"arc span must lie in (0, 2pi], got {self.span!r}")
        object.__setattr__(self, "span", min(float(self.span), TWO_PI))
        if self.side not in (1, -1):
            raise ValueError("arc side must be +1 or -1")

    @property
    def closed(self) -> bool:
        return self.span >= TWO_PI - 1e-12

    @property
    def length(self) -> float:
        return self.radius * self.span

    def _angle_at(self, s: float) -> float:
        rel = s / self.radius
        return self.start + rel if self.side > 0 else self.start + self.span - rel

    @property
    def endpoints(self) -> list[tuple[float, float]]:
        if self.closed:
            return []
        cx, cy = self.center
        return [(cx + self.radius * math.cos(a), cy + self.radius * math.sin(a))
                for a in (self.start, self.start + self.span)]

    def point_at(self, s: float) -> np.ndarray:
        a = self._angle_at(s)
        return np.asarray(self.center) + self.radius * np.array([math.cos(a), math.sin(a)])

    def normal_at(self, s: float) -> np.ndarray:
        a = self._angle_at(s)
        return -self.side * np.array([math.cos(a), math.sin(a)])

    def distance(self, p) -> float:
        c = np.asarray(self.center)
        d = np.asarray(p, dtype=float) - c
        r = float(np.linalg.norm(d))
        phi = math.atan2(d[1], d[0])
        if self.closed or (phi - self.start) % TWO_PI <= self.span:
            return abs(r - self.radius)
        return min(math.dist(p, e) for e in self.endpoints)

    def packed(self) -> list[float]:
        return [K.ARC, *self.center, self.radius, self.start, self.span, self.side,
                0.0, 0.0, 0.0, -1.0, self.length]


@dataclass(frozen=True)
class InfiniteLine:
    """Full line through ``point`` along unit ``direction``; ``side=+1`` is interior on the left."""

    point: tuple[float, float]
    direction: tuple[float, float]
    side: int = 1

    def __post_init__(self):
        object.__setattr__(self, "point", _pt(self.point))
        d = _pt(self.direction)
        n = math.hypot(*d)
        if n == 0.0:
            raise ValueError("line direction must be non-zero")
        object.__setattr__(self, "direction", (d[0] / n, d[1] / n))
        if self.side not in (1, -1):
            raise ValueError("line side must be +1 or -1")

    length = math.inf

    @property
    def endpoints(self) -> list:
        return []

    def point_at(self, s: float) -> np.ndarray:
        return np.asarray(self.point) + s * np.asarray(self.direction)

    def normal_at(self, s: float) -> np.ndarray:
        ux, uy = self.direction
        return self.side * np.array([-uy, ux])

    def signed_distance(self, p) -> float:
        """Positive on the interior side."""
        n = self.normal_at(0.0)
        return float((np.asarray(p) - np.asarray(self.point)) @ n)

    def distance(self, p) -> float:
        return abs(self.signed_distance(p))

    def packed(self) -> list[float]:
        return [K.LINE, *self.point, *self.direction, 0.0, self.side, 0.0, 0.0, 0.0, -1.0, math.inf]


BoundaryPiece = Union[Segment, Arc, InfiniteLine]


@dataclass(frozen=True)
class Gluing:
    """Crossing piece ``source`` continues from piece ``target``, shifted by ``translation``."""

    source: int
    target: int
    translation: tuple[float, float]


@dataclass(frozen=True)
class Hit:
    time: float
    point: np.ndarray
    piece: int
    normal: np.ndarray
    endpoint_distance: float
    arclength: float


@dataclass(frozen=True)
class GluingCrossing:
    time: float
    point: np.ndarray
    piece: int
    target: int


@dataclass(frozen=True)
class Escaped:
    pass


class DegenerateGeometry(ValueError):
    """Ray query with no usable intersection (grazing or started on a corner)."""


@dataclass(frozen=True)
class Table:
    pieces: tuple
    gluings: tuple = ()
    bounded: bool = True
    escape_radius: float = math.inf
    corners: tuple = ()
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "gluings", tuple(self.gluings))
        object.__setattr__(self, "corners", tuple(_pt(c) for c in self.corners))
        if not self.pieces:
            raise ValueError("a table needs at least one boundary piece")
        m = len(self.pieces)
        for g in self.gluings:
            if not (0 <= g.source < m and 0 <= g.target < m):
                raise ValueError(f"gluing {g} refers to a missing piece")
            src, dst = self.pieces[g.source], self.pieces[g.target]
            if not (isinstance(src, Segment) and isinstance(dst, Segment)):
                raise ValueError("only segments can be glued")
            if abs(src.length - dst.length) > 1e-12:
                raise ValueError("glued segments must have equal length")
            moved = {tuple(np.round(np.add(p, g.translation), 12)) for p in src.endpoints}
            if moved != {tuple(np.round(p, 12)) for p in dst.endpoints}:
                raise ValueError(f"translation {g.translation} does not map piece "
                                 f"{g.source} onto piece {g.target}")
        if not self.bounded and not math.isfinite(self.escape_radius):
            raise ValueError("unbounded tables need a finite escape radius")

    @cached_property
    def glued(self) -> frozenset:
        return frozenset(g.source for g in self.gluings)

    @cached_property
    def packed(self) -> np.ndarray:
        rows = np.array([p.packed() for p in self.pieces], dtype=float)
        for g in self.gluings:
            rows[g.source, 7] = 1.0
            rows[g.source, 8:10] = g.translation
            rows[g.source, 10] = g.target
        return np.ascontiguousarray(rows)

    @cached_property
    def packed_corners(self) -> np.ndarray:
        pts = list(self.corners)
        for i, p in enumerate(self.pieces):
            if i not in self.glued:
                pts.extend(p.endpoints)
        # corners shared by a collision piece and a glued edge still count
        arr = np.array(pts, dtype=float).reshape(-1, 2)
        return np.ascontiguousarray(np.unique(np.round(arr, 14), axis=0)) if len(arr) else arr

    @cached_property
    def piece_offsets(self) -> np.ndarray:
        """Start of each piece along the concatenated boundary arclength."""
        lengths = [0.0 if (i in self.glued or not math.isfinite(p.length)) else p.length
                   for i, p in enumerate(self.pieces)]
        return np.concatenate([[0.0], np.cumsum(lengths)[:-1]])

    @property
    def boundary_length(self) -> float:
        return float(sum(p.length for i, p in enumerate(self.pieces)
                         if i not in self.glued and math.isfinite(p.length)))

    @cached_property
    def bbox(self) -> tuple[float, float, float, float]:
        if not self.bounded:
            r = self.feature_size
            return (-r, -r, r, r)
        xs, ys = [], []
        for p in self.pieces:
            if isinstance(p, Segment):
                xs += [p.a[0], p.b[0]]
                ys += [p.a[1], p.b[1]]
            elif isinstance(p, Arc):
                a = np.linspace(p.start, p.start + p.span, 721)
                xs += list(p.center[0] + p.radius * np.cos(a))
                ys += list(p.center[1] + p.radius * np.sin(a))
        return (min(xs), min(ys), max(xs), max(ys))

    @property
    def feature_size(self) -> float:
        if self.bounded:
            x0, y0, x1, y1 = self.bbox
            return math.hypot(x1 - x0, y1 - y0)
        return float(self.params.get("feature_size", 1.0))

    @property
    def diameter(self) -> float:
        return self.feature_size

    def distance_to_boundary(self, p) -> float:
        return min(piece.distance(p) for piece in self.pieces)

    def contains(self, p) -> bool:
        """Interior-or-boundary test."""
        p = np.asarray(p, dtype=float)
        if self.distance_to_boundary(p) < ON_BOUNDARY_TOL:
            return True
        if not self.bounded:
            return all(piece.signed_distance(p) > 0.0 for piece in self.pieces
                       if isinstance(piece, InfiniteLine))
        # parity along a fixed, non-special direction
        d = np.array([math.cos(0.7390851332), math.sin(0.7390851332)])
        count = 0
        for piece in self.pieces:
            count += _crossings(piece, p, d)
        return count % 2 == 1

    def describe(self) -> dict:
        return {"builder": self.name, "params": dict(self.params)}


def _crossings(piece, o, d) -> int:
    if isinstance(piece, Arc):
        f = o - np.asarray(piece.center)
        b = f @ d
        c = f @ f - piece.radius ** 2
        disc = b * b - c
        if disc <= 0.0:
            return 0
        n = 0
        for t in (-b - math.sqrt(disc), -b + math.sqrt(disc)):
            if t > 0.0:
                h = o + t * d - np.asarray(piece.center)
                if piece.closed or (math.atan2(h[1], h[0]) - piece.start) % TWO_PI <= piece.span:
                    n += 1
        return n
    if isinstance(piece, Segment):
        a = np.asarray(piece.a)
        e = np.asarray(piece.b) - a
        denom = d[0] * e[1] - d[1] * e[0]
        if denom == 0.0:
            return 0
        w = a - o
        t = (w[0] * e[1] - w[1] * e[0]) / denom
        u = (w[0] * d[1] - w[1] * d[0]) / denom
        return int(t > 0.0 and 0.0 <= u < 1.0)
    return 0


def first_hit(table: Table, origin, direction) -> Hit | GluingCrossing | Escaped:
    """First boundary crossing of the ray from ``origin`` along unit ``direction``.

    Crossing a glued edge returns the translated continuation point instead
    of a hit; the caller resumes from there.
    """
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    if abs(float(d @ d) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    if not table.contains(o):
        raise ValueError(f"origin {o.tolist()} lies outside the table")
    status, t, i, hx, hy, nx, ny, s, ed, _ = K.first_hit(
        table.packed, table.packed_corners, o[0], o[1], d[0], d[1])
    if status == 2:
        raise DegenerateGeometry("all intersections fall below the grazing tolerance")
    if status == 1:
        if table.bounded:
            raise DegenerateGeometry("ray left a bounded table without hitting it")
        return Escaped()
    point = np.array([hx, hy])
    if not table.bounded and math.hypot(hx, hy) > table.escape_radius:
        return Escaped()
    if i in table.glued:
        g = next(g for g in table.gluings if g.source == i)
        return GluingCrossing(time=t, point=point + np.asarray(g.translation), piece=i, target=g.target)
    return Hit(time=t, point=point, piece=i, normal=np.array([nx, ny]),
               endpoint_distance=ed, arclength=s)


# ---------------------------------------------------------------------------
# builders


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise ValueError(f"{name} must be positive and finite, got {value!r}")
    return value


def strip(separation: float = 1.0, escape_radius: float | None = None) -> Table:
    """Two parallel walls ``x2 = 0`` and ``x2 = separation``."""
    h = _positive("separation", separation)
    pieces = (
        InfiniteLine((0.0, 0.0), (1.0, 0.0), side=1),
        InfiniteLine((0.0, h), (1.0, 0.0), side=-1),
    )
    return Table(pieces, bounded=False, escape_radius=escape_radius or 1e6 * h,
                 name="strip", params={"separation": h, "feature_size": h})


def wedge(theta: float, escape_radius: float = 1e6) -> Table:
    """Open wedge with vertex at the origin and outward bisector along +x2.

    Piece 0 is the right wall (direction ``(sin(theta/2), cos(theta/2))``),
    piece 1 the left wall.
    """
    theta = float(theta)
    if not (0.0 < theta < math.pi):
        raise ValueError(f"wedge angle must lie in (0, pi), got {theta!r}")
    s, c = math.sin(0.5 * theta), math.cos(0.5 * theta)
    pieces = (
        InfiniteLine((0.0, 0.0), (s, c), side=1),
        InfiniteLine((0.0, 0.0), (-s, c), side=-1),
    )
    return Table(pieces, bounded=False, escape_radius=escape_radius, corners=((0.0, 0.0),),
                 name="wedge", params={"theta": theta, "feature_size": 1.0})


def _ccw(vertices) -> list[tuple[float, float]]:
    v = [_pt(p) for p in vertices]
    area = 0.5 * sum(v[i][0] * v[(i + 1) % len(v)][1] - v[(i + 1) % len(v)][0] * v[i][1]
                     for i in range(len(v)))
    if area == 0.0:
        raise ValueError("polygon vertices are collinear")
    return v if area > 0.0 else v[::-1]


def polygon(vertices: Sequence, name: str = "polygon", params: dict | None = None) -> Table:
    """Simple polygon; vertices may be given in either orientation."""
    if len(vertices) < 3:
        raise ValueError("a polygon needs at least 3 vertices")
    v = _ccw(vertices)
    pieces = tuple(Segment(v[i], v[(i + 1) % len(v)]) for i in range(len(v)))
    return Table(pieces, name=name,
                 params=params if params is not None else {"vertices": [list(p) for p in v]})


def regular_polygon_vertices(n: int, circumradius: float = 1.0) -> list[tuple[float, float]]:
    """Vertices with one edge horizontal at the bottom, counterclockwise."""
    off = -0.5 * math.pi - math.pi / n
    return [(circumradius * math.cos(off + TWO_PI * k / n),
             circumradius * math.sin(off + TWO_PI * k / n)) for k in range(n)]


def regular_polygon(n: int, circumradius: float = 1.0) -> Table:
    if int(n) != n or n < 3:
        raise ValueError(f"regular polygon needs an integer n >= 3, got {n!r}")
    r = _positive("circumradius", circumradius)
    return polygon(regular_polygon_vertices(int(n), r), name="regular_polygon",
                   params={"n": int(n), "circumradius": r})


def isosceles_triangle(apex_angle: float = 0.6, leg: float = 2.0) -> Table:
    """Isosceles triangle with the apex at the top; the base is horizontal."""
    a = float(apex_angle)
    if not (0.0 < a < math.pi):
        raise ValueError(f"apex angle must lie in (0, pi), got {a!r}")
    leg = _positive("leg", leg)
    h = leg * math.cos(0.5 * a)
    w = leg * math.sin(0.5 * a)
    return polygon([(-w, 0.0), (w, 0.0), (0.0, h)], name="isosceles_triangle",
                   params={"apex_angle": a, "leg": leg})


def circle(radius: float = 1.0) -> Table:
    r = _positive("radius", radius)
    return Table((Arc((0.0, 0.0), r),), name="circle", params={"radius": r})


def stadium(half_length: float = 1.0, cap_radius: float = 1.0) -> Table:
    """Flat walls ``y = +-cap_radius`` for ``|x| <= half_length`` joined by half-circles."""
    a = _positive("half_length", half_length)
    r = _positive("cap_radius", cap_radius)
    pieces = (
        Segment((-a, -r), (a, -r)),
        Arc((a, 0.0), r, -0.5 * math.pi, math.pi),
        Segment((a, r), (-a, r)),
        Arc((-a, 0.0), r, 0.5 * math.pi, math.pi),
    )
    return Table(pieces, name="stadium", params={"half_length": a, "cap_radius": r})


def mushroom(cap_radius: float = 1.0, stem_width: float = 0.5, stem_depth: float = 1.0) -> Table:
    """Half-disk cap on top of a rectangular stem centered below it."""
    R = _positive("cap_radius", cap_radius)
    w = _positive("stem_width", stem_width)
    d = _positive("stem_depth", stem_depth)
    if not w < 2.0 * R:
        raise ValueError("stem_width must be smaller than the cap diameter")
    h = 0.5 * w
    pieces = (
        Arc((0.0, 0.0), R, 0.0, math.pi),
        Segment((-R, 0.0), (-h, 0.0)),
        Segment((-h, 0.0), (-h, -d)),
        Segment((-h, -d), (h, -d)),
        Segment((h, -d), (h, 0.0)),
        Segment((h, 0.0), (R, 0.0)),
    )
    return Table(pieces, name="mushroom",
                 params={"cap_radius": R, "stem_width": w, "stem_depth": d})


def pocketed_rectangle(width: float = 2.0, height: float = 1.0, pocket_radius: float = 0.2) -> Table:
    """Rectangle with a circular pocket centered on each corner.

    Each pocket boundary is a 3/4 circle outside the rectangle.
    """
    W = _positive("width", width)
    H = _positive("height", height)
    p = _positive("pocket_radius", pocket_radius)
    if not 2.0 * p < min(W, H):
        raise ValueError("pockets overlap: need 2 * pocket_radius < min(width, height)")
    x, y = 0.5 * W, 0.5 * H
    hp = 0.5 * math.pi
    pieces = (
        Segment((-x + p, -y), (x - p, -y)),
        Arc((x, -y), p, math.pi, 3.0 * hp),
        Segment((x, -y + p), (x, y - p)),
        Arc((x, y), p, -hp, 3.0 * hp),
        Segment((x - p, y), (-x + p, y)),
        Arc((-x, y), p, 0.0, 3.0 * hp),
        Segment((-x, y - p), (-x, -y + p)),
        Arc((-x, -y), p, hp, 3.0 * hp),
    )
    return Table(pieces, name="pocketed_rectangle",
                 params={"width": W, "height": H, "pocket_radius": p})


def moon(outer_radius: float = 1.0, inner_radius: float = 0.8, offset: float = 0.5) -> Table:
    """Crescent: inside the outer circle, outside a disk centered at ``(offset, 0)``."""
    R = _positive("outer_radius", outer_radius)
    r = _positive("inner_radius", inner_radius)
    d = _positive("offset", offset)
    if not (r < R and R - r < d < R + r):
        raise ValueError("moon needs inner_radius < outer_radius and "
                         "outer_radius - inner_radius < offset < outer_radius + inner_radius")
    # circle intersection points are (xi, +-yi)
    xi = (R * R - r * r + d * d) / (2.0 * d)
    yi = math.sqrt(R * R - xi * xi)
    a_out = math.atan2(yi, xi)
    a_in = math.atan2(yi, xi - d)
    pieces = (
        Arc((0.0, 0.0), R, a_out, TWO_PI - 2.0 * a_out, side=1),
        Arc((d, 0.0), r, a_in, TWO_PI - 2.0 * a_in, side=-1),
    )
    return Table(pieces, corners=((xi, yi), (xi, -yi)), name="moon",
                 params={"outer_radius": R, "inner_radius": r, "offset": d})


def disk_on_torus(side: float = 1.0, scatterer_radius: float = 0.25) -> Table:
    """Square ``[-side/2, side/2]^2`` with opposite edges glued and a central disk."""
    L = _positive("side", side)
    r = _positive("scatterer_radius", scatterer_radius)
    if not 2.0 * r < L:
        raise ValueError("scatterer must fit inside the square: need 2 * radius < side")
    h = 0.5 * L
    pieces = (
        Segment((-h, -h), (h, -h)),
        Segment((h, -h), (h, h)),
        Segment((h, h), (-h, h)),
        Segment((-h, h), (-h, -h)),
        Arc((0.0, 0.0), r, side=-1),
    )
    gluings = (
        Gluing(0, 2, (0.0, L)),
        Gluing(2, 0, (0.0, -L)),
        Gluing(1, 3, (-L, 0.0)),
        Gluing(3, 1, (L, 0.0)),
    )
    return Table(pieces, gluings, name="disk_on_torus",
                 params={"side": L, "scatterer_radius": r})


def sagitta_radius(chord: float, sagitta: float) -> float:
    """Radius of the circle through a chord's endpoints at the given sagitta."""
    return (0.25 * chord * chord + sagitta * sagitta) / (2.0 * abs(sagitta))


def bulged_polygon(vertices: Sequence, sagitta: float | Sequence[float] = 0.01) -> Table:
    """Polygon whose edges are replaced by circular arcs.

    Positive sagitta bulges an edge outward (focusing), negative inward.
    """
    v = _ccw(vertices)
    n = len(v)
    if n < 3:
        raise ValueError("a polygon needs at least 3 vertices")
    sags = [float(sagitta)] * n if np.ndim(sagitta) == 0 else [float(s) for s in sagitta]
    if len(sags) != n:
        raise ValueError("need one sagitta per edge")
    pieces = []
    for i in range(n):
        a, b = np.asarray(v[i]), np.asarray(v[(i + 1) % n])
        s = sags[i]
        chord = float(np.linalg.norm(b - a))
        if s == 0.0:
            pieces.append(Segment(tuple(a), tuple(b)))
            continue
        if not abs(s) < 0.5 * chord:
            raise ValueError(f"edge {i}: |sagitta| must be less than half the chord")
        u = (b - a) / chord
        inward = np.array([-u[1], u[0]])
        r = sagitta_radius(chord, s)
        mid = 0.5 * (a + b)
        if s > 0.0:
            c = mid + inward * (r - s)
            side = 1
            a0 = math.atan2(*(a - c)[::-1])
            a1 = math.atan2(*(b - c)[::-1])
            start, span = a0, (a1 - a0) % TWO_PI
        else:
            c = mid - inward * (r - abs(s))
            side = -1
            a0 = math.atan2(*(b - c)[::-1])
            a1 = math.atan2(*(a - c)[::-1])
            start, span = a0, (a1 - a0) % TWO_PI
        pieces.append(Arc(tuple(c), r, start, span, side=side))
    return Table(tuple(pieces), name="bulged_polygon",
                 params={"vertices": [list(p) for p in v], "sagitta": sags})


BUILDERS = {
    "strip": strip,
    "wedge": wedge,
    "regular_polygon": regular_polygon,
    "polygon": polygon,
    "isosceles_triangle": isosceles_triangle,
    "circle": circle,
    "stadium": stadium,
    "mushroom": mushroom,
    "pocketed_rectangle": pocketed_rectangle,
    "moon": moon,
    "disk_on_torus": disk_on_torus,
    "bulged_polygon": bulged_polygon,
}


def equilateral_triangle(circumradius: float = 1.0) -> Table:
    return regular_polygon(3, circumradius)


def hexagon(circumradius: float = 1.0) -> Table:
    return regular_polygon(6, circumradius)


# named tables used by the portrait presets; parameters are not taken from
# any published figure
PRESETS = {
    "hexagon": ("regular_polygon", {"n": 6, "circumradius": 1.0}),
    "equilateral": ("regular_polygon", {"n": 3, "circumradius": 1.0}),
    "isosceles": ("isosceles_triangle", {"apex_angle": 0.6, "leg": 2.0}),
    "stadium": ("stadium", {"half_length": 1.0, "cap_radius": 1.0}),
    "mushroom": ("mushroom", {"cap_radius": 1.0, "stem_width": 0.5, "stem_depth": 1.0}),
    "pockets": ("pocketed_rectangle", {"width": 2.0, "height": 1.0, "pocket_radius": 0.2}),
    "moon": ("moon", {"outer_radius": 1.0, "inner_radius": 0.8, "offset": 0.5}),
    "sinai": ("disk_on_torus", {"side": 1.0, "scatterer_radius": 0.25}),
    "pentagon_bulged": ("bulged_polygon", {"vertices": regular_polygon_vertices(5, 1.0),
                                            "sagitta": 0.02}),
}


def build(name: str, **params) -> Table:
    """Build a table by builder or preset name."""
    if name in BUILDERS:
        return BUILDERS[name](**params)
    if name in PRESETS:
        builder, defaults = PRESETS[name]
        return BUILDERS[builder](**{**defaults, **params})
    raise ValueError(f"unknown table {name!r}; choose from "
                     f"{sorted(set(BUILDERS) | set(PRESETS))}")


def audit(table: Table, samples: int = 10_000, seed: int = 0) -> dict:
    """Validity audit: cast random rays from random interior points.

    Returns counts of sampled rays, failed queries and hits whose point or
    normal disagree with the piece they name.
    """
    rng = np.random.default_rng(seed)
    x0, y0, x1, y1 = table.bbox
    failures = off_piece = bad_normal = 0
    done = 0
    while done < samples:
        p = rng.uniform((x0, y0), (x1, y1))
        if not table.contains(p) or table.distance_to_boundary(p) < 1e-6:
            continue
        a = rng.uniform(0.0, TWO_PI)
        d = np.array([math.cos(a), math.sin(a)])
        done += 1
        o = p
        try:
            for _ in range(100):
                r = first_hit(table, o, d)
                if not isinstance(r, GluingCrossing):
                    break
                o = r.point
        except DegenerateGeometry:
            failures += 1
            continue
        if isinstance(r, Escaped):
            if table.bounded:
                failures += 1
            continue
        if isinstance(r, GluingCrossing):
            continue
        if table.pieces[r.piece].distance(r.point) > 1e-10:
            off_piece += 1
        if r.normal @ d >= 0.0:
            bad_normal += 1
    return {"samples": done, "failures": failures, "off_piece": off_piece, "bad_normal": bad_normal}
