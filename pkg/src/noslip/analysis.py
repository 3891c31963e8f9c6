"""Closed-form results: strip displacement, wedge escape regions, circle
caustics and equilateral-triangle periodicity."""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import collision as col
from .flow import Orbit, Termination

SQRT2 = math.sqrt(2.0)
_A = 1.0 / 3.0
_B = 2.0 * SQRT2 / 3.0

PERIODIC_N_MAX = 10_000
PERIODIC_TOL = 1e-9

# ---------------------------------------------------------------------------
# strip


def _check_v2(v2: float) -> float:
    v2 = abs(float(v2))
    if v2 > 1.0:
        raise ValueError(f"|v2| must not exceed 1 for a unit velocity, got {v2!r}")
    return v2


def strip_bound(v2: float) -> float:
    """Bound on the collision-point displacement along the strip for normal velocity ``v2``.

    Zero normal velocity never reaches a wall, so the bound is infinite.
    """
    v2 = _check_v2(v2)
    if v2 == 0.0:
        return math.inf
    return math.sqrt(1.5 * (1.0 / (v2 * v2) - 1.0))


def strip_extents(v2: float) -> tuple[float, float]:
    """Width of the band of collision points, along the wall and in ``x0``.

    Collision points on one wall lie on a line of slope sqrt(2) in the
    ``(x0, x1)`` plane and every flight projects to a chord of length
    ``L = sqrt(1/v2^2 - 1)`` between the two contact lines. The chords
    envelop an astroid, which confines ``x1`` to a band of width
    ``sqrt(3) L`` and ``x0`` to one of width ``sqrt(3/2) L``.
    """
    v2 = _check_v2(v2)
    if v2 == 0.0:
        return math.inf, math.inf
    L = math.sqrt(1.0 / (v2 * v2) - 1.0)
    return math.sqrt(3.0) * L, math.sqrt(1.5) * L


def strip_nonrecurrence_scan(N: int) -> tuple[float, int]:
    """``min_{1<=n<=N} ||S^n - I||_F`` for the strip cycle matrix, and the minimizing ``n``."""
    if int(N) < 1:
        raise ValueError("N must be at least 1")
    S = col.strip_cycle_matrix()
    P = np.eye(3)
    best, arg = math.inf, 0
    for n in range(1, int(N) + 1):
        P = S @ P
        d = float(np.linalg.norm(P - np.eye(3)))
        if d < best:
            best, arg = d, n
    return best, arg


# ---------------------------------------------------------------------------
# wedge escape regions


class Escape(enum.Enum):
    ESCAPE = "escape"
    NON_ESCAPE = "non_escape"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class EscapeRegion:
    """Non-escape region of the wedge velocity sphere around the periodic axis.

    ``kind`` is ``"cap"`` when the rotation angle is an irrational multiple
    of pi (numerically), otherwise ``"polygon"`` with ``vertices`` on the
    unit sphere, ordered around the axis. ``sector_normals`` are the two
    planes bounding the direct-escape sector: a velocity escapes directly
    when it lies on the positive side of both.
    """

    theta: float
    alpha: float
    axis: np.ndarray
    kind: str
    period: int | None
    cap_radius: float
    vertices: np.ndarray
    sector_normals: tuple[np.ndarray, np.ndarray]

    @property
    def order(self) -> int:
        return len(self.vertices)


def escape_sector_normals(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Plane normals of the direct-escape sector ``{v : s v2 > c |v1|}``."""
    h = 0.5 * float(theta)
    s, c = math.sin(h), math.cos(h)
    return np.array([0.0, -c, s]), np.array([0.0, c, s])


def escape_cap_radius(theta: float) -> float:
    """Angular distance from the periodic axis to the escape set."""
    h = 0.5 * float(theta)
    s, c = math.sin(h), math.cos(h)
    return math.asin(c / math.sqrt(1.0 + 2.0 * s * s))


def wedge_period(theta: float) -> int | None:
    """Cycle count ``n`` (orbit period ``2n``) of the two-collision rotation, or None."""
    return col.rotation_order(col.wedge_alpha(theta), PERIODIC_N_MAX, PERIODIC_TOL)


def _polygon_planes(theta: float, n: int) -> np.ndarray:
    """Normals ``a`` with the polygon on the side ``x . a <= 0``."""
    S = col.wedge_cycle_matrix(theta)
    right, _ = col.wedge_normals(theta)
    MR = col.reflect_matrix(right)
    m1, m2 = escape_sector_normals(theta)
    planes = []
    P = np.eye(3)
    for _ in range(n):
        planes.append(P.T @ m1)
        planes.append((MR @ P).T @ m2)
        P = S @ P
    return np.array(planes)


def _polygon_vertices(theta: float, n: int, axis: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    planes = _polygon_planes(theta, n)
    # merge coincident planes so each vertex appears once
    uniq: list[np.ndarray] = []
    for p in planes:
        if not any(np.linalg.norm(p - q) < 1e-9 for q in uniq):
            uniq.append(p)
    planes = np.array(uniq)
    pts = []
    for a, b in itertools.combinations(range(len(planes)), 2):
        x = np.cross(planes[a], planes[b])
        nx = np.linalg.norm(x)
        if nx < 1e-12:
            continue
        x /= nx
        if x @ axis < 0.0:
            x = -x
        if np.all(planes @ x <= tol) and not any(np.linalg.norm(x - q) < 1e-7 for q in pts):
            pts.append(x)
    if not pts:
        return np.empty((0, 3))
    pts = np.array(pts)
    # order by angle about the axis
    e1 = np.cross(axis, [1.0, 0.0, 0.0])
    if np.linalg.norm(e1) < 1e-6:
        e1 = np.cross(axis, [0.0, 0.0, 1.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    ang = np.arctan2(pts @ e2, pts @ e1)
    return pts[np.argsort(ang)]


def escape_region(theta: float) -> EscapeRegion:
    theta = float(theta)
    axis = col.wedge_axis(theta)
    alpha = col.wedge_alpha(theta)
    n = wedge_period(theta)
    rho = escape_cap_radius(theta)
    normals = escape_sector_normals(theta)
    if n is None:
        return EscapeRegion(theta, alpha, axis, "cap", None, rho, np.empty((0, 3)), normals)
    return EscapeRegion(theta, alpha, axis, "polygon", n, rho,
                        _polygon_vertices(theta, n, axis), normals)


def _canonical(V: np.ndarray) -> np.ndarray:
    """Mirror velocities heading left (``v1 < 0``) to the right-heading half.

    The mirror ``x1 -> -x1`` also flips the rotation sense, so it acts as
    ``diag(-1, -1, 1)``; orbits of mirrored velocities are mirror images.
    """
    V = np.array(V, dtype=float, copy=True)
    left = V[..., 1] < 0.0
    V[left, 0] *= -1.0
    V[left, 1] *= -1.0
    return V


def escape_margin(theta: float, V) -> np.ndarray:
    """Signed escape margin of unit velocities ``V`` (shape ``(..., 3)``).

    Positive means the orbit escapes, negative that it stays, with the
    magnitude measuring the distance to the region boundary.
    """
    theta = col._check_wedge_angle(theta)
    V = _canonical(np.asarray(V, dtype=float))
    n = wedge_period(theta)
    if n is None:
        axis = col.wedge_axis(theta)
        dist = np.arccos(np.clip(V @ axis, -1.0, 1.0))
        return dist - escape_cap_radius(theta)
    S = col.wedge_cycle_matrix(theta)
    right, _ = col.wedge_normals(theta)
    MR = col.reflect_matrix(right)
    m1, m2 = escape_sector_normals(theta)
    W = V.reshape(-1, 3)
    worst = np.full(len(W), -np.inf)
    for _ in range(n):
        direct = np.minimum(W @ m1, W @ m2)
        Wr = W @ MR.T
        after = np.minimum(Wr @ m1, Wr @ m2)
        worst = np.maximum(worst, np.maximum(direct, after))
        W = W @ S.T
    return worst.reshape(V.shape[:-1])


def classify_velocities(theta: float, V, tol: float = 1e-9) -> np.ndarray:
    """Vectorized :func:`classify_velocity`; returns an object array of :class:`Escape`."""
    m = escape_margin(theta, V)
    out = np.full(m.shape, Escape.BOUNDARY, dtype=object)
    out[m > tol] = Escape.ESCAPE
    out[m < -tol] = Escape.NON_ESCAPE
    return out


def classify_velocity(theta: float, v, tol: float = 1e-9) -> Escape:
    """Whether a wedge orbit with unit velocity ``v`` eventually escapes.

    The answer does not depend on the starting position: a velocity inside
    the sector of directions spanned by the wedge escapes from anywhere,
    and any other velocity hits a wall.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or abs(float(v @ v) - 1.0) > 1e-9:
        raise ValueError("v must be a unit 3-vector")
    return classify_velocities(theta, v[None, :], tol)[0]


def wedge_axis_distance(theta: float, V) -> np.ndarray:
    """Angular distance of wedge-frame velocities from the periodic axis.

    Constant along every orbit while it bounces between the two walls.
    """
    axis = col.wedge_axis(theta)
    V = _canonical(np.asarray(V, dtype=float))
    return np.arccos(np.clip(V @ axis, -1.0, 1.0))


def non_escape_area(theta: float, samples: int = 100_000, seed: int = 0) -> float:
    """Monte Carlo area of the non-escape set on the half sphere (total area 2 pi).

    Uses a fixed seed so that areas at different angles share their
    random numbers.
    """
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(samples, 3))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    m = escape_margin(theta, V)
    return 2.0 * math.pi * float(np.mean(m < 0.0))


def cap_area(theta: float) -> float:
    return 2.0 * math.pi * (1.0 - math.cos(escape_cap_radius(theta)))


# ---------------------------------------------------------------------------
# circle


@dataclass(frozen=True)
class CausticPair:
    r1: float
    r2: float

    @property
    def theta1(self) -> float:
        return math.asin(self.r1)

    @property
    def theta2(self) -> float:
        return math.asin(self.r2)


def circle_caustics(v) -> CausticPair:
    """Signed radii (in units of the table radius) of the two caustics.

    ``v`` is an outgoing velocity in the collision frame: ``v[1]`` along
    the forward tangent, ``v[2]`` along the inward normal.
    """
    v = col._as_velocity(v)
    if v[2] == 0.0:
        raise ValueError("normal velocity component must be non-zero")
    r1 = v[1] / math.hypot(v[1], v[2])
    t = _B * v[0] + _A * v[1]
    r2 = t / math.hypot(t, v[2])
    return CausticPair(float(r1), float(r2))


def circle_ngon_velocity(n: int) -> np.ndarray:
    """Collision-frame velocity whose circle orbit is a regular ``n``-gon."""
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    if n == 2:
        return np.array([0.0, 0.0, 1.0])
    v = np.array([1.0, SQRT2, SQRT2 * math.tan(math.pi / n)])
    return v / np.linalg.norm(v)


def circle_start(radius: float, angle: float, v_local) -> tuple[np.ndarray, np.ndarray]:
    """Boundary point at polar ``angle`` and the global velocity for collision-frame ``v_local``."""
    nu = -np.array([math.cos(angle), math.sin(angle)])
    t = col.tangent(nu)
    v = np.asarray(v_local, dtype=float)
    planar = v[1] * t + v[2] * nu
    return -radius * nu, np.array([v[0], planar[0], planar[1]])


def chord_distances(orbit: Orbit, center, start=None) -> np.ndarray:
    """Distance from ``center`` to the midpoint of each flight between collisions.

    With ``start`` the flight from the initial position is included.
    """
    pts = orbit.points
    if start is not None:
        pts = np.vstack([np.asarray(start, dtype=float), pts])
    mid = 0.5 * (pts[1:] + pts[:-1])
    return np.linalg.norm(mid - np.asarray(center, dtype=float), axis=1)


def chord_line_distances(orbit: Orbit, center, start=None) -> np.ndarray:
    """Distance from ``center`` to the line carrying each flight."""
    pts = orbit.points
    if start is not None:
        pts = np.vstack([np.asarray(start, dtype=float), pts])
    d = pts[1:] - pts[:-1]
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    w = np.asarray(center, dtype=float) - pts[:-1]
    return np.abs(w[:, 0] * d[:, 1] - w[:, 1] * d[:, 0])


# ---------------------------------------------------------------------------
# equilateral triangle

TRIANGLE_WORDS = frozenset({"12", "123", "1212", "121323", "123123"})


def triangle_cycle_matrices() -> tuple[np.ndarray, np.ndarray]:
    """Collision-to-collision maps between adjacent walls of the equilateral triangle.

    In the local frame of the wall just hit, the next wall's frame is the
    current one turned by -2pi/3 (``S1``, next wall counterclockwise) or
    by 2pi/3 (``S2``, clockwise).
    """
    T = col.collision_matrix_T()
    return T @ col.frame_rotation(-2.0 * math.pi / 3.0), T @ col.frame_rotation(2.0 * math.pi / 3.0)


def canonical_word(pieces) -> str:
    """Cyclic wall sequence up to rotation, reversal and relabeling."""
    w = list(pieces)
    if not w:
        return ""
    best = None
    for seq in (w, w[::-1]):
        for k in range(len(seq)):
            rot = seq[k:] + seq[:k]
            labels: dict = {}
            s = "".join(str(labels.setdefault(x, len(labels) + 1)) for x in rot)
            if best is None or s < best:
                best = s
    return best


@dataclass(frozen=True)
class TriangleClass:
    period: int | None
    word: str
    degenerate: bool

    @property
    def allowed(self) -> bool:
        return (not self.degenerate and self.period in (2, 3, 4, 6)
                and self.word in TRIANGLE_WORDS)


def triangle_classify(orbit: Orbit) -> TriangleClass:
    """Period and canonical wall word of an equilateral-triangle orbit."""
    if orbit.termination in (Termination.CORNER, Termination.DEGENERATE):
        return TriangleClass(None, "", True)
    p = orbit.period
    if p is None:
        return TriangleClass(None, "", False)
    return TriangleClass(p, canonical_word(orbit.pieces[-p:].tolist()), False)


def has_immediate_repeat(pieces) -> bool:
    """True if some wall is hit twice in a row."""
    p = np.asarray(pieces)
    return bool(len(p) > 1 and np.any(p[1:] == p[:-1]))
