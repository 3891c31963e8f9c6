"""Compiled inner loops: ray/boundary intersection, collision, orbit stepping.

Tables are handed to the kernels as a packed ``(m, 12)`` float array, one
row per boundary piece:

====  ==========================================================
col   meaning
====  ==========================================================
0     kind: 0 segment, 1 arc, 2 infinite line
1-5   segment (ax, ay, bx, by); arc (cx, cy, r, start, span);
      line (px, py, ux, uy)
6     interior side: +1 left of direction / inside circle, -1 otherwise
7     1 if the piece is a glued edge
8-9   gluing translation
10    gluing target row (-1 if none)
11    piece length (inf for lines)
====  ==========================================================
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

SEGMENT, ARC, LINE = 0, 1, 2

# termination codes, mirrored by flow.Termination
MAX_COLLISIONS, ESCAPED, CORNER, DEGENERATE, PERIOD = 0, 1, 2, 3, 4

NO_SLIP, SPECULAR = 0, 1

GRAZE_T = 1e-10
GRAZE_COS = 1e-9
CORNER_TOL = 1e-9
MAX_CROSSINGS = 1_000_000

_A = 1.0 / 3.0
_B = 2.0 * math.sqrt(2.0) / 3.0
_TWO_PI = 2.0 * math.pi
_INF = np.inf

# columns of the event record array
EV_X, EV_Y, EV_X0, EV_S, EV_T = 0, 1, 2, 3, 4
EV_VB0, EV_VB1, EV_VB2, EV_VA0, EV_VA1, EV_VA2 = 5, 6, 7, 8, 9, 10
EV_WIDTH = 11


@njit(cache=True, nogil=True)
def _straight(P, i, ox, oy, dx, dy):
    kind = int(P[i, 0])
    ax, ay, bx, by = P[i, 1], P[i, 2], P[i, 3], P[i, 4]
    if kind == SEGMENT:
        ex, ey = bx - ax, by - ay
        length = P[i, 11]
        ux, uy = ex / length, ey / length
    else:
        ux, uy = bx, by
        ex, ey = ux, uy
        length = _INF
    side = P[i, 6]
    nx, ny = -uy * side, ux * side
    denom = dx * ey - dy * ex
    if denom == 0.0:
        return _INF, 0.0, 0.0, 0.0, 0.0, 0.0
    wx, wy = ax - ox, ay - oy
    t = (wx * ey - wy * ex) / denom
    if kind == SEGMENT:
        u = (wx * dy - wy * dx) / denom
        if u < -1e-12 or u > 1.0 + 1e-12:
            return _INF, 0.0, 0.0, 0.0, 0.0, 0.0
        u = min(1.0, max(0.0, u))
        s = u * length
        edist = min(s, length - s)
    else:
        s = (ox + t * dx - ax) * ux + (oy + t * dy - ay) * uy
        edist = _INF
    return t, nx, ny, s, edist, dx * nx + dy * ny


@njit(cache=True, nogil=True)
def _arc_param(P, i, hx, hy):
    """Arclength along the forward tangent and in-span flag for a point on the circle."""
    cx, cy, r, a0, span = P[i, 1], P[i, 2], P[i, 3], P[i, 4], P[i, 5]
    phi = math.atan2(hy - cy, hx - cx)
    rel = (phi - a0) % _TWO_PI
    tol = 1e-12
    if rel > span + tol:
        if rel > _TWO_PI - tol:
            rel = 0.0
        else:
            return 0.0, False
    rel = min(rel, span)
    if P[i, 6] > 0.0:
        s = r * rel
    else:
        s = r * (span - rel)
    return s, True


@njit(cache=True, nogil=True)
def _arc(P, i, ox, oy, dx, dy):
    cx, cy, r, span = P[i, 1], P[i, 2], P[i, 3], P[i, 5]
    side = P[i, 6]
    fx, fy = ox - cx, oy - cy
    b = fx * dx + fy * dy
    c = fx * fx + fy * fy - r * r
    disc = b * b - c
    if disc < 0.0:
        return _INF, 0.0, 0.0, 0.0, 0.0, 0.0, 0
    sq = math.sqrt(disc)
    q = -b - sq if b >= 0.0 else -b + sq
    t1 = q
    t2 = c / q if q != 0.0 else q
    lo, hi = min(t1, t2), max(t1, t2)
    length = P[i, 11]
    closed = span >= _TWO_PI - 1e-12
    grazing = 0
    for k in range(2):
        t = lo if k == 0 else hi
        hx, hy = ox + t * dx, oy + t * dy
        nx, ny = (cx - hx) / r, (cy - hy) / r
        if side < 0.0:
            nx, ny = -nx, -ny
        cosi = dx * nx + dy * ny
        if cosi >= 0.0:
            continue
        s, ok = _arc_param(P, i, hx, hy)
        if not ok:
            continue
        if t <= GRAZE_T:
            if t > -GRAZE_T:
                grazing += 1
            continue
        edist = _INF if closed else min(s, length - s)
        return t, nx, ny, s, edist, cosi, grazing
    return _INF, 0.0, 0.0, 0.0, 0.0, 0.0, grazing


@njit(cache=True, nogil=True)
def first_hit(P, C, ox, oy, dx, dy):
    """Closest forward crossing of the ray ``o + t d`` (``d`` unit) with the boundary.

    Returns ``(status, t, piece, hx, hy, nx, ny, s, edist, cos_incidence)``
    with status 0 for a hit, 1 for no crossing, 2 when only grazing
    candidates (``|t| <= GRAZE_T``) were found.
    """
    best_t = _INF
    best_i = -1
    bnx = bny = bs = bed = bcos = 0.0
    grazing = 0
    for i in range(P.shape[0]):
        kind = int(P[i, 0])
        if kind == ARC:
            t, nx, ny, s, ed, cosi, g = _arc(P, i, ox, oy, dx, dy)
            grazing += g
        else:
            t, nx, ny, s, ed, cosi = _straight(P, i, ox, oy, dx, dy)
            if t == _INF or cosi >= 0.0:
                continue
            if t <= GRAZE_T:
                if t > -GRAZE_T:
                    grazing += 1
                continue
        if t < best_t:
            best_t, best_i = t, i
            bnx, bny, bs, bed, bcos = nx, ny, s, ed, cosi
    if best_i < 0:
        status = 2 if grazing > 0 else 1
        return status, _INF, -1, ox, oy, 0.0, 0.0, 0.0, 0.0, 0.0
    hx, hy = ox + best_t * dx, oy + best_t * dy
    for k in range(C.shape[0]):
        d = math.hypot(hx - C[k, 0], hy - C[k, 1])
        if d < bed:
            bed = d
    return 0, best_t, best_i, hx, hy, bnx, bny, bs, bed, bcos


@njit(cache=True, nogil=True)
def collide(law, v0, v1, v2, nx, ny):
    tx, ty = ny, -nx
    vt = v1 * tx + v2 * ty
    vn = v1 * nx + v2 * ny
    if law == NO_SLIP:
        w0 = -_A * v0 + _B * vt
        wt = _B * v0 + _A * vt
    else:
        w0 = v0
        wt = vt
    return w0, wt * tx - vn * nx, wt * ty - vn * ny


@njit(cache=True, nogil=True)
def _same_position(P, piece, s1, s2, pos_tol):
    ds = abs(s1 - s2)
    if int(P[piece, 0]) == ARC and P[piece, 5] >= _TWO_PI - 1e-12:
        ds = min(ds, P[piece, 11] - ds)
    return ds <= pos_tol


@njit(cache=True, nogil=True)
def run_orbit(P, C, bounded, escape_r, law, state, max_events, capacity,
              detect, horizon, pos_tol, vel_tol, out_piece, out_f):
    """Iterate the billiard map from ``state = [x, y, x0, v0, v1, v2]``.

    Events are written to ``out_piece``/``out_f`` at row ``k % capacity``.
    ``state`` is updated in place to the last post-collision phase point.
    Returns ``(n_events, termination, period, max_speed_error)``.
    """
    x, y, x0 = state[0], state[1], state[2]
    v0, v1, v2 = state[3], state[4], state[5]
    hp = np.empty(horizon, dtype=np.int64)
    hs = np.empty(horizon)
    hv = np.empty((horizon, 3))
    n = 0
    term = MAX_COLLISIONS
    period = 0
    max_err = abs(math.sqrt(v0 * v0 + v1 * v1 + v2 * v2) - 1.0)
    while n < max_events:
        vp = math.hypot(v1, v2)
        if vp == 0.0:
            term = DEGENERATE
            break
        dx, dy = v1 / vp, v2 / vp
        ox, oy = x, y
        dist = 0.0
        crossings = 0
        while True:
            status, t, i, hx, hy, nx, ny, s, ed, cosi = first_hit(P, C, ox, oy, dx, dy)
            if status != 0:
                break
            if P[i, 7] > 0.0:
                dist += t
                ox, oy = hx + P[i, 8], hy + P[i, 9]
                crossings += 1
                if crossings > MAX_CROSSINGS:
                    status = 3
                    break
                continue
            dist += t
            break
        if status != 0:
            if status == 1 and not bounded:
                term = ESCAPED
            else:
                term = DEGENERATE
            break
        if not bounded and math.hypot(hx, hy) > escape_r:
            term = ESCAPED
            break
        if ed < CORNER_TOL:
            term = CORNER
            break
        if -cosi < GRAZE_COS:
            term = DEGENERATE
            break
        tflight = dist / vp
        x0 += v0 * tflight
        w0, w1, w2 = collide(law, v0, v1, v2, nx, ny)
        row = n % capacity
        out_piece[row] = i
        out_f[row, EV_X] = hx
        out_f[row, EV_Y] = hy
        out_f[row, EV_X0] = x0
        out_f[row, EV_S] = s
        out_f[row, EV_T] = tflight
        out_f[row, EV_VB0] = v0
        out_f[row, EV_VB1] = v1
        out_f[row, EV_VB2] = v2
        out_f[row, EV_VA0] = w0
        out_f[row, EV_VA1] = w1
        out_f[row, EV_VA2] = w2
        x, y = hx, hy
        v0, v1, v2 = w0, w1, w2
        err = abs(math.sqrt(w0 * w0 + w1 * w1 + w2 * w2) - 1.0)
        if err > max_err:
            max_err = err
        if detect:
            filled = min(n, horizon)
            for lag in range(1, filled + 1):
                j = (n - lag) % horizon
                if (hp[j] == i
                        and abs(hv[j, 0] - w0) <= vel_tol
                        and abs(hv[j, 1] - w1) <= vel_tol
                        and abs(hv[j, 2] - w2) <= vel_tol
                        and _same_position(P, i, hs[j], s, pos_tol)):
                    period = lag
                    break
            j = n % horizon
            hp[j] = i
            hs[j] = s
            hv[j, 0], hv[j, 1], hv[j, 2] = w0, w1, w2
        n += 1
        if period > 0:
            term = PERIOD
            break
    state[0], state[1], state[2] = x, y, x0
    state[3], state[4], state[5] = v0, v1, v2
    return n, term, period, max_err
