"""Acceptance checks, each a named function returning observed vs expected values."""
from __future__ import annotations

import collections
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analysis as A
from . import collision as C
from . import portrait as P
from . import tables as T
from .flow import PhasePoint, Termination, detect_period, displacement_stats, iterate

SQRT2 = math.sqrt(2.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    observed: dict
    expected: dict
    runtime: float = 0.0
    budget: float | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} ({self.runtime:.2f}s)"


CHECKS: dict[str, tuple[Callable[[], tuple[bool, dict, dict]], float]] = {}


def check(name: str, budget: float):
    """Register a check; ``budget`` is a soft runtime ceiling in seconds."""
    def deco(fn):
        CHECKS[name] = (fn, budget)
        return fn
    return deco


def run_check(name: str) -> CheckResult:
    fn, budget = CHECKS[name]
    t0 = time.perf_counter()
    passed, observed, expected = fn()
    return CheckResult(name, bool(passed), observed, expected, time.perf_counter() - t0, budget)


def run_all(names=None) -> list[CheckResult]:
    return [run_check(n) for n in (names or CHECKS)]


def _unit_sphere(rng, n):
    V = rng.standard_normal((n, 3))
    return V / np.linalg.norm(V, axis=1, keepdims=True)


# ---------------------------------------------------------------------------


@check("01-collision-law", budget=1.0)
def collision_law():
    T_ = C.collision_matrix_T()
    exact = np.array([[-1.0 / 3.0, 2.0 * math.sqrt(2.0) / 3.0, 0.0],
                      [2.0 * math.sqrt(2.0) / 3.0, 1.0 / 3.0, 0.0],
                      [0.0, 0.0, -1.0]])
    entry = bool(np.array_equal(T_, exact))
    orth = float(np.abs(T_.T @ T_ - np.eye(3)).max())
    invol = float(np.abs(T_ @ T_ - np.eye(3)).max())
    rng = np.random.default_rng(1)
    worst = 0.0
    count = 0
    while count < 10_000:
        a = rng.uniform(0.0, 2.0 * math.pi)
        nu = np.array([math.cos(a), math.sin(a)])
        v = rng.standard_normal(3)
        v /= np.linalg.norm(v)
        if v[1:] @ nu >= 0.0:
            v[1:] -= 2.0 * (v[1:] @ nu) * nu
        if v[1:] @ nu == 0.0:
            continue
        d = np.abs(C.no_slip_reflect(v, nu) - C.reflect_matrix(nu) @ v).max()
        worst = max(worst, float(d))
        count += 1
    ok = entry and orth <= 1e-14 and invol <= 1e-14 and worst <= 1e-12
    return ok, {"entries_exact": entry, "orthogonality": orth, "T2_minus_I": invol,
                "direct_vs_matrix": worst}, {"entries_exact": True, "orthogonality": 1e-14,
                                             "T2_minus_I": 1e-14, "direct_vs_matrix": 1e-12}


@check("02-strip-matrix", budget=10.0)
def strip_matrix():
    lower, upper = np.array([0.0, 1.0]), np.array([0.0, -1.0])
    composite = C.reflect_matrix(upper) @ C.reflect_matrix(lower)
    mat_err = float(np.abs(composite - C.strip_cycle_matrix()).max())
    strip = T.strip()
    vert = iterate(strip, PhasePoint((0.0, 0.0), (0.0, 0.0, 1.0)), 100)
    rng = np.random.default_rng(2)
    periods = []
    for _ in range(5):
        v = rng.standard_normal(3)
        v[2] = abs(v[2]) + 0.2
        o = iterate(strip, PhasePoint.unit((0.0, 0.0), v), 20_000, detect=False)
        periods.append(detect_period(o, vel_tol=1e-6, max_lag=10_000))
    ok = mat_err <= 1e-12 and vert.period == 2 and all(p is None for p in periods)
    return ok, {"matrix_error": mat_err, "vertical_period": vert.period,
                "nonvertical_periods": periods}, {"matrix_error": 1e-12, "vertical_period": 2,
                                                  "nonvertical_periods": [None] * 5}


STRIP_V2 = (0.3, 0.5, 1.0 / SQRT2, 0.9)


@check("03-strip-bound", budget=10.0)
def strip_bound_check():
    strip = T.strip()
    obs = {}
    ok = True
    for v2 in STRIP_V2:
        # no initial spin: v = (0, sqrt(1 - v2^2), v2)
        pp = PhasePoint.unit((0.0, 0.0), (0.0, math.sqrt(1.0 - v2 * v2), v2))
        o = iterate(strip, pp, 100_000, detect=False)
        sup = displacement_stats(o, (1.0, 0.0))["max_displacement"]
        b = A.strip_bound(v2)
        obs[f"{v2:.6g}"] = {"sup": sup, "bound": b, "ratio": sup / b}
        ok &= (sup <= b + 1e-9) and (sup >= 0.95 * b)
    return ok, obs, {"ratio_range": [0.95, 1.0]}


@check("04-contact-lines", budget=2.0)
def contact_lines():
    strip = T.strip()
    pp = PhasePoint.unit((0.0, 0.0), (0.3, 0.7, 0.5))
    o = iterate(strip, pp, 10_000, detect=False)
    out = {}
    ok = True
    for piece, target, label in ((1, SQRT2, "upper"), (0, -SQRT2, "lower")):
        m = o.pieces == piece
        x0, x1 = o.x0[m], o.points[m, 0]
        slope, icept = np.polyfit(x0, x1, 1)
        res = float(np.abs(np.polyval([slope, icept], x0) - x1).max())
        out[label] = {"slope": float(slope), "residual": res}
        ok &= abs(slope - target) <= 1e-8 and res < 1e-8
    return ok, out, {"upper": SQRT2, "lower": -SQRT2, "tolerance": 1e-8}


def _bounded_velocities(theta, rng, n, margin=1e-3):
    out = []
    while len(out) < n:
        V = _unit_sphere(rng, 4 * n)
        out.extend(V[A.escape_margin(theta, V) < -margin])
    return np.array(out[:n])


def _wedge_periods(theta, n, seed, max_collisions=1000):
    w = T.wedge(theta)
    rng = np.random.default_rng(seed)
    periods = []
    for v in _bounded_velocities(theta, rng, n):
        o = iterate(w, PhasePoint((0.0, 1.0), v), max_collisions, pos_tol=1e-8)
        periods.append(o.period if o.termination == Termination.PERIOD_DETECTED else None)
    return periods


@check("05-wedge-spectrum", budget=5.0)
def wedge_spectrum():
    cos_pi3 = math.cos(C.wedge_alpha(math.pi / 3.0))
    roots_half = C.theta_for_alpha(math.pi / 2.0)
    a_2709 = C.wedge_alpha(0.2709)
    theta_10 = min(C.theta_for_alpha(4.0 * math.pi / 5.0), key=lambda t: abs(t - 0.2709))
    cases = {"pi/3": (math.pi / 3.0, 4), "alpha=pi/2": (roots_half[0], 8),
             "alpha=4pi/5": (theta_10, 10)}
    sims = {}
    ok = abs(cos_pi3 + 1.0) <= 1e-12
    ok &= len(roots_half) == 1 and abs(roots_half[0] - 2.16598) <= 1e-5
    ok &= abs(a_2709 - 0.8 * math.pi) <= 1e-3
    for label, (theta, expected) in cases.items():
        ps = _wedge_periods(theta, 10, seed=5)
        sims[label] = {"theta": theta, "periods": sorted(set(ps), key=str)}
        ok &= all(p == expected for p in ps)
    return ok, {"cos_alpha_pi3": cos_pi3, "theta_for_alpha_pi2": roots_half,
                "alpha_0.2709": a_2709, "simulated": sims}, \
        {"cos_alpha_pi3": -1.0, "theta_for_alpha_pi2": 2.16598, "alpha_0.2709": 0.8 * math.pi,
         "periods": {"pi/3": 4, "alpha=pi/2": 8, "alpha=4pi/5": 10}}


@check("06-wedge-axis", budget=2.0)
def wedge_axis_check():
    rng = np.random.default_rng(6)
    worst = 0.0
    for theta in rng.uniform(1e-3, math.pi - 1e-3, 1000):
        u = C.wedge_axis(theta)
        worst = max(worst, float(np.abs(C.wedge_cycle_matrix(theta) @ u - u).max()))
    drifts, periods = [], []
    for theta in (0.5, math.pi / 2.0, 2.5):
        o = iterate(T.wedge(theta), PhasePoint((0.0, 1.0), C.wedge_axis(theta)), 100, detect=False)
        drifts.append(float(np.abs(o.points[2:] - o.points[:-2]).max()))
        periods.append(detect_period(o, pos_tol=1e-10))
    ok = worst <= 1e-12 and max(drifts) <= 1e-10 and all(p == 2 for p in periods)
    return ok, {"axis_residual": worst, "drift": max(drifts), "periods": periods}, \
        {"axis_residual": 1e-12, "drift": 1e-10, "periods": [2, 2, 2]}


@check("07-periodic-wedges", budget=10.0)
def periodic_wedges():
    obs = {}
    ok = True
    for n in range(2, 7):
        theta = C.theta_for_alpha(2.0 * math.pi / n)[0]
        ps = _wedge_periods(theta, 100, seed=70 + n)
        fails = sum(p != 2 * n for p in ps)
        obs[n] = {"theta": theta, "failures": fails,
                  "periods": dict(collections.Counter(map(str, ps)))}
        ok &= fails == 0
    return ok, obs, {n: 2 * n for n in range(2, 7)}


ESCAPE_THETAS = (0.5, math.pi / 3.0, 1.2, 2.0)
ESCAPE_BAND = 1e-6


@check("08-escape-partition", budget=30.0)
def escape_partition():
    rng = np.random.default_rng(8)
    obs = {}
    ok = True
    for theta in ESCAPE_THETAS:
        w = T.wedge(theta)
        stay, leave = [], []
        while len(stay) < 1000 or len(leave) < 1000:
            V = _unit_sphere(rng, 2000)
            m = A.escape_margin(theta, V)
            stay.extend(V[m < -ESCAPE_BAND])
            leave.extend(V[m > ESCAPE_BAND])
        bad_stay = bad_leave = 0
        for v in stay[:1000]:
            o = iterate(w, PhasePoint((0.0, 1.0), v), 10_000, detect=False, keep=1)
            bad_stay += o.termination != Termination.MAX_COLLISIONS
        slowest = 0
        for v in leave[:1000]:
            o = iterate(w, PhasePoint((0.0, 1.0), v), 1000, detect=False, keep=1)
            bad_leave += o.termination != Termination.ESCAPED
            slowest = max(slowest, o.n_events)
        obs[f"{theta:.6g}"] = {"non_escape_failures": bad_stay, "escape_failures": bad_leave,
                               "slowest_escape": slowest}
        ok &= bad_stay == 0 and bad_leave == 0
    return ok, obs, {"failures": 0}


@check("09-circle", budget=5.0)
def circle_check():
    circ = T.circle(1.0)
    v = np.array([0.2, 0.5, 0.7])
    v /= np.linalg.norm(v)
    x, vg = A.circle_start(1.0, 0.0, v)
    o = iterate(circ, PhasePoint(x, vg), 1000, detect=False)
    cp = A.circle_caustics(v)
    mids = A.chord_distances(o, (0.0, 0.0), start=x)
    lines = A.chord_line_distances(o, (0.0, 0.0), start=x)
    alt = max(float(np.abs(mids[0::2] - abs(cp.r1)).max()),
              float(np.abs(mids[1::2] - abs(cp.r2)).max()))
    tangency = float(np.abs(mids - lines).max())
    closure = {}
    for n in range(3, 9):
        xs, vs = A.circle_start(1.0, 0.4, A.circle_ngon_velocity(n))
        on = iterate(circ, PhasePoint(xs, vs), 3 * n, detect=False)
        verts = np.vstack([xs, on.points])
        sides = np.linalg.norm(np.diff(verts[: n + 1], axis=0), axis=1)
        closure[n] = max(float(np.linalg.norm(on.points[n - 1] - xs)), float(np.ptp(sides)))
    w = np.array([0.3, 0.3 * SQRT2, 0.8])
    w /= np.linalg.norm(w)
    xs, vs = A.circle_start(1.0, 1.1, w)
    ns = iterate(circ, PhasePoint(xs, vs), 1000, detect=False)
    sp = iterate(circ, PhasePoint(xs, vs), 1000, detect=False, law="specular")
    match = max(float(np.abs(ns.points - sp.points).max()),
                float(np.abs(ns.v_after - sp.v_after).max()))
    ok = alt <= 1e-9 and tangency <= 1e-9 and max(closure.values()) <= 1e-9 and match <= 1e-9
    return ok, {"alternation": alt, "midpoint_tangency": tangency, "ngon_closure": closure,
                "specular_match": match}, {"tolerance": 1e-9}


def _interior_point(table, rng):
    x0, y0, x1, y1 = table.bbox
    while True:
        p = rng.uniform((x0, y0), (x1, y1))
        if table.contains(p) and table.distance_to_boundary(p) > 1e-6:
            return p


@check("10-equilateral-triangle", budget=5.0)
def equilateral():
    tri = T.regular_polygon(3, 1.0)
    rng = np.random.default_rng(10)
    hist = collections.Counter()
    words = collections.Counter()
    failures = degenerate = repeats = 0
    done = 0
    while done < 1000:
        o = iterate(tri, PhasePoint.unit(_interior_point(tri, rng), rng.standard_normal(3)), 200)
        cls = A.triangle_classify(o)
        if cls.degenerate:
            degenerate += 1
            continue
        done += 1
        hist[cls.period] += 1
        words[cls.word] += 1
        repeats += A.has_immediate_repeat(o.pieces)
        failures += not cls.allowed
    S1, S2 = A.triangle_cycle_matrices()
    id1 = float(np.abs(S1 @ np.linalg.matrix_power(S2, 3) @ S1 @ S1 - np.eye(3)).max())
    id2 = float(np.abs(np.linalg.matrix_power(S1, 6) - np.eye(3)).max())
    ok = failures == 0 and repeats == 0 and id1 <= 1e-12 and id2 <= 1e-12
    return ok, {"periods": dict(hist), "words": dict(words), "failures": failures,
                "degenerate_skipped": degenerate, "immediate_repeats": repeats,
                "S1_S2^3_S1^2": id1, "S1^6": id2}, \
        {"periods": [2, 3, 4, 6], "words": sorted(A.TRIANGLE_WORDS), "identities": 1e-12}


@check("11-energy-drift", budget=5.0)
def energy_drift():
    hexagon = T.regular_polygon(6, 1.0)
    o = iterate(hexagon, PhasePoint.unit((0.1, 0.2), (0.3, 0.5, 0.7)), 1_000_000,
                detect=False, keep=1)
    ok = o.n_events == 1_000_000 and o.max_speed_error < 1e-9
    return ok, {"events": o.n_events, "max_speed_error": o.max_speed_error}, \
        {"events": 1_000_000, "max_speed_error": 1e-9}


@check("12-determinism", budget=10.0)
def determinism():
    hexagon = T.regular_polygon(6, 1.0)
    sampling = P.Sampling(count=24, seed=12345)
    a = P.run_portrait(hexagon, sampling, 500, jobs=1)
    b = P.run_portrait(hexagon, sampling, 500, jobs=8)
    same = {fmt: P.dataset_bytes(a, fmt) == P.dataset_bytes(b, fmt) for fmt in ("csv", "jsonl")}
    return all(same.values()), {"identical": same}, {"identical": {"csv": True, "jsonl": True}}


# thresholds for the portrait checks
HEXAGON_TUBE = 0.05
ISOSCELES_DISPERSION = 0.02
STADIUM_BOUNDED_FRACTION = 0.01  # frozen regression value, seed 0, 200 orbits


def hexagon_dataset():
    return P.run_portrait(T.build("hexagon"), P.Sampling(count=20, seed=0), 2000)


@check("13a-portrait-hexagon", budget=5.0)
def portrait_hexagon():
    ds = hexagon_dataset()
    widths = [P.closed_curve_thickness(r)[0] for r in ds.orbits]
    thin = sum(w < HEXAGON_TUBE for w in widths)
    ok = thin == len(widths) and P.ensure_disk(ds)
    return ok, {"closed_curve_orbits": thin, "orbits": len(widths),
                "widths": [float(f"{w:.3g}") for w in widths]}, \
        {"closed_curve_orbits": len(widths), "tube_width": HEXAGON_TUBE}


@check("13b-portrait-isosceles", budget=5.0)
def portrait_isosceles():
    table = T.build("isosceles")
    ds = P.run_portrait(table, P.Sampling(count=40, seed=0), 2000)
    fams = {f"{a}{b}": P.corner_dispersion(table, ds, a, b) for a, b in ((1, 2), (0, 1), (0, 2))}
    members = sum(len(v) for v in fams.values())
    worst = max((max(v) for v in fams.values() if v), default=math.inf)
    ok = members > 0 and worst < ISOSCELES_DISPERSION and P.ensure_disk(ds)
    return ok, {"family_sizes": {k: len(v) for k, v in fams.items()}, "worst_dispersion": worst}, \
        {"worst_dispersion": ISOSCELES_DISPERSION}


@check("13c-portrait-stadium", budget=5.0)
def portrait_stadium():
    ds = P.run_portrait(T.build("stadium"), P.Sampling(count=200, seed=0), 2000)
    frac = P.bounded_fraction(ds, [0, 2])
    ok = frac > 0.0 and abs(frac - STADIUM_BOUNDED_FRACTION) < 1e-12 and P.ensure_disk(ds)
    return ok, {"bounded_fraction": frac}, {"bounded_fraction": STADIUM_BOUNDED_FRACTION}
