from __future__ import annotations

import math

import numpy as np
import pytest

from noslip import analysis as A
from noslip import collision as C
from noslip import tables as T
from noslip.flow import PhasePoint, Termination, iterate

from conftest import unit_sphere

SQRT2 = math.sqrt(2.0)


# --------------------------------------------------------------------- strip

def convergent_denominators(x: float, limit: int) -> list[int]:
    """Denominators of the continued-fraction convergents of ``x`` up to ``limit``."""
    out, q0, q1, r = [], 1, 0, x
    while True:
        a = math.floor(r)
        q0, q1 = q1, a * q1 + q0
        if q1 > limit:
            return out
        if q1 > 0:
            out.append(q1)
        frac = r - a
        if frac < 1e-15:
            return out
        r = 1.0 / frac


def test_strip_scan_frozen():
    best, arg = A.strip_nonrecurrence_scan(100)
    assert arg == 74
    assert best == pytest.approx(0.04296235630171353, rel=1e-12)


@pytest.mark.parametrize("N", [10, 100, 1000])
def test_strip_scan_matches_continued_fraction(N):
    alpha = math.acos(-7.0 / 9.0)
    x = alpha / (2 * math.pi)
    q = convergent_denominators(x, N)[-1]
    best, arg = A.strip_nonrecurrence_scan(N)
    assert arg == q
    assert best == pytest.approx(2 * SQRT2 * abs(math.sin(q * alpha / 2)), rel=1e-9)


def test_strip_bound_values():
    assert A.strip_bound(1.0) == 0.0
    assert A.strip_bound(0.0) == math.inf
    assert A.strip_bound(0.5) == pytest.approx(math.sqrt(4.5))
    wx1, wx0 = A.strip_extents(0.5)
    assert wx1 == pytest.approx(3.0)
    assert wx0 == pytest.approx(A.strip_bound(0.5))
    with pytest.raises(ValueError):
        A.strip_bound(1.5)


# --------------------------------------------------------------------- wedge

POLYGON_ORDERS = {2: 4, 3: 3, 4: 8, 5: 5, 6: 12, 7: 7, 8: 16}


@pytest.mark.parametrize("n,order", sorted(POLYGON_ORDERS.items()))
def test_polygon_order(n, order):
    theta = C.theta_for_alpha(2 * math.pi / n)[0]
    region = A.escape_region(theta)
    assert region.kind == "polygon" and region.period == n
    assert region.order == order
    # vertices sit on the region boundary
    assert np.max(np.abs(A.escape_margin(theta, region.vertices))) < 1e-7


def test_irrational_angle_gives_cap():
    region = A.escape_region(0.5)
    assert region.kind == "cap" and region.period is None
    assert 0 < region.cap_radius < math.pi / 2
    assert A.non_escape_area(0.5, 200_000) == pytest.approx(A.cap_area(0.5), abs=0.02)


def test_cap_radius_limits():
    assert A.escape_cap_radius(1e-9) == pytest.approx(math.pi / 2, abs=1e-6)
    assert A.escape_cap_radius(math.pi - 1e-9) == pytest.approx(0.0, abs=1e-6)


def test_sweep_area_is_non_increasing():
    grid = np.round(np.arange(0.1, 3.0 + 1e-9, 0.1), 10)
    areas = [A.non_escape_area(t, 20_000) for t in grid]
    assert all(b <= a + 1e-12 for a, b in zip(areas, areas[1:]))


@pytest.mark.parametrize("theta", [0.5, math.pi / 3, 1.2, 2.0])
def test_classification_invariant_under_cycle(theta, rng):
    V = unit_sphere(rng, 5000)
    V = V[V[:, 1] > 0]
    S = C.wedge_cycle_matrix(theta)
    before = A.classify_velocities(theta, V)
    after = A.classify_velocities(theta, V @ S.T)
    stay = before == A.Escape.NON_ESCAPE
    assert stay.sum() > 0
    assert np.all(after[stay] != A.Escape.ESCAPE)


@pytest.mark.parametrize("theta", [0.5, 1.2, 2.0])
def test_classification_matches_simulation(theta, rng):
    table = T.wedge(theta)
    V = unit_sphere(rng, 300)
    margin = A.escape_margin(theta, V)
    for v, m in zip(V, margin):
        if abs(m) < 1e-6:
            continue
        o = iterate(table, PhasePoint([0.0, 1.0], v), 2000, detect=False)
        assert (o.termination == Termination.ESCAPED) == (m > 0), (v, m, o.termination)


def test_non_escape_survives_at_sixty_degrees(rng):
    theta = math.pi / 3
    V = unit_sphere(rng, 2000)
    V = V[A.escape_margin(theta, V) < -1e-3][:50]
    assert len(V) > 10
    table = T.wedge(theta)
    for v in V:
        o = iterate(table, PhasePoint([0.0, 1.0], v), 10_000)
        assert o.termination in (Termination.MAX_COLLISIONS, Termination.PERIOD_DETECTED)
        assert o.termination != Termination.PERIOD_DETECTED or o.period == 4


def test_axis_distance_constant_along_bounded_orbit(rng):
    theta = 0.5
    table = T.wedge(theta)
    V = unit_sphere(rng, 200)
    V = V[A.escape_margin(theta, V) < -1e-3][:10]
    for v in V:
        o = iterate(table, PhasePoint([0.0, 1.0], v), 500, detect=False)
        d = A.wedge_axis_distance(theta, o.v_after[o.pieces == 1])
        assert np.ptp(d) < 1e-9


def test_classify_velocity_validation():
    with pytest.raises(ValueError):
        A.classify_velocity(1.0, [1.0, 1.0, 0.0])
    assert A.classify_velocity(1.0, [0.0, 0.0, 1.0]) == A.Escape.ESCAPE


def test_mirror_symmetry_of_classification(rng):
    V = unit_sphere(rng, 2000)
    mirrored = V * np.array([-1.0, -1.0, 1.0])
    np.testing.assert_array_equal(A.escape_margin(1.2, V), A.escape_margin(1.2, mirrored))


# -------------------------------------------------------------------- circle

@pytest.mark.parametrize("v", [[0.3, 0.4, 0.866], [-0.5, 0.2, 0.84], [0.1, -0.6, 0.79]])
def test_chord_midpoints_alternate_between_caustics(v):
    v = np.asarray(v) / np.linalg.norm(v)
    pair = A.circle_caustics(v)
    pos, vel = A.circle_start(1.0, 0.3, v)
    o = iterate(T.circle(), PhasePoint(pos * (1 - 1e-12), vel), 60, detect=False)
    d = A.chord_line_distances(o, [0.0, 0.0], start=pos)
    np.testing.assert_allclose(d[0::2], abs(pair.r1), atol=1e-9)
    np.testing.assert_allclose(d[1::2], abs(pair.r2), atol=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 8])
def test_ngon_velocity_is_periodic(n):
    v = A.circle_ngon_velocity(n)
    pair = A.circle_caustics(v)
    assert pair.r1 == pytest.approx(pair.r2, abs=1e-12)
    assert pair.r1 == pytest.approx(math.cos(math.pi / n), abs=1e-12)
    pos, vel = A.circle_start(1.0, 0.0, v)
    o = iterate(T.circle(), PhasePoint(pos * (1 - 1e-12), vel), 200, pos_tol=1e-8)
    assert o.termination == Termination.PERIOD_DETECTED
    assert o.period == n


def test_opposite_caustic_radii_stay_on_cap():
    # zero spin-tangent combination that makes r2 = -r1: orbit keeps hitting one cap
    phi = 0.5
    v = np.array([-SQRT2 * math.cos(phi), math.cos(phi), math.sin(phi)])
    v = v / np.linalg.norm(v) + 1e-3
    v /= np.linalg.norm(v)
    st = T.stadium(1.0, 1.0)
    cap = st.pieces[1]
    pos = cap.point_at(0.5 * cap.length)
    nu = cap.normal_at(0.5 * cap.length)
    t = C.tangent(nu)
    planar = v[1] * t + v[2] * nu
    start = PhasePoint(pos + 1e-12 * nu, [v[0], *planar])
    o = iterate(st, start, 100, detect=False)
    assert np.all(o.pieces == 1)


def test_caustics_reject_tangent_velocity():
    with pytest.raises(ValueError):
        A.circle_caustics([0.6, 0.8, 0.0])


# ------------------------------------------------------------------ triangle

def test_triangle_maps_generate_finite_group():
    S1, S2 = A.triangle_cycle_matrices()
    I = np.eye(3)
    np.testing.assert_allclose(np.linalg.matrix_power(S1, 3), I, atol=1e-14)
    np.testing.assert_allclose(np.linalg.matrix_power(S2, 3), I, atol=1e-14)
    np.testing.assert_allclose(np.linalg.matrix_power(S1 @ S2, 2), I, atol=1e-14)


@pytest.mark.parametrize("pieces,word", [
    ([0, 1], "12"), ([2, 0, 1], "123"), ([1, 0, 1, 0], "1212"),
    ([1, 0, 1, 2, 0, 2], "121323"), ([0, 1, 2, 0, 1, 2], "123123"), ([2, 1, 0], "123"),
])
def test_canonical_word(pieces, word):
    assert A.canonical_word(pieces) == word


def test_immediate_repeat():
    assert A.has_immediate_repeat([0, 1, 1])
    assert not A.has_immediate_repeat([0, 1, 0, 2])


def test_triangle_orbits_are_short_periodic(rng):
    eq = T.build("equilateral")
    seen = set()
    for _ in range(100):
        while True:
            p = rng.uniform(-0.5, 0.5, 2)
            if eq.contains(p) and eq.distance_to_boundary(p) > 1e-3:
                break
        v = unit_sphere(rng, 1)[0]
        o = iterate(eq, PhasePoint(p, v), 1000)
        cls = A.triangle_classify(o)
        if cls.degenerate:
            continue
        assert cls.allowed, cls
        assert not A.has_immediate_repeat(o.pieces)
        seen.add(cls.period)
    assert seen <= {2, 3, 4, 6} and seen
