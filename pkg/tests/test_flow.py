from __future__ import annotations

import io
import json
import math

import numpy as np
import pytest

from noslip import analysis as A
from noslip import collision as C
from noslip import tables as T
from noslip.flow import (PhasePoint, Termination, detect_period, displacement_stats, iterate,
                         step, write_trace_csv, write_trace_jsonl, TRACE_COLUMNS)

SQRT2 = math.sqrt(2.0)


def test_phase_point_validation():
    with pytest.raises(ValueError):
        PhasePoint([0, 0], [1.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        PhasePoint([math.nan, 0], [1.0, 0.0, 0.0])
    pp = PhasePoint.unit([0, 0], [3.0, 0.0, 4.0])
    np.testing.assert_allclose(pp.velocity, [0.6, 0.0, 0.8])
    with pytest.raises(ValueError):
        pp.velocity[0] = 1.0


def test_start_outside_rejected():
    with pytest.raises(ValueError):
        iterate(T.circle(), PhasePoint([2.0, 0.0], [0.0, 1.0, 0.0]), 10)


def test_vertical_bounce_has_period_two():
    sq = T.polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    o = iterate(sq, PhasePoint([0.5, 0.5], [0.0, 0.0, 1.0]), 50)
    assert o.termination == Termination.PERIOD_DETECTED
    assert o.period == 2
    np.testing.assert_allclose(o.points[:2], [[0.5, 1.0], [0.5, 0.0]], atol=1e-15)


def test_event_fields_follow_collision_law():
    hexagon = T.build("hexagon")
    o = iterate(hexagon, PhasePoint.unit([0.1, 0.05], [0.3, 0.7, 0.4]), 200, detect=False)
    assert o.termination == Termination.MAX_COLLISIONS and len(o) == 200
    for ev in o.events[:50]:
        nu = hexagon.pieces[ev.piece].normal_at(ev.arclength)
        np.testing.assert_allclose(ev.v_after, C.reflect_matrix(nu) @ ev.v_before, atol=1e-13)
    # consecutive events: flight along the previous outgoing velocity
    pts, t, va, x0 = o.points, o.flight_times, o.v_after, o.x0
    np.testing.assert_allclose(pts[1:], pts[:-1] + t[1:, None] * va[:-1, 1:], atol=1e-12)
    np.testing.assert_allclose(x0[1:], x0[:-1] + t[1:] * va[:-1, 0], atol=1e-12)
    np.testing.assert_allclose(o.v_before[1:], va[:-1], atol=0)


def test_specular_law_keeps_spin():
    o = iterate(T.build("stadium"), PhasePoint.unit([0.1, 0.2], [0.5, 0.6, 0.3]), 100,
                law="specular", detect=False)
    np.testing.assert_allclose(o.v_after[:, 0], 0.5 / np.linalg.norm([0.5, 0.6, 0.3]))
    with pytest.raises(ValueError):
        iterate(T.circle(), PhasePoint([0, 0], [0, 1, 0]), 5, law="sticky")


@pytest.mark.parametrize("name", ["hexagon", "circle", "isosceles"])
def test_time_reversal(name):
    table = T.build(name) if name != "circle" else T.circle()
    start = PhasePoint.unit([0.05, 0.1] if name != "isosceles" else [0.0, 0.5], [0.4, 0.5, 0.6])
    fwd = iterate(table, start, 100, detect=False)
    assert fwd.termination == Termination.MAX_COLLISIONS
    # stop halfway along the next flight, then reverse every velocity component
    ev, _ = step(table, fwd.final)
    mid = fwd.final.position + 0.5 * ev.flight_time * fwd.final.velocity[1:]
    back = iterate(table, PhasePoint(mid, -fwd.final.velocity, 0.0), 100, detect=False)
    np.testing.assert_allclose(back.points, fwd.points[::-1], atol=1e-9)
    np.testing.assert_allclose(back.final.velocity, -start.velocity, atol=1e-9)


def test_speed_conserved_over_long_run():
    o = iterate(T.build("stadium"), PhasePoint.unit([0.3, 0.2], [0.2, 0.7, 0.5]), 100_000,
                detect=False, keep=10)
    assert o.n_events == 100_000 and len(o) == 10 and o.first_index == 99_990
    assert o.max_speed_error < 1e-10


def test_wedge_escape_and_period():
    w = T.wedge(1.0)
    o = iterate(w, PhasePoint([0.0, 1.0], [0.0, 0.0, 1.0]), 10)
    assert o.termination == Termination.ESCAPED and o.n_events == 0
    assert step(w, PhasePoint([0.0, 1.0], [0.0, 0.0, 1.0])) == Termination.ESCAPED
    theta = C.theta_for_alpha(math.pi / 2)[0]
    o = iterate(T.wedge(theta), PhasePoint.unit([0.0, 1.0], [-1.2, 1.0, 0.1]), 100, pos_tol=1e-8)
    assert o.termination == Termination.PERIOD_DETECTED and o.period == 8


def test_corner_termination():
    sq = T.polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    o = iterate(sq, PhasePoint.unit([0.5, 0.5], [0.0, 1.0, 1.0]), 10)
    assert o.termination == Termination.CORNER


def test_detect_period_after_the_fact():
    eq = T.build("equilateral")
    start = PhasePoint.unit([0.1, -0.1], [0.3, 0.8, 0.5])
    live = iterate(eq, start, 500)
    post = iterate(eq, start, 500, detect=False)
    assert live.period in (2, 3, 4, 6)
    assert detect_period(post) == live.period


def test_step_matches_first_event():
    hexagon = T.build("hexagon")
    pp = PhasePoint.unit([0.1, 0.05], [0.3, 0.7, 0.4])
    ev, nxt = step(hexagon, pp)
    o = iterate(hexagon, pp, 1, detect=False)
    np.testing.assert_array_equal(ev.v_after, o.v_after[0])
    np.testing.assert_array_equal(nxt.position, o.points[0])


@pytest.mark.parametrize("v2", [0.3, 0.6, 0.9])
def test_strip_extents_reached_by_simulation(v2):
    v = np.array([0.0, math.sqrt(1 - v2 * v2), v2])
    o = iterate(T.strip(1.0), PhasePoint([0.0, 0.5], v), 20_000, detect=False)
    wx1, wx0 = A.strip_extents(v2)
    assert np.ptp(o.points[:, 0]) <= wx1 + 1e-9
    assert np.ptp(o.x0) <= wx0 + 1e-9
    assert np.ptp(o.points[:, 0]) > wx1 - 1e-5
    assert np.ptp(o.x0) > wx0 - 1e-5


def test_strip_contact_lines():
    v = np.array([0.2, 0.6, 0.4]) / np.linalg.norm([0.2, 0.6, 0.4])
    o = iterate(T.strip(1.0), PhasePoint([0.0, 0.5], v), 500, detect=False)
    for wall, slope in ((0, SQRT2), (1, -SQRT2)):
        sel = o.pieces == wall
        x1, x0 = o.points[sel, 0], o.x0[sel]
        resid = (x1 - slope * x0) - (x1 - slope * x0).mean()
        assert np.max(np.abs(resid)) < 1e-9 or np.max(
            np.abs((x1 + slope * x0) - (x1 + slope * x0).mean())) < 1e-9


def test_displacement_stats():
    o = iterate(T.strip(1.0), PhasePoint([0.0, 0.5], [0.0, 0.8, 0.6]), 100, detect=False)
    st = displacement_stats(o, [1.0, 0.0])
    assert st["collisions"] == 100
    assert st["max_displacement"] == pytest.approx(np.max(np.abs(o.points[:, 0])))
    with pytest.raises(ValueError):
        displacement_stats(o, [1.0, 1.0])


def test_trace_writers_round_trip():
    o = iterate(T.build("hexagon"), PhasePoint.unit([0.1, 0.05], [0.3, 0.7, 0.4]), 20, detect=False)
    buf = io.StringIO()
    write_trace_csv(o, buf, {"table": "hexagon"})
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("# noslip-trace v")
    body = [l for l in lines if not l.startswith("#")]
    assert body[0].split(",") == list(TRACE_COLUMNS)
    assert len(body) == 21
    row = body[5].split(",")
    assert float(row[TRACE_COLUMNS.index("v1_after")]) == o.v_after[4, 1]
    buf = io.StringIO()
    write_trace_jsonl(o, buf)
    recs = [json.loads(l) for l in buf.getvalue().splitlines()]
    assert recs[0]["columns"] == list(TRACE_COLUMNS) and len(recs) == 21
    assert recs[3]["x"] == o.points[2, 0]
