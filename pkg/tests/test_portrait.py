from __future__ import annotations

import io
import json
import math

import numpy as np
import pytest

from noslip import portrait as P
from noslip import tables as T
from noslip import verify


def small(table="hexagon", count=6, seed=3, n=300, jobs=1):
    return P.run_portrait(T.build(table), P.Sampling(count=count, seed=seed), n, jobs=jobs)


def test_sampling_is_seeded():
    t = T.build("stadium")
    a = P.sample_initial_conditions(t, P.Sampling(count=10, seed=7))
    b = P.sample_initial_conditions(t, P.Sampling(count=10, seed=7))
    c = P.sample_initial_conditions(t, P.Sampling(count=10, seed=8))
    assert all(np.array_equal(x.velocity, y.velocity) for x, y in zip(a, b))
    assert not all(np.array_equal(x.velocity, y.velocity) for x, y in zip(a, c))


def test_random_starts_point_into_table():
    t = T.build("moon")
    for pp in P.sample_initial_conditions(t, P.Sampling(count=50, seed=0)):
        assert t.distance_to_boundary(pp.position) < 1e-12
        assert t.contains(pp.position + 1e-6 * pp.velocity[1:])


def test_grid_sampling_stays_in_disk():
    t = T.build("hexagon")
    ics = P.sample_initial_conditions(t, P.Sampling(kind="grid", grid_positions=3,
                                                    grid_velocities=4))
    assert len(ics) == 3 * 12
    for pp in ics:
        assert np.linalg.norm(pp.velocity) == pytest.approx(1.0)


def test_sampling_validation():
    with pytest.raises(ValueError):
        P.Sampling(kind="sobol")
    with pytest.raises(ValueError):
        P.Sampling(kind="list")
    with pytest.raises(ValueError):
        P.run_portrait(T.wedge(1.0), P.Sampling())


def test_boundary_point_walks_pieces():
    t = T.build("stadium")
    assert P.boundary_point(t, 0.5) == (0, 0.5)
    piece, s = P.boundary_point(t, 2.0 + 0.1)
    assert piece == 1 and s == pytest.approx(0.1)


def test_projection_is_collision_frame():
    ds = small()
    assert P.ensure_disk(ds)
    rec = ds.orbits[0]
    assert len(rec) == 300
    lifted = P.lifted_velocities(rec)
    np.testing.assert_allclose(np.linalg.norm(lifted, axis=1), 1.0, atol=1e-12)
    t = T.build("hexagon")
    G = P.global_velocities(t, rec)
    assert G.shape == (300, 3)
    # outgoing velocities point into the table
    for k in range(20):
        nu = t.pieces[int(rec.pieces[k])].normal_at(float(rec.s[k]))
        assert G[k, 1:] @ nu > 0


def test_output_independent_of_thread_count():
    a = P.dataset_bytes(small(jobs=1))
    b = P.dataset_bytes(small(jobs=4))
    assert a == b
    assert P.dataset_bytes(small(jobs=1), "jsonl") == P.dataset_bytes(small(jobs=3), "jsonl")


def test_dataset_writers():
    ds = small(count=2, n=10)
    text = P.dataset_bytes(ds, "csv").decode()
    body = [l for l in text.splitlines() if not l.startswith("#")]
    assert body[0].split(",") == list(P.DATASET_COLUMNS)
    assert len(body) == 21
    recs = [json.loads(l) for l in P.dataset_bytes(ds, "jsonl").decode().splitlines()]
    assert recs[0]["format"] == "noslip-portrait"
    assert recs[0]["sampling"]["seed"] == 3
    assert len(recs[1]["v_t"]) == 10
    buf = io.StringIO()
    P.write_svg(ds, buf)
    assert buf.getvalue().startswith("<svg") and buf.getvalue().rstrip().endswith("</svg>")


def test_closed_curve_thickness_on_synthetic_orbits():
    rng = np.random.default_rng(0)
    # three small circles on the upper velocity sphere, visited in turn: period 3
    axes = np.array([[0.2, 0.1, 0.97], [-0.3, 0.2, 0.93], [0.0, -0.4, 0.92]])
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    pts = np.empty((400, 3))
    for k in range(400):
        a = axes[k % 3]
        e1 = np.cross(a, [1.0, 0.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(a, e1)
        ang = 0.7 * k
        pts[k] = math.cos(0.1) * a + math.sin(0.1) * (math.cos(ang) * e1 + math.sin(ang) * e2)
    rec = P.OrbitRecord(None, "MAX_COLLISIONS", None, np.zeros(400, int), np.zeros(400),
                        np.zeros(400), pts[:, 1], pts[:, 0])
    width, p = P.closed_curve_thickness(rec)
    assert width < 1e-12 and p == 3
    noisy = rng.uniform(-0.5, 0.5, (400, 2))
    rec = P.OrbitRecord(None, "MAX_COLLISIONS", None, np.zeros(400, int), np.zeros(400),
                        np.zeros(400), noisy[:, 0], noisy[:, 1])
    assert P.closed_curve_thickness(rec)[0] > 0.05


def test_isosceles_corner_dispersion():
    t = T.build("isosceles")
    theta, rot = P.corner_frame(t, 1, 2)
    assert theta == pytest.approx(0.6)
    ds = P.run_portrait(t, P.Sampling(count=40, seed=0), 500)
    disp = P.corner_dispersion(t, ds, 1, 2)
    assert disp and max(disp) < 1e-9


def test_stadium_bounded_fraction_frozen():
    ds = P.run_portrait(T.build("stadium"), P.Sampling(count=200, seed=0), 2000)
    assert P.bounded_fraction(ds, [0, 2]) == pytest.approx(verify.STADIUM_BOUNDED_FRACTION)


@pytest.mark.parametrize("name", sorted(T.PRESETS))
def test_every_preset_produces_a_portrait(name):
    ds = P.run_portrait(T.build(name), P.Sampling(count=4, seed=1), 200)
    assert P.ensure_disk(ds)
    assert all(r.error is None for r in ds.orbits)
