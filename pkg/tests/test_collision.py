from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noslip import collision as C

SQRT2 = math.sqrt(2.0)
angles = st.floats(-math.pi, math.pi, allow_nan=False)
comps = st.floats(-1.0, 1.0, allow_nan=False)


def incoming(v0, a, b, nu_angle):
    """Unit velocity pointing into the wall with inward normal at ``nu_angle``."""
    nu = np.array([math.cos(nu_angle), math.sin(nu_angle)])
    t = C.tangent(nu)
    planar = a * t - (abs(b) + 0.05) * nu
    v = np.array([v0, *planar])
    return v / np.linalg.norm(v), nu


def test_documented_example():
    out = C.no_slip_reflect([1.0, 0.0, -1.0], [0.0, 1.0])
    np.testing.assert_allclose(out, [-1 / 3, 2 * SQRT2 / 3, 1.0], atol=1e-15)


def test_T_properties():
    T = C.collision_matrix_T()
    np.testing.assert_allclose(T @ T, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(T.T @ T, np.eye(3), atol=1e-15)
    assert np.linalg.det(T) == pytest.approx(1.0)


@settings(max_examples=200, deadline=None)
@given(v0=comps, a=comps, b=comps, nu_angle=angles)
def test_direct_and_matrix_routes_agree(v0, a, b, nu_angle):
    v, nu = incoming(v0, a, b, nu_angle)
    direct = C.no_slip_reflect(v, nu)
    matrix = C.reflect_matrix(nu) @ v
    np.testing.assert_allclose(direct, matrix, atol=1e-13)
    assert np.linalg.norm(direct) == pytest.approx(1.0, abs=1e-13)
    # outgoing velocity points into the table
    assert direct[1:] @ nu > 0


@settings(max_examples=100, deadline=None)
@given(v0=comps, a=comps, b=comps, nu_angle=angles)
def test_specular_keeps_spin_and_reverses_normal(v0, a, b, nu_angle):
    v, nu = incoming(v0, a, b, nu_angle)
    out = C.specular_reflect(v, nu)
    assert out[0] == v[0]
    assert out[1:] @ nu == pytest.approx(-(v[1:] @ nu), abs=1e-14)
    np.testing.assert_allclose(out, C.specular_matrix(nu) @ v, atol=1e-14)


def test_outgoing_velocity_rejected():
    with pytest.raises(ValueError):
        C.no_slip_reflect([0.0, 0.0, 1.0], [0.0, 1.0])


def test_tangent_is_normal_turned_clockwise():
    np.testing.assert_allclose(C.tangent([0.0, 1.0]), [1.0, 0.0])
    np.testing.assert_allclose(C.tangent([1.0, 0.0]), [0.0, -1.0])


def test_strip_cycle_matrix_composes_wall_maps():
    S = C.reflect_matrix([0.0, -1.0]) @ C.reflect_matrix([0.0, 1.0])
    np.testing.assert_allclose(S, C.strip_cycle_matrix(), atol=1e-15)
    F = C.frame_rotation(math.pi)
    FT = F @ C.collision_matrix_T()
    np.testing.assert_allclose(FT @ FT, C.strip_cycle_matrix(), atol=1e-15)
    assert np.trace(S) == pytest.approx(-5.0 / 9.0)
    assert C.rotation_angle(S) == pytest.approx(math.acos(-7.0 / 9.0))


@pytest.mark.parametrize("theta", [0.1, 0.5, 1.0, math.pi / 3, 2.0, 3.0])
def test_wedge_axis_is_fixed(theta):
    S = C.wedge_cycle_matrix(theta)
    w = C.wedge_axis(theta)
    np.testing.assert_allclose(S @ w, w, atol=1e-14)
    s = math.sin(theta / 2)
    np.testing.assert_allclose(w * (1 / w[1]), [-SQRT2 * s, 1.0, 0.0], atol=1e-14)
    H = C.wedge_half_map(theta)
    np.testing.assert_allclose(H @ H, S, atol=1e-12)


def test_wedge_limit_matches_rotated_strip():
    F = C.frame_rotation(math.pi / 2)
    target = F @ C.strip_cycle_matrix() @ F.T
    np.testing.assert_allclose(C.wedge_cycle_matrix(1e-8), target, atol=1e-6)


@settings(max_examples=100, deadline=None)
@given(theta=st.floats(1e-3, math.pi - 1e-3))
def test_cos_alpha_matches_trace(theta):
    S = C.wedge_cycle_matrix(theta)
    assert C.wedge_cos_alpha(theta) == pytest.approx(0.5 * (np.trace(S) - 1.0), abs=1e-12)
    assert C.rotation_angle(S) == pytest.approx(C.wedge_alpha(theta), abs=1e-9)


@pytest.mark.parametrize("alpha", [math.pi, math.pi / 2, 4 * math.pi / 5, 2 * math.pi / 3, 1.0])
def test_theta_for_alpha_inverts(alpha):
    roots = C.theta_for_alpha(alpha)
    assert roots
    for th in roots:
        assert C.wedge_alpha(th) == pytest.approx(alpha, abs=1e-10)


def test_theta_anchor_values():
    assert C.theta_for_alpha(math.pi) == [pytest.approx(math.pi / 3)]
    assert min(C.theta_for_alpha(math.pi / 2), key=lambda t: abs(t - 2.16598)) == pytest.approx(
        2.16598, abs=1e-5)
    assert min(C.theta_for_alpha(4 * math.pi / 5), key=lambda t: abs(t - 0.2709)) == pytest.approx(
        0.2709, abs=1e-3)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 7, 12])
def test_rotation_order(n):
    assert C.rotation_order(2 * math.pi / n) == n
    assert C.rotation_order(2 * math.pi * 3 / 7) == 7


def test_rotation_order_irrational():
    assert C.rotation_order(math.acos(-7.0 / 9.0)) is None


def test_wedge_angle_validation():
    for bad in (0.0, -1.0, math.pi, 4.0, math.nan):
        with pytest.raises(ValueError):
            C.wedge_cycle_matrix(bad)
