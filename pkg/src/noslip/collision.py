"""Collision maps for a uniform disk on a planar table.

Velocities are 3-vectors ``(v0, v1, v2)`` in energy-normalized units: ``v0``
is the rotational velocity (rotation angle scaled by ``R / sqrt(2)``), and
``(v1, v2)`` is the planar velocity of the disk center. With this scaling
kinetic energy is half the Euclidean norm squared, so every collision map
is orthogonal.

Orientation convention
----------------------
At a boundary point with inward unit normal ``nu`` the local frame is
``(rotational, tangent, normal)`` with ``tangent = (nu[1], -nu[0])``, the
normal turned clockwise by a quarter turn. In that frame the no-slip map is
the fixed matrix returned by :func:`collision_matrix_T`. The whole package
uses this convention.
"""
from __future__ import annotations

import math

import numpy as np

SQRT2 = math.sqrt(2.0)
TWO_PI = 2.0 * math.pi

# uniform-disk coefficients
_A = 1.0 / 3.0
_B = 2.0 * SQRT2 / 3.0

_UNIT_TOL = 1e-12


def _as_velocity(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"velocity must have shape (3,), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("velocity components must be finite")
    return v


def _as_normal(nu) -> np.ndarray:
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (2,):
        raise ValueError(f"normal must have shape (2,), got {nu.shape}")
    if abs(nu[0] * nu[0] + nu[1] * nu[1] - 1.0) > _UNIT_TOL:
        raise ValueError(f"normal {nu.tolist()} is not a unit vector")
    return nu


def tangent(nu) -> np.ndarray:
    """Forward tangent paired with the inward normal ``nu``."""
    return np.array([nu[1], -nu[0]])


def _check_incoming(v: np.ndarray, nu: np.ndarray) -> None:
    if v[1] * nu[0] + v[2] * nu[1] >= 0.0:
        raise ValueError("velocity is not incoming (planar part has v.nu >= 0)")


def no_slip_reflect(v, nu) -> np.ndarray:
    """Post-collision velocity of the no-slip collision at inward normal ``nu``.

    Evaluated directly from the tangential/normal decomposition; see
    :func:`reflect_matrix` for the matrix route.
    """
    v = _as_velocity(v)
    nu = _as_normal(nu)
    _check_incoming(v, nu)
    t = tangent(nu)
    planar = v[1:]
    vt = planar @ t
    vn = planar @ nu
    w0 = -_A * v[0] + _B * vt
    wt = _B * v[0] + _A * vt
    out = wt * t - vn * nu
    return np.array([w0, out[0], out[1]])


def specular_reflect(v, nu) -> np.ndarray:
    """Standard billiard reflection; the rotational component is untouched."""
    v = _as_velocity(v)
    nu = _as_normal(nu)
    _check_incoming(v, nu)
    planar = v[1:]
    out = planar - 2.0 * (planar @ nu) * nu
    return np.array([v[0], out[0], out[1]])


def collision_matrix_T() -> np.ndarray:
    """No-slip collision matrix in the local ``(rotational, tangent, normal)`` frame."""
    return np.array([
        [-_A, _B, 0.0],
        [_B, _A, 0.0],
        [0.0, 0.0, -1.0],
    ])


def frame_rotation(angle: float) -> np.ndarray:
    """Counterclockwise rotation of the planar components; ``v0`` is left alone."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([
        [1.0, 0.0, 0.0],
        [0.0, c, -s],
        [0.0, s, c],
    ])


def normal_angle(nu) -> float:
    """Angle of the local tangent, i.e. the frame rotation taking (0, 1) to ``nu``."""
    return math.atan2(nu[1], nu[0]) - 0.5 * math.pi


def reflect_matrix(nu) -> np.ndarray:
    """Global-frame no-slip matrix at inward normal ``nu`` (T conjugated by the frame)."""
    nu = _as_normal(nu)
    phi = normal_angle(nu)
    return frame_rotation(phi) @ collision_matrix_T() @ frame_rotation(-phi)


def specular_matrix(nu) -> np.ndarray:
    nu = _as_normal(nu)
    phi = normal_angle(nu)
    local = np.diag([1.0, 1.0, -1.0])
    return frame_rotation(phi) @ local @ frame_rotation(-phi)


def strip_cycle_matrix() -> np.ndarray:
    """Two-collision velocity map of the strip, lower wall first.

    Equals ``(F T)^2`` with ``F = frame_rotation(pi)``; the entries are
    written out so that they are exact up to rounding of ``sqrt(2)``.
    """
    return np.array([
        [-7.0 / 9.0, -4.0 * SQRT2 / 9.0, 0.0],
        [4.0 * SQRT2 / 9.0, -7.0 / 9.0, 0.0],
        [0.0, 0.0, 1.0],
    ])


def rotation_angle(m) -> float:
    """Principal rotation angle of a proper rotation, from its trace."""
    c = 0.5 * (float(np.trace(m)) - 1.0)
    return math.acos(min(1.0, max(-1.0, c)))


def _check_wedge_angle(theta: float) -> float:
    theta = float(theta)
    if not (0.0 < theta < math.pi):
        raise ValueError(f"wedge angle must lie in (0, pi), got {theta!r}")
    return theta


def wedge_normals(theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Inward normals ``(right, left)`` of the wedge with bisector along +x2.

    The right wall runs along ``(sin(theta/2), cos(theta/2))`` from the vertex.
    """
    h = 0.5 * _check_wedge_angle(theta)
    s, c = math.sin(h), math.cos(h)
    return np.array([-c, s]), np.array([c, s])


def wedge_cycle_matrix(theta: float) -> np.ndarray:
    """Two-collision velocity map of the open wedge in the global frame.

    The velocity first hits the right wall, then the left one. The result
    is a rotation whose fixed axis is :func:`wedge_axis`.
    """
    right, left = wedge_normals(theta)
    return reflect_matrix(left) @ reflect_matrix(right)


def wedge_half_map(theta: float) -> np.ndarray:
    """Right-wall collision followed by the mirror ``x1 -> -x1``.

    Its square is :func:`wedge_cycle_matrix`; it maps velocities heading to
    the right wall onto velocities heading to the right wall.
    """
    right, _ = wedge_normals(theta)
    mirror = np.diag([-1.0, -1.0, 1.0])
    return mirror @ reflect_matrix(right)


def wedge_axis(theta: float) -> np.ndarray:
    """Unit velocity of the period-two orbit of the wedge (heading to the right wall)."""
    h = 0.5 * _check_wedge_angle(theta)
    v = np.array([-SQRT2 * math.sin(h), 1.0, 0.0])
    return v / np.linalg.norm(v)


def _alpha_from_u(u: float) -> float:
    # 1 + cos(alpha) = (2/9)(4u - 3)^2 and 1 - cos(alpha) = (16/9) u (3 - 2u),
    # so the half-angle form avoids acos cancellation near alpha = pi.
    return 2.0 * math.atan2(math.sqrt(max(0.0, 8.0 * u * (3.0 - 2.0 * u))), abs(4.0 * u - 3.0))


def wedge_cos_alpha(theta: float) -> float:
    c2 = math.cos(0.5 * _check_wedge_angle(theta)) ** 2
    return 32.0 / 9.0 * c2 * c2 - 16.0 / 3.0 * c2 + 1.0


def wedge_alpha(theta: float) -> float:
    """Rotation angle in [0, pi] of :func:`wedge_cycle_matrix`."""
    theta = _check_wedge_angle(theta)
    u = 0.5 * (1.0 + math.cos(theta))
    return _alpha_from_u(u)


def theta_for_alpha(alpha: float) -> list[float]:
    """All wedge angles in (0, pi) whose two-collision rotation angle is ``alpha``.

    With ``u = cos(theta/2)**2`` the relation is quadratic in ``u`` and
    factors as ``cos(alpha/2) = |4u - 3| / 3``.
    """
    alpha = float(alpha)
    if not (0.0 < alpha <= math.pi):
        raise ValueError(f"alpha must lie in (0, pi], got {alpha!r}")
    h = math.cos(0.5 * alpha)
    if abs(h) < 1e-12:
        # alpha = pi: the two roots merge at u = 3/4
        return [math.pi / 3.0]
    roots = []
    for u in (0.75 * (1.0 - h), 0.75 * (1.0 + h)):
        if 0.0 < u < 1.0:
            roots.append(2.0 * math.acos(math.sqrt(u)))
    return sorted(roots)


def rotation_order(alpha: float, n_max: int = 10_000, tol: float = 1e-9) -> int | None:
    """Smallest ``n <= n_max`` with ``n * alpha`` within ``tol`` of a multiple of 2 pi."""
    for n in range(1, n_max + 1):
        x = n * alpha
        if abs(x - TWO_PI * round(x / TWO_PI)) < tol:
            return n
    return None
