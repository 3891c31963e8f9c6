"""No-slip billiards: collision maps, exact tables, orbits and analysis."""
from __future__ import annotations

from .collision import (
    collision_matrix_T,
    frame_rotation,
    no_slip_reflect,
    reflect_matrix,
    specular_reflect,
    strip_cycle_matrix,
    theta_for_alpha,
    wedge_alpha,
    wedge_axis,
    wedge_cycle_matrix,
)
from .flow import Orbit, PhasePoint, Termination, detect_period, displacement_stats, iterate, step
from .tables import Table, build, first_hit

__version__ = "0.1.0"

__all__ = [
    "Orbit", "PhasePoint", "Table", "Termination", "build", "collision_matrix_T",
    "detect_period", "displacement_stats", "first_hit", "frame_rotation", "iterate",
    "no_slip_reflect", "reflect_matrix", "specular_reflect", "step", "strip_cycle_matrix",
    "theta_for_alpha", "wedge_alpha", "wedge_axis", "wedge_cycle_matrix",
]
