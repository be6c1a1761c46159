"""PDMP model: CD4 dynamics, boundaries, kernel and costs."""

from .dynamics import LinearFlow, equilibrium, flow, proliferation_rate
from .pdmp import (
    admissible_actions,
    apply_kernel,
    classify_boundary,
    gradual_cost,
    impulse_cost,
    time_to_boundary,
)
from .state import BoundaryId, State, delta_state, initial_state

__all__ = [
    "BoundaryId",
    "LinearFlow",
    "State",
    "admissible_actions",
    "apply_kernel",
    "classify_boundary",
    "delta_state",
    "equilibrium",
    "flow",
    "gradual_cost",
    "impulse_cost",
    "initial_state",
    "proliferation_rate",
    "time_to_boundary",
]
