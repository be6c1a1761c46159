"""Policies, trajectory simulation and Monte Carlo evaluation."""

from .monte_carlo import McSummary, monte_carlo
from .policy import (
    NAMED_PROTOCOLS,
    FixedProtocol,
    OptimalPolicy,
    Policy,
    ProtocolSpec,
    make_fixed_protocol,
    optimal_action,
)
from .trajectory import (
    EventKind,
    TrajectoryRecord,
    discounted_cost,
    simulate_trajectory,
    strategy_shape,
)

__all__ = [
    "NAMED_PROTOCOLS",
    "EventKind",
    "FixedProtocol",
    "McSummary",
    "OptimalPolicy",
    "Policy",
    "ProtocolSpec",
    "TrajectoryRecord",
    "discounted_cost",
    "make_fixed_protocol",
    "monte_carlo",
    "optimal_action",
    "simulate_trajectory",
    "strategy_shape",
]
