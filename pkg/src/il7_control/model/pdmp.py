"""Boundaries, actions, transition kernel and costs of the controlled PDMP."""

from __future__ import annotations

import math

from ..config import ModelConfig, PatientParams
from ..exceptions import InvalidArgumentError
from .dynamics import flow, linear_flow
from .state import BoundaryId, State, delta_state

# Tolerance for "is this a whole day" checks on float clocks
_CLOCK_EPS = 1e-9

# Lower value wins when two boundaries are hit at the same time
BOUNDARY_PRIORITY = {
    BoundaryId.XI2: 0,
    BoundaryId.XI3: 1,
    BoundaryId.XI5: 2,
    BoundaryId.XI4: 3,
    BoundaryId.XI1: 4,
}

ACTION_BOUNDARIES = frozenset({BoundaryId.XI1, BoundaryId.XI3, BoundaryId.XI4})


def _near(a: float, b: float) -> bool:
    return abs(a - b) <= _CLOCK_EPS


def _is_whole(value: float) -> bool:
    return _near(value, round(value))


def is_pre_study(x: State) -> bool:
    """True on the pre-study day, where sigma == theta <= 1."""
    return not x.is_delta and _near(x.sigma, x.theta) and x.theta <= 1 + _CLOCK_EPS


def classify_boundary(x: State, config: ModelConfig) -> BoundaryId:
    """Which part of the active boundary x lies on, by priority."""
    if x.is_delta:
        return BoundaryId.INTERIOR
    spacing = config.injection_spacing
    if x.theta >= config.horizon - _CLOCK_EPS:
        return BoundaryId.XI2
    if x.n < config.n_inj and x.sigma >= spacing - _CLOCK_EPS:
        return BoundaryId.XI3
    if x.gamma > 1 and x.n == config.n_inj and x.sigma >= spacing - _CLOCK_EPS:
        return BoundaryId.XI5
    if (
        x.gamma == 1
        and x.n == config.n_inj
        and x.sigma >= config.sigma_min - _CLOCK_EPS
        and _is_whole(x.theta)
        and x.cd4 <= config.threshold
    ):
        return BoundaryId.XI4
    if _near(x.theta, 1) and _near(x.sigma, x.theta):
        return BoundaryId.XI1
    return BoundaryId.INTERIOR


def time_to_boundary(
    x: State, params: PatientParams, config: ModelConfig
) -> tuple[float, BoundaryId]:
    """t*(x): first whole-day time at which the flow from x reaches the boundary."""
    if x.is_delta:
        raise InvalidArgumentError("the absorbing state has no boundary time")
    current = classify_boundary(x, config)
    if current is not BoundaryId.INTERIOR:
        return 0.0, current

    spacing = config.injection_spacing
    candidates: list[tuple[float, BoundaryId]] = [
        (config.horizon - x.theta, BoundaryId.XI2)
    ]
    if x.n < config.n_inj:
        candidates.append((spacing - x.sigma, BoundaryId.XI3))
    if x.gamma > 1 and x.n == config.n_inj:
        candidates.append((spacing - x.sigma, BoundaryId.XI5))
    if is_pre_study(x):
        candidates.append((1.0 - x.theta, BoundaryId.XI1))
    fixed_t, fixed_b = min(
        candidates, key=lambda c: (round(c[0], 9), BOUNDARY_PRIORITY[c[1]])
    )

    if x.gamma == 1 and x.n == config.n_inj:
        t4 = _first_day_under_threshold(x, fixed_t, params, config)
        if t4 is not None:
            return t4, BoundaryId.XI4
    return fixed_t, fixed_b


def _first_day_under_threshold(
    x: State, limit: float, params: PatientParams, config: ModelConfig
) -> float | None:
    """Earliest whole-day t < limit with sigma >= sigma_min and p + r <= threshold."""
    offset = math.ceil(x.theta - _CLOCK_EPS) - x.theta
    wait = max(0.0, config.sigma_min - x.sigma - offset)
    t = offset + math.ceil(wait - _CLOCK_EPS)
    if t >= limit - _CLOCK_EPS:
        return None
    state = flow(x, t, params, config)
    day = linear_flow(x.gamma, x.n, params, config)
    p, r = state.p, state.r
    while t < limit - _CLOCK_EPS:
        if p + r <= config.threshold:
            return t
        p, r = day(p, r, 1.0)
        t += 1.0
    return None


def admissible_actions(
    x: State, config: ModelConfig, boundary: BoundaryId | None = None
) -> tuple[float, ...]:
    """A(x): doses the controller may choose at boundary point x."""
    boundary = boundary or classify_boundary(x, config)
    if boundary is BoundaryId.INTERIOR:
        raise InvalidArgumentError("actions are only defined on the active boundary")
    if boundary in (BoundaryId.XI1, BoundaryId.XI4):
        return config.doses[1:]
    if boundary is BoundaryId.XI3:
        return config.doses
    return ()


def gamma_of_dose(dose: float, config: ModelConfig) -> int:
    """gamma(d_k) = k + 1, so gamma(0) = 1."""
    for k, d in enumerate(config.doses):
        if math.isclose(d, dose, rel_tol=1e-12, abs_tol=1e-12):
            return k + 1
    raise InvalidArgumentError(f"dose {dose} is not one of {list(config.doses)}")


def apply_kernel(
    x: State,
    dose: float | None,
    params: PatientParams,
    config: ModelConfig,
    boundary: BoundaryId | None = None,
) -> State:
    """Q: the post-jump state from x under the given dose.

    An interior x stands for a spontaneous jump (the injection effect
    stops early) and takes no dose.
    """
    boundary = boundary or classify_boundary(x, config)
    if boundary in ACTION_BOUNDARIES:
        if dose is None:
            raise InvalidArgumentError(f"a dose is required on {boundary.value}")
        allowed = admissible_actions(x, config, boundary)
        if not any(math.isclose(dose, d, rel_tol=1e-12, abs_tol=1e-12) for d in allowed):
            raise InvalidArgumentError(
                f"dose {dose} not admissible on {boundary.value}; allowed {list(allowed)}"
            )
    elif dose is not None:
        raise InvalidArgumentError(f"no dose can be chosen on {boundary.value}")

    if boundary is BoundaryId.XI1:
        return State(gamma_of_dose(dose, config), 1, 0, 1, params.p0, params.r0)
    if boundary is BoundaryId.XI2:
        return delta_state(config.horizon)
    if boundary is BoundaryId.XI3:
        return State(gamma_of_dose(dose, config), x.n + 1, 0, x.theta, x.p, x.r)
    if boundary is BoundaryId.XI4:
        return State(gamma_of_dose(dose, config), 1, 0, x.theta, x.p, x.r)
    return x.gamma_reset()


def gradual_cost(x: State, config: ModelConfig) -> float:
    """C^g(x): cost rate per day spent at or under the CD4 threshold."""
    if x.is_delta or x.theta < 1 - _CLOCK_EPS:
        return 0.0
    return config.gradual_weight if x.cd4 <= config.threshold else 0.0


def impulse_cost(
    x: State,
    dose: float | None,
    config: ModelConfig,
    boundary: BoundaryId | None = None,
) -> float:
    """C^i(x, d): one unit per injection given."""
    boundary = boundary or classify_boundary(x, config)
    if boundary in (BoundaryId.XI1, BoundaryId.XI4):
        return config.injection_weight
    if boundary is BoundaryId.XI3 and dose:
        return config.injection_weight
    return 0.0
