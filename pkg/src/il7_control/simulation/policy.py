"""Injection policies: the optimal policy of a value table and fixed protocols."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Any

from pydantic import BaseModel, Field, ValidationError, field_validator

from ..config import ModelConfig, PatientParams
from ..exceptions import InvalidArgumentError
from ..model.pdmp import ACTION_BOUNDARIES, classify_boundary
from ..model.state import BoundaryId, State
from ..solver.operators import op_T
from ..solver.table import ValueTable


class Policy(ABC):
    """Chooses a dose at each boundary point where one must be chosen."""

    name: str = "policy"

    @abstractmethod
    def decide(self, z: State, boundary: BoundaryId, cycle: int) -> float:
        """Dose at z; cycle is the 1-based index of the current cycle."""


def optimal_action(
    table: ValueTable, z: State, params: PatientParams, config: ModelConfig
) -> float:
    """argmin over admissible doses of C^i(z, d) + W~(post-jump state)."""
    boundary = classify_boundary(z, config)
    if boundary not in ACTION_BOUNDARIES:
        raise InvalidArgumentError(f"no action exists on {boundary.value}")
    _, dose = op_T(table, z, params, config, boundary)
    return dose


class OptimalPolicy(Policy):
    name = "Optimal"

    def __init__(self, table: ValueTable, params: PatientParams, config: ModelConfig) -> None:
        self.table = table
        self.params = params
        self.config = config

    def decide(self, z: State, boundary: BoundaryId, cycle: int) -> float:
        if boundary not in ACTION_BOUNDARIES:
            raise InvalidArgumentError(f"no action exists on {boundary.value}")
        _, dose = op_T(self.table, z, self.params, self.config, boundary)
        return dose


class ProtocolSpec(BaseModel):
    """A fixed protocol: dose lists for the first cycles, then one repeated cycle."""

    name: str = "custom"
    cycles: list[tuple[float, ...]] = Field(default_factory=list)
    repeat: tuple[float, ...]

    @field_validator("repeat")
    @classmethod
    def _non_empty(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value:
            raise ValueError("repeat cycle needs at least one dose")
        return value


NAMED_PROTOCOLS: dict[str, ProtocolSpec] = {
    "2inj-d20": ProtocolSpec(name="2inj-d20", repeat=(20.0, 20.0)),
    "2inj-d10": ProtocolSpec(name="2inj-d10", repeat=(10.0, 10.0)),
    "1inj-d20": ProtocolSpec(name="1inj-d20", repeat=(20.0,)),
    "2then1-d20": ProtocolSpec(name="2then1-d20", cycles=[(20.0, 20.0)], repeat=(20.0,)),
}


class FixedProtocol(Policy):
    """Deterministic in (boundary, cycle index, injection index)."""

    def __init__(self, spec: ProtocolSpec) -> None:
        self.spec = spec
        self.name = spec.name

    def cycle_doses(self, cycle: int) -> tuple[float, ...]:
        if cycle <= len(self.spec.cycles):
            return tuple(self.spec.cycles[cycle - 1])
        return tuple(self.spec.repeat)

    def decide(self, z: State, boundary: BoundaryId, cycle: int) -> float:
        doses = self.cycle_doses(cycle)
        if boundary in (BoundaryId.XI1, BoundaryId.XI4):
            return doses[0]
        if boundary is BoundaryId.XI3:
            # z.n injections given so far, the next one is z.n + 1
            return doses[z.n] if z.n < len(doses) else 0.0
        raise InvalidArgumentError(f"no action exists on {boundary.value}")


def make_fixed_protocol(
    spec: str | dict[str, Any] | ProtocolSpec, config: ModelConfig
) -> FixedProtocol:
    """Build a fixed protocol from a name, a {cycles, repeat} mapping or a spec."""
    if isinstance(spec, str):
        if spec not in NAMED_PROTOCOLS:
            raise InvalidArgumentError(
                f"Unknown protocol {spec!r}; valid names: {', '.join(NAMED_PROTOCOLS)}"
            )
        spec = NAMED_PROTOCOLS[spec]
    elif isinstance(spec, dict):
        try:
            spec = ProtocolSpec(**spec)
        except ValidationError as e:
            raise InvalidArgumentError(f"Invalid protocol description: {e}") from e

    for doses in [*spec.cycles, spec.repeat]:
        if not 1 <= len(doses) <= config.n_inj:
            raise InvalidArgumentError(
                f"cycle {list(doses)} must have between 1 and {config.n_inj} doses"
            )
        for dose in doses:
            if not any(math.isclose(dose, d) for d in config.doses):
                raise InvalidArgumentError(
                    f"protocol dose {dose} is not one of {list(config.doses)}"
                )
        if doses[0] <= 0:
            raise InvalidArgumentError("the first injection of a cycle must be positive")
    return FixedProtocol(spec)
