"""Controlled PDMP trajectories with random injection-effect lengths."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from ..config import ModelConfig, PatientParams
from ..exceptions import ProtocolViolationError, TableError
from ..model.dynamics import flow
from ..model.pdmp import (
    admissible_actions,
    apply_kernel,
    impulse_cost,
    time_to_boundary,
)
from ..model.state import BoundaryId, State, initial_state
from .policy import Policy

# Jump rate used for the eta -> 0 limit
NEAR_ZERO_ETA = 1e-12
_TIME_EPS = 1e-9

TRAJECTORY_COLUMNS = ["theta_day", "p", "r", "gamma", "n", "sigma", "event"]


class EventKind(str, Enum):
    INJECTION = "injection"
    SPONTANEOUS_JUMP = "spontaneous_jump"
    BOUNDARY_HIT = "boundary_hit"
    HORIZON = "horizon"


@dataclass(frozen=True)
class TrajectoryEvent:
    theta: float
    kind: EventKind
    state: State  # state just before the jump
    boundary: BoundaryId | None = None
    dose: float | None = None
    cost: float = 0.0

    def label(self) -> str:
        if self.kind is EventKind.INJECTION:
            return f"injection({self.dose:g})"
        if self.kind is EventKind.BOUNDARY_HIT and self.boundary is not None:
            suffix = f"({self.dose:g})" if self.dose is not None else ""
            return f"{self.boundary.value}{suffix}"
        return self.kind.value


@dataclass
class TrajectoryRecord:
    """One simulated path, sampled every dt days on [0, T_h]."""

    events: list[TrajectoryEvent]
    theta: np.ndarray
    p: np.ndarray
    r: np.ndarray
    gamma: np.ndarray
    n: np.ndarray
    sigma: np.ndarray
    under: np.ndarray  # gradual cost indicator at each sample
    gradual_weight: float
    effect_durations: list[float] = field(default_factory=list)
    discounted_cost: float = 0.0
    injections: int = 0
    days_under_threshold: float = 0.0
    cd4_mean: float = 0.0

    @property
    def impulses(self) -> list[tuple[float, float]]:
        """(theta, impulse cost) of every charged boundary action."""
        return [(e.theta, e.cost) for e in self.events if e.cost > 0]

    def to_frame(self) -> pd.DataFrame:
        """Samples with the events that happened since the previous sample."""
        labels = [[] for _ in range(len(self.theta))]
        for event in self.events:
            k = int(np.searchsorted(self.theta, event.theta - _TIME_EPS, side="left"))
            labels[min(k, len(labels) - 1)].append(event.label())
        return pd.DataFrame(
            {
                "theta_day": self.theta,
                "p": self.p,
                "r": self.r,
                "gamma": self.gamma,
                "n": self.n,
                "sigma": self.sigma,
                "event": [";".join(items) for items in labels],
            },
            columns=TRAJECTORY_COLUMNS,
        )


def discounted_cost(traj: TrajectoryRecord, alpha: float) -> float:
    """sum_i e^{-alpha theta_i} C^i + integral of e^{-alpha theta} C^g (trapezoid on samples)."""
    impulses = sum(math.exp(-alpha * theta) * cost for theta, cost in traj.impulses)
    if len(traj.theta) < 2:
        return impulses
    running = np.exp(-alpha * traj.theta) * traj.under * traj.gradual_weight
    return impulses + float(trapezoid(running, traj.theta))


def sample_effect_duration(rng: np.random.Generator, eta: float, spacing: float = 7.0) -> float:
    """Effect length min(Exp(eta), spacing): one draw per injection."""
    if eta <= 0:
        return float(spacing)
    return float(min(rng.exponential(1.0 / eta), spacing))


class _PathSampler:
    """Fills the dt-grid samples as the trajectory moves forward."""

    def __init__(self, config: ModelConfig) -> None:
        self.dt = config.dt
        count = config.horizon * config.steps_per_day + 1
        self.theta = np.arange(count) * config.dt
        self.p = np.zeros(count)
        self.r = np.zeros(count)
        self.gamma = np.zeros(count, dtype=np.int64)
        self.n = np.zeros(count, dtype=np.int64)
        self.sigma = np.zeros(count)
        self.next_index = 0

    def record(self, x: State, duration: float, params: PatientParams, config: ModelConfig) -> None:
        end = x.theta + duration + _TIME_EPS
        while self.next_index < len(self.theta) and self.theta[self.next_index] <= end:
            k = self.next_index
            offset = max(0.0, self.theta[k] - x.theta)
            point = flow(x, offset, params, config)
            self.p[k], self.r[k] = point.p, point.r
            self.gamma[k], self.n[k], self.sigma[k] = point.gamma, point.n, point.sigma
            self.next_index += 1


def simulate_trajectory(
    policy: Policy,
    params: PatientParams,
    config: ModelConfig,
    rng_seed: int | np.random.Generator = 0,
) -> TrajectoryRecord:
    """Simulate the controlled process from x0 until it is absorbed at the horizon."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    spacing = config.injection_spacing
    sampler = _PathSampler(config)
    events: list[TrajectoryEvent] = []
    durations: list[float] = []
    injections = 0
    cycle = 0
    effect_end: float | None = None  # theta at which the current effect stops early

    x = initial_state(params)
    while not x.is_delta:
        t_star, boundary = time_to_boundary(x, params, config)
        early = (
            effect_end is not None
            and x.gamma > 1
            and effect_end - x.theta < t_star - _TIME_EPS
        )
        duration = max(0.0, effect_end - x.theta) if early else t_star
        sampler.record(x, duration, params, config)
        x = flow(x, duration, params, config)

        if early:
            events.append(TrajectoryEvent(x.theta, EventKind.SPONTANEOUS_JUMP, x))
            x = apply_kernel(x, None, params, config, BoundaryId.INTERIOR)
            effect_end = None
            continue

        if boundary is BoundaryId.XI2:
            events.append(TrajectoryEvent(x.theta, EventKind.HORIZON, x, boundary))
            x = apply_kernel(x, None, params, config, boundary)
            continue
        if boundary is BoundaryId.XI5:
            events.append(TrajectoryEvent(x.theta, EventKind.BOUNDARY_HIT, x, boundary))
            x = apply_kernel(x, None, params, config, boundary)
            effect_end = None
            continue

        if boundary in (BoundaryId.XI1, BoundaryId.XI4):
            cycle += 1
        dose = policy.decide(x, boundary, cycle)
        allowed = admissible_actions(x, config, boundary)
        if dose is None or not any(math.isclose(dose, d, abs_tol=1e-12) for d in allowed):
            raise ProtocolViolationError(
                f"{policy.name} chose dose {dose} on {boundary.value} at theta={x.theta:g}; "
                f"admissible: {list(allowed)}"
            )
        cost = impulse_cost(x, dose, config, boundary)
        kind = EventKind.INJECTION if dose > 0 else EventKind.BOUNDARY_HIT
        events.append(TrajectoryEvent(x.theta, kind, x, boundary, dose, cost))
        x = apply_kernel(x, dose, params, config, boundary)
        effect_end = None
        if dose > 0:
            injections += 1
            length = sample_effect_duration(rng, config.eta, spacing)
            durations.append(length)
            effect_end = x.theta + length if length < spacing else None

    under = ((sampler.p + sampler.r) <= config.threshold) & (sampler.theta >= 1 - _TIME_EPS)
    record = TrajectoryRecord(
        events=events,
        theta=sampler.theta,
        p=sampler.p,
        r=sampler.r,
        gamma=sampler.gamma,
        n=sampler.n,
        sigma=sampler.sigma,
        under=under,
        gradual_weight=config.gradual_weight,
        effect_durations=durations,
        injections=injections,
    )
    record.discounted_cost = discounted_cost(record, config.alpha)
    study = sampler.theta >= 1 - _TIME_EPS
    record.days_under_threshold = float(trapezoid(under[study].astype(float), sampler.theta[study]))
    whole_days = np.arange(1, config.horizon + 1) * config.steps_per_day
    record.cd4_mean = float(np.mean(sampler.p[whole_days] + sampler.r[whole_days]))
    return record


def strategy_shape(
    policy: Policy, params: PatientParams, config: ModelConfig
) -> list[tuple[float, ...]]:
    """Doses per cycle along the deterministic path (eta -> 0)."""
    deterministic = config.model_copy(update={"eta": NEAR_ZERO_ETA})
    record = simulate_trajectory(policy, params, deterministic, rng_seed=0)
    cycles: list[list[float]] = []
    for event in record.events:
        if event.kind is not EventKind.INJECTION:
            continue
        if event.boundary in (BoundaryId.XI1, BoundaryId.XI4):
            cycles.append([event.dose])
        elif cycles:
            cycles[-1].append(event.dose)
    return [tuple(c) for c in cycles]


def describe_shape(shape: list[tuple[float, ...]]) -> str:
    """Run-length text for a strategy shape, e.g. '2x[20,20] 3x[20]'."""
    parts: list[str] = []
    i = 0
    while i < len(shape):
        j = i
        while j < len(shape) and shape[j] == shape[i]:
            j += 1
        doses = ",".join(f"{d:g}" for d in shape[i])
        parts.append(f"{j - i}x[{doses}]")
        i = j
    return " ".join(parts) if parts else "no injections"


def export_trajectories(records: list[TrajectoryRecord], path: str | Path) -> Path:
    """Write sampled paths as tab-separated text, one block per replicate."""
    path = Path(path).expanduser()
    frames = []
    for index, record in enumerate(records):
        frame = record.to_frame()
        frame.insert(0, "replicate", index)
        frames.append(frame)
    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(
        columns=["replicate", *TRAJECTORY_COLUMNS]
    )
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(path, sep="\t", index=False)
    except OSError as e:
        raise TableError(f"Cannot write trajectories to {path}: {e}") from e
    return path
