"""PDMP state vector and boundary labels."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from ..config import PatientParams


class BoundaryId(str, Enum):
    XI1 = "Xi1"  # end of the pre-study day, first injection
    XI2 = "Xi2"  # study horizon reached
    XI3 = "Xi3"  # next injection of the ongoing cycle is due
    XI4 = "Xi4"  # CD4 at or below threshold, new cycle allowed
    XI5 = "Xi5"  # last injection's effect ends after its full length
    INTERIOR = "Interior"


@dataclass(frozen=True)
class State:
    """A point x = (gamma, n, sigma, theta, p, r) or the absorbing state.

    sigma and theta are in days. On the solver grid they are whole
    numbers; a simulated path may stop at a fractional time when an
    injection effect ends spontaneously.
    """

    gamma: int  # dose index + 1, 1 = no active effect
    n: int  # injections given in the ongoing cycle
    sigma: float  # days since last injection
    theta: float  # days since study start
    p: float  # proliferating CD4, cells/uL
    r: float  # resting CD4, cells/uL
    is_delta: bool = False

    @property
    def cd4(self) -> float:
        return self.p + self.r

    def with_counts(self, p: float, r: float) -> State:
        return replace(self, p=float(p), r=float(r))

    def with_clock(self, sigma: float, theta: float) -> State:
        return replace(self, sigma=sigma, theta=theta)

    def gamma_reset(self) -> State:
        """The point reached when the injection effect stops."""
        return replace(self, gamma=1)


def delta_state(horizon: int) -> State:
    """Absorbing state Delta = (0, 0, 0, T_h, 0, 0)."""
    return State(gamma=0, n=0, sigma=0, theta=horizon, p=0.0, r=0.0, is_delta=True)


def initial_state(params: PatientParams) -> State:
    """x0 = (1, 1, 0, 0, p0, r0): the pre-study day before any injection."""
    return State(gamma=1, n=1, sigma=0, theta=0, p=params.p0, r=params.r0)
