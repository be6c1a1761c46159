"""CD4 compartment dynamics: proliferation rate, equilibrium and flow.

Between jumps the (P, R) pair follows the linear system

    dP/dt = pi R - (mu_P + rho) P
    dR/dt = lambda - (mu_R + pi) R + 2 rho P

whose coefficients only change when gamma or n change. The solution over
a duration t is an affine map (p, r) -> Phi(t) (p, r) + c(t), computed in
closed form from the eigendecomposition of the 2x2 matrix.
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from ..config import ModelConfig, PatientParams
from ..exceptions import InvalidArgumentError, NoEquilibriumError
from .state import State

logger = logging.getLogger("il7-control")

# Eigenvalues closer than this are treated as repeated
_EIGEN_GAP = 1e-10
_FALLBACK_MAX_STEP = 1e-2
# Simulated paths stop at random times; only the first maps are kept
_MAX_CACHED_MAPS = 4096


def proliferation_rate(
    gamma: int, n: int, params: PatientParams, config: ModelConfig
) -> float:
    """Proliferation rate pi (/day) while dose doses[gamma-1] acts as injection n."""
    if not 1 <= gamma <= config.n_gamma:
        raise InvalidArgumentError(f"gamma must be in 1..{config.n_gamma}, got {gamma}")
    if not 1 <= n <= config.n_inj:
        raise InvalidArgumentError(f"n must be in 1..{config.n_inj}, got {n}")
    if gamma == 1:
        return params.pi0
    if n > len(params.beta_pi):
        raise InvalidArgumentError(
            f"beta_pi has {len(params.beta_pi)} coefficients, injection {n} needs one"
        )
    effect = params.beta_pi[n - 1] * config.doses[gamma - 1] ** 0.25
    if config.effect_scale == "additive":
        return params.pi0 + effect
    return math.exp(math.log(params.pi0) + effect)


def equilibrium(params: PatientParams) -> tuple[float, float]:
    """Steady state (r, p) of the untreated system (pi = pi0)."""
    denom = params.mu_r + params.pi0 - 2 * params.rho * params.pi0 / (params.mu_p + params.rho)
    if denom <= 0:
        raise NoEquilibriumError(
            f"mu_R + pi0 - 2 rho pi0 / (mu_P + rho) = {denom:.6g} is not positive"
        )
    r = params.lambda_ / denom
    p = params.pi0 * r / (params.mu_p + params.rho)
    return r, p


def derivative(
    p: float, r: float, params: PatientParams, pi: float
) -> tuple[float, float]:
    """Right-hand side (dP/dt, dR/dt) at (p, r)."""
    dp = pi * r - (params.mu_p + params.rho) * p
    dr = params.lambda_ - (params.mu_r + pi) * r + 2 * params.rho * p
    return dp, dr


class LinearFlow:
    """Exact solution operator of the (P, R) system for fixed coefficients."""

    def __init__(
        self, lambda_: float, rho: float, pi: float, mu_r: float, mu_p: float
    ) -> None:
        self.matrix = np.array([[-(mu_p + rho), pi], [2 * rho, -(mu_r + pi)]])
        self.source = np.array([0.0, lambda_])
        eigvals, eigvecs = np.linalg.eig(self.matrix)
        self.closed_form = bool(
            np.all(np.isreal(eigvals)) and abs(eigvals[0] - eigvals[1]) > _EIGEN_GAP
        )
        if self.closed_form:
            self._eigvals = np.real(eigvals)
            self._eigvecs = np.real(eigvecs)
            self._eigvecs_inv = np.linalg.inv(self._eigvecs)
        else:
            logger.debug("Near-repeated eigenvalues %s, using numerical flow", eigvals)
        self._maps: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def affine_map(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(Phi, c) with (p, r)(t) = Phi @ (p, r)(0) + c."""
        cached = self._maps.get(t)
        if cached is not None:
            return cached
        if t == 0:
            result = (np.eye(2), np.zeros(2))
        elif self.closed_form:
            lam = self._eigvals
            growth = np.exp(lam * t)
            # (e^{lam t} - 1) / lam, with the lam -> 0 limit t
            with np.errstate(divide="ignore", invalid="ignore"):
                integral = np.where(lam != 0, np.expm1(lam * t) / lam, t)
            v, v_inv = self._eigvecs, self._eigvecs_inv
            phi = v @ np.diag(growth) @ v_inv
            offset = v @ (integral * (v_inv @ self.source))
            result = (phi, offset)
        else:
            result = self._numerical_map(t)
        if len(self._maps) < _MAX_CACHED_MAPS:
            self._maps[t] = result
        return result

    def _numerical_map(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        def rhs(_s: float, y: np.ndarray) -> np.ndarray:
            homogeneous = y[:6].reshape(3, 2) @ self.matrix.T
            homogeneous[2] += self.source
            return homogeneous.ravel()

        # Columns e_p and e_r give Phi, the zero start gives c
        y0 = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        sol = solve_ivp(
            rhs, (0.0, t), y0, method="RK45",
            max_step=_FALLBACK_MAX_STEP, rtol=1e-11, atol=1e-12,
        )
        end = sol.y[:, -1].reshape(3, 2)
        phi = np.column_stack([end[0], end[1]])
        return phi, end[2].copy()

    def __call__(self, p, r, t: float):
        """Advance (p, r) by t days; p and r may be scalars or arrays."""
        phi, c = self.affine_map(t)
        p_new = phi[0, 0] * p + phi[0, 1] * r + c[0]
        r_new = phi[1, 0] * p + phi[1, 1] * r + c[1]
        return p_new, r_new


@lru_cache(maxsize=256)
def _cached_flow(
    lambda_: float, rho: float, pi: float, mu_r: float, mu_p: float
) -> LinearFlow:
    return LinearFlow(lambda_, rho, pi, mu_r, mu_p)


def linear_flow(
    gamma: int, n: int, params: PatientParams, config: ModelConfig
) -> LinearFlow:
    """The (P, R) solution operator for block (gamma, n)."""
    pi = proliferation_rate(gamma, n, params, config)
    return _cached_flow(params.lambda_, params.rho, pi, params.mu_r, params.mu_p)


def flow(x: State, t: float, params: PatientParams, config: ModelConfig) -> State:
    """phi(x, t): deterministic motion of x for t days without jumps.

    Counts stay frozen while theta <= 1 (the pre-study day).
    """
    if t < 0:
        raise InvalidArgumentError(f"flow duration must be non-negative, got {t}")
    if x.is_delta or t == 0:
        return x
    frozen = min(t, max(0.0, 1.0 - x.theta))
    moving = t - frozen
    p, r = x.p, x.r
    if moving > 0:
        p, r = linear_flow(x.gamma, x.n, params, config)(p, r, moving)
    return State(
        gamma=x.gamma,
        n=x.n,
        sigma=x.sigma + t,
        theta=x.theta + t,
        p=float(p),
        r=float(r),
    )
