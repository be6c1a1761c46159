"""Tests for proliferation rate, equilibrium and the closed-form flow."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from il7_control.config import PatientParams
from il7_control.exceptions import InvalidArgumentError, NoEquilibriumError
from il7_control.model.dynamics import (
    LinearFlow,
    derivative,
    equilibrium,
    flow,
    linear_flow,
    proliferation_rate,
)
from il7_control.model.state import State, delta_state, initial_state

from .conftest import PATIENT_A, make_model


def _oracle(params: PatientParams, pi: float, p: float, r: float, t: float) -> np.ndarray:
    sol = solve_ivp(
        lambda _s, y: derivative(y[0], y[1], params, pi),
        (0.0, t),
        [p, r],
        method="DOP853",
        rtol=1e-12,
        atol=1e-12,
    )
    return sol.y[:, -1]


class TestProliferationRate:
    def test_no_effect_is_baseline(self, patient_a, mini_config):
        assert proliferation_rate(1, 1, patient_a, mini_config) == patient_a.pi0
        assert proliferation_rate(1, 2, patient_a, mini_config) == patient_a.pi0

    def test_log_scale_effect(self, patient_a, mini_config):
        expected = patient_a.pi0 * math.exp(0.918 * 20.0**0.25)
        assert proliferation_rate(3, 1, patient_a, mini_config) == pytest.approx(expected, rel=1e-12)

    def test_second_injection_uses_its_own_coefficient(self, patient_a, mini_config):
        expected = patient_a.pi0 * math.exp(0.721 * 10.0**0.25)
        assert proliferation_rate(2, 2, patient_a, mini_config) == pytest.approx(expected, rel=1e-12)

    def test_additive_switch(self, patient_a):
        config = make_model(effect_scale="additive")
        expected = patient_a.pi0 + 0.918 * 20.0**0.25
        assert proliferation_rate(3, 1, patient_a, config) == pytest.approx(expected)

    def test_larger_dose_larger_rate(self, patient_a, mini_config):
        rates = [proliferation_rate(g, 1, patient_a, mini_config) for g in (1, 2, 3)]
        assert rates == sorted(rates)
        assert rates[0] < rates[1] < rates[2]

    @pytest.mark.parametrize("gamma,n", [(0, 1), (4, 1), (1, 0), (1, 3)])
    def test_out_of_range(self, patient_a, mini_config, gamma, n):
        with pytest.raises(InvalidArgumentError):
            proliferation_rate(gamma, n, patient_a, mini_config)


class TestEquilibrium:
    def test_fixed_point(self, patient_a):
        r, p = equilibrium(patient_a)
        dp, dr = derivative(p, r, patient_a, patient_a.pi0)
        assert abs(dp) <= 1e-10
        assert abs(dr) <= 1e-10

    def test_positive(self, patient_a, patient_b):
        for params in (patient_a, patient_b):
            r, p = equilibrium(params)
            assert r > 0 and p > 0

    def test_patient_b_lower(self, patient_a, patient_b):
        assert sum(equilibrium(patient_b)) < sum(equilibrium(patient_a))

    def test_no_equilibrium(self):
        params = PatientParams(
            **{**PATIENT_A, "mu_r": 0.01, "pi0": 0.5, "rho": 2.0, "mu_p": 0.01}
        )
        with pytest.raises(NoEquilibriumError):
            equilibrium(params)

    def test_untreated_flow_converges_to_equilibrium(self, patient_a, mini_config):
        r_eq, p_eq = equilibrium(patient_a)
        p, r = linear_flow(1, 1, patient_a, mini_config)(50.0, 800.0, 5000.0)
        assert p == pytest.approx(p_eq, rel=1e-6)
        assert r == pytest.approx(r_eq, rel=1e-6)


class TestLinearFlow:
    @pytest.mark.parametrize("gamma,n", [(1, 1), (2, 1), (3, 1), (3, 2)])
    @pytest.mark.parametrize("t", [0.25, 1.0, 7.0, 40.0])
    def test_matches_integrator(self, patient_a, mini_config, gamma, n, t):
        pi = proliferation_rate(gamma, n, patient_a, mini_config)
        p, r = linear_flow(gamma, n, patient_a, mini_config)(8.0, 332.0, t)
        expected = _oracle(patient_a, pi, 8.0, 332.0, t)
        assert p == pytest.approx(expected[0], rel=1e-6)
        assert r == pytest.approx(expected[1], rel=1e-6)

    def test_numerical_fallback_agrees(self, patient_b, mini_config):
        pi = proliferation_rate(3, 1, patient_b, mini_config)
        exact = LinearFlow(patient_b.lambda_, patient_b.rho, pi, patient_b.mu_r, patient_b.mu_p)
        assert exact.closed_form
        phi, c = exact.affine_map(3.0)
        phi_num, c_num = exact._numerical_map(3.0)
        np.testing.assert_allclose(phi_num, phi, rtol=1e-7, atol=1e-10)
        np.testing.assert_allclose(c_num, c, rtol=1e-7, atol=1e-8)

    def test_zero_duration_is_identity(self, patient_a, mini_config):
        day = linear_flow(2, 1, patient_a, mini_config)
        assert day(10.0, 300.0, 0.0) == (10.0, 300.0)

    def test_semigroup(self, patient_a, mini_config):
        day = linear_flow(3, 1, patient_a, mini_config)
        once = day(8.0, 332.0, 5.0)
        twice = day(*day(8.0, 332.0, 2.0), 3.0)
        assert once[0] == pytest.approx(twice[0], rel=1e-10)
        assert once[1] == pytest.approx(twice[1], rel=1e-10)

    def test_vectorised(self, patient_a, mini_config):
        day = linear_flow(2, 2, patient_a, mini_config)
        ps = np.array([0.0, 10.0, 20.0])
        rs = np.array([100.0, 300.0, 900.0])
        p_new, r_new = day(ps, rs, 1.0)
        for k in range(3):
            p_k, r_k = day(float(ps[k]), float(rs[k]), 1.0)
            assert p_new[k] == pytest.approx(p_k)
            assert r_new[k] == pytest.approx(r_k)

    def test_injection_raises_counts(self, patient_a, mini_config):
        treated = linear_flow(3, 1, patient_a, mini_config)(8.0, 332.0, 7.0)
        untreated = linear_flow(1, 1, patient_a, mini_config)(8.0, 332.0, 7.0)
        assert sum(treated) > sum(untreated)


class TestFlow:
    def test_advances_clocks(self, patient_a, mini_config):
        x = State(gamma=2, n=1, sigma=0, theta=1, p=8.0, r=332.0)
        y = flow(x, 3.0, patient_a, mini_config)
        assert (y.gamma, y.n, y.sigma, y.theta) == (2, 1, 3.0, 4.0)
        p, r = linear_flow(2, 1, patient_a, mini_config)(8.0, 332.0, 3.0)
        assert y.p == pytest.approx(p)
        assert y.r == pytest.approx(r)

    def test_counts_frozen_before_study_start(self, patient_a, mini_config):
        x0 = initial_state(patient_a)
        y = flow(x0, 1.0, patient_a, mini_config)
        assert (y.p, y.r) == (patient_a.p0, patient_a.r0)
        assert y.theta == 1.0 and y.sigma == 1.0

    def test_counts_move_only_after_day_one(self, patient_a, mini_config):
        x = State(gamma=1, n=1, sigma=0.5, theta=0.5, p=8.0, r=332.0)
        y = flow(x, 2.0, patient_a, mini_config)
        p, r = linear_flow(1, 1, patient_a, mini_config)(8.0, 332.0, 1.5)
        assert y.p == pytest.approx(p)
        assert y.r == pytest.approx(r)

    def test_negative_duration(self, patient_a, mini_config):
        with pytest.raises(InvalidArgumentError):
            flow(initial_state(patient_a), -1.0, patient_a, mini_config)

    def test_delta_is_absorbing(self, patient_a, mini_config):
        delta = delta_state(60)
        assert flow(delta, 5.0, patient_a, mini_config) is delta
