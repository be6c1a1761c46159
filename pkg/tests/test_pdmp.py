"""Tests for boundary classification, hitting times, the kernel and costs."""

from __future__ import annotations

import pytest

from il7_control.exceptions import InvalidArgumentError
from il7_control.model.pdmp import (
    admissible_actions,
    apply_kernel,
    classify_boundary,
    gamma_of_dose,
    gradual_cost,
    impulse_cost,
    is_pre_study,
    time_to_boundary,
)
from il7_control.model.state import BoundaryId, State, delta_state, initial_state


def _state(gamma=1, n=1, sigma=0, theta=1, p=8.0, r=332.0) -> State:
    return State(gamma=gamma, n=n, sigma=sigma, theta=theta, p=p, r=r)


class TestClassifyBoundary:
    def test_initial_state_is_interior(self, patient_a, mini_config):
        assert classify_boundary(initial_state(patient_a), mini_config) is BoundaryId.INTERIOR

    def test_end_of_pre_study_day(self, mini_config):
        assert classify_boundary(_state(sigma=1, theta=1), mini_config) is BoundaryId.XI1

    def test_study_day_one_after_reset_is_not_xi1(self, mini_config):
        assert classify_boundary(_state(sigma=0, theta=1), mini_config) is BoundaryId.INTERIOR

    def test_horizon(self, mini_config):
        assert classify_boundary(_state(gamma=2, sigma=3, theta=60), mini_config) is BoundaryId.XI2

    def test_horizon_wins_over_next_injection(self, mini_config):
        x = _state(gamma=3, n=1, sigma=7, theta=60)
        assert classify_boundary(x, mini_config) is BoundaryId.XI2

    def test_next_injection_due(self, mini_config):
        assert classify_boundary(_state(gamma=3, n=1, sigma=7, theta=8), mini_config) is BoundaryId.XI3

    def test_next_injection_due_without_active_effect(self, mini_config):
        assert classify_boundary(_state(gamma=1, n=1, sigma=7, theta=8), mini_config) is BoundaryId.XI3

    def test_effect_end(self, mini_config):
        assert classify_boundary(_state(gamma=2, n=2, sigma=7, theta=15), mini_config) is BoundaryId.XI5

    def test_new_cycle_allowed(self, mini_config):
        x = _state(gamma=1, n=2, sigma=21, theta=29, p=8.0, r=300.0)
        assert classify_boundary(x, mini_config) is BoundaryId.XI4

    def test_new_cycle_needs_low_cd4(self, mini_config):
        x = _state(gamma=1, n=2, sigma=21, theta=29, p=50.0, r=900.0)
        assert classify_boundary(x, mini_config) is BoundaryId.INTERIOR

    def test_new_cycle_needs_sigma_min(self, mini_config):
        x = _state(gamma=1, n=2, sigma=20, theta=28, p=8.0, r=300.0)
        assert classify_boundary(x, mini_config) is BoundaryId.INTERIOR

    def test_new_cycle_only_on_whole_days(self, mini_config):
        x = _state(gamma=1, n=2, sigma=21.5, theta=29.5, p=8.0, r=300.0)
        assert classify_boundary(x, mini_config) is BoundaryId.INTERIOR

    def test_threshold_is_inclusive(self, mini_config):
        x = _state(gamma=1, n=2, sigma=30, theta=40, p=100.0, r=400.0)
        assert classify_boundary(x, mini_config) is BoundaryId.XI4

    def test_delta(self, mini_config):
        assert classify_boundary(delta_state(60), mini_config) is BoundaryId.INTERIOR

    def test_pre_study(self, patient_a):
        assert is_pre_study(initial_state(patient_a))
        assert is_pre_study(_state(sigma=0.5, theta=0.5))
        assert not is_pre_study(_state(sigma=0, theta=1))


class TestTimeToBoundary:
    def test_first_injection_after_one_day(self, patient_a, mini_config):
        assert time_to_boundary(initial_state(patient_a), patient_a, mini_config) == (
            1.0,
            BoundaryId.XI1,
        )

    def test_second_injection_after_spacing(self, patient_a, mini_config):
        x = _state(gamma=3, n=1, sigma=0, theta=1)
        assert time_to_boundary(x, patient_a, mini_config) == (7, BoundaryId.XI3)

    def test_effect_end(self, patient_a, mini_config):
        x = _state(gamma=2, n=2, sigma=2, theta=10)
        assert time_to_boundary(x, patient_a, mini_config) == (5, BoundaryId.XI5)

    def test_already_on_boundary(self, patient_a, mini_config):
        x = _state(gamma=2, n=2, sigma=7, theta=15)
        assert time_to_boundary(x, patient_a, mini_config) == (0.0, BoundaryId.XI5)

    def test_tie_goes_to_horizon(self, patient_a, mini_config):
        x = _state(gamma=2, n=1, sigma=0, theta=53)
        assert time_to_boundary(x, patient_a, mini_config) == (7, BoundaryId.XI2)

    def test_waits_for_sigma_min(self, patient_a, mini_config):
        # Untreated patient A stays under 500, so the wait is sigma_min - sigma
        x = _state(gamma=1, n=2, sigma=10, theta=30, p=8.0, r=300.0)
        assert time_to_boundary(x, patient_a, mini_config) == (11, BoundaryId.XI4)

    def test_xi4_from_fractional_time(self, patient_a, mini_config):
        x = _state(gamma=1, n=2, sigma=21.5, theta=29.5, p=8.0, r=300.0)
        t, boundary = time_to_boundary(x, patient_a, mini_config)
        assert boundary is BoundaryId.XI4
        assert t == pytest.approx(0.5)

    def test_high_counts_run_to_horizon(self, patient_a, mini_config):
        x = _state(gamma=1, n=2, sigma=21, theta=40, p=100.0, r=2500.0)
        assert time_to_boundary(x, patient_a, mini_config) == (20, BoundaryId.XI2)

    def test_delta_has_no_boundary(self, patient_a, mini_config):
        with pytest.raises(InvalidArgumentError):
            time_to_boundary(delta_state(60), patient_a, mini_config)


class TestActionsAndKernel:
    def test_admissible_actions(self, mini_config):
        assert admissible_actions(_state(sigma=1, theta=1), mini_config) == (10.0, 20.0)
        assert admissible_actions(_state(n=1, sigma=7, theta=8), mini_config) == (0.0, 10.0, 20.0)
        assert admissible_actions(_state(gamma=2, n=2, sigma=7, theta=15), mini_config) == ()

    def test_no_actions_in_interior(self, mini_config):
        with pytest.raises(InvalidArgumentError):
            admissible_actions(_state(sigma=0, theta=5), mini_config)

    def test_gamma_of_dose(self, mini_config):
        assert [gamma_of_dose(d, mini_config) for d in (0.0, 10.0, 20.0)] == [1, 2, 3]
        with pytest.raises(InvalidArgumentError):
            gamma_of_dose(15.0, mini_config)

    def test_first_injection_restarts_from_baseline(self, patient_a, mini_config):
        z = _state(sigma=1, theta=1, p=8.0, r=332.0)
        assert apply_kernel(z, 20.0, patient_a, mini_config) == State(3, 1, 0, 1, 8.0, 332.0)

    def test_next_injection(self, patient_a, mini_config):
        z = _state(gamma=3, n=1, sigma=7, theta=8, p=30.0, r=900.0)
        assert apply_kernel(z, 10.0, patient_a, mini_config) == State(2, 2, 0, 8, 30.0, 900.0)

    def test_skipped_injection(self, patient_a, mini_config):
        z = _state(gamma=3, n=1, sigma=7, theta=8, p=30.0, r=900.0)
        assert apply_kernel(z, 0.0, patient_a, mini_config) == State(1, 2, 0, 8, 30.0, 900.0)

    def test_new_cycle(self, patient_a, mini_config):
        z = _state(gamma=1, n=2, sigma=30, theta=40, p=8.0, r=300.0)
        assert apply_kernel(z, 20.0, patient_a, mini_config) == State(3, 1, 0, 40, 8.0, 300.0)

    def test_new_cycle_requires_positive_dose(self, patient_a, mini_config):
        z = _state(gamma=1, n=2, sigma=30, theta=40, p=8.0, r=300.0)
        with pytest.raises(InvalidArgumentError):
            apply_kernel(z, 0.0, patient_a, mini_config)

    def test_effect_end_resets_gamma(self, patient_a, mini_config):
        z = _state(gamma=2, n=2, sigma=7, theta=15, p=30.0, r=900.0)
        assert apply_kernel(z, None, patient_a, mini_config) == State(1, 2, 7, 15, 30.0, 900.0)

    def test_horizon_absorbs(self, patient_a, mini_config):
        z = _state(gamma=2, n=1, sigma=3, theta=60)
        assert apply_kernel(z, None, patient_a, mini_config).is_delta

    def test_spontaneous_jump(self, patient_a, mini_config):
        x = _state(gamma=3, n=1, sigma=2.5, theta=3.5, p=12.0, r=500.0)
        y = apply_kernel(x, None, patient_a, mini_config, BoundaryId.INTERIOR)
        assert y == State(1, 1, 2.5, 3.5, 12.0, 500.0)

    def test_dose_required_on_action_boundary(self, patient_a, mini_config):
        with pytest.raises(InvalidArgumentError):
            apply_kernel(_state(sigma=1, theta=1), None, patient_a, mini_config)

    def test_no_dose_inside(self, patient_a, mini_config):
        x = _state(gamma=3, sigma=2, theta=3)
        with pytest.raises(InvalidArgumentError):
            apply_kernel(x, 10.0, patient_a, mini_config, BoundaryId.INTERIOR)


class TestCosts:
    def test_gradual_cost_under_threshold(self, mini_config):
        assert gradual_cost(_state(theta=5, r=300.0), mini_config) == pytest.approx(1 / 30)

    def test_gradual_cost_above_threshold(self, mini_config):
        assert gradual_cost(_state(theta=5, r=900.0), mini_config) == 0.0

    def test_no_gradual_cost_before_study(self, mini_config):
        assert gradual_cost(_state(sigma=0.5, theta=0.5, r=300.0), mini_config) == 0.0

    def test_no_gradual_cost_at_delta(self, mini_config):
        assert gradual_cost(delta_state(60), mini_config) == 0.0

    def test_impulse_costs(self, mini_config):
        assert impulse_cost(_state(sigma=1, theta=1), 10.0, mini_config) == 1.0
        xi3 = _state(gamma=2, n=1, sigma=7, theta=8)
        assert impulse_cost(xi3, 20.0, mini_config) == 1.0
        assert impulse_cost(xi3, 0.0, mini_config) == 0.0
        assert impulse_cost(_state(gamma=2, n=2, sigma=7, theta=15), None, mini_config) == 0.0
        assert impulse_cost(_state(gamma=2, sigma=3, theta=60), None, mini_config) == 0.0
