"""Tests for grid enumeration, row lookup and the chi bijection."""

from __future__ import annotations

import numpy as np
import pytest

from il7_control.exceptions import GridTooLargeError, InvalidArgumentError
from il7_control.model.state import State
from il7_control.solver.grid import block_index, build_grid, chi, chi_inverse

from .conftest import make_model


def _brute_force_rows(config) -> list[tuple[int, int, int, int]]:
    """Every (gamma, n, sigma, theta) a path can occupy on whole days, in row order."""
    spacing, horizon = config.injection_spacing, config.horizon
    rows = []
    for n in range(1, config.n_inj + 1):
        for gamma in range(1, config.n_gamma + 1):
            first = 1 + spacing * (n - 1)
            for theta in range(0, horizon + 1):
                for sigma in range(0, horizon + 1):
                    pre_study = gamma == 1 and n == 1 and sigma == theta and theta <= 1
                    if pre_study:
                        rows.append((gamma, n, sigma, theta))
                        continue
                    if theta < first or sigma > theta - first:
                        continue
                    if (gamma, n) != (1, config.n_inj) and sigma > spacing:
                        continue
                    rows.append((gamma, n, sigma, theta))
    return rows


class TestGridEnumeration:
    def test_mini_row_count(self, mini_grid):
        assert mini_grid.n_sum == 3581

    def test_matches_brute_force(self, mini_config, mini_grid):
        expected = _brute_force_rows(mini_config)
        actual = list(
            zip(
                mini_grid.row_gamma.tolist(),
                mini_grid.row_n.tolist(),
                mini_grid.row_sigma.tolist(),
                mini_grid.row_theta.tolist(),
            )
        )
        assert actual == expected

    def test_block_order(self, mini_config, mini_grid):
        indices = [b.index for b in mini_grid.blocks]
        assert indices == list(range(1, 7))
        assert block_index(1, 1, mini_config) == 1
        assert block_index(3, 1, mini_config) == 3
        assert block_index(1, 2, mini_config) == 4
        starts = [b.start for b in mini_grid.blocks]
        sizes = [b.size for b in mini_grid.blocks]
        assert starts == list(np.cumsum([0, *sizes[:-1]]))

    def test_pre_study_rows(self, mini_grid):
        first = mini_grid.block(1, 1)
        assert (first.sigma[0], first.theta[0]) == (0, 0)
        assert mini_grid.has_row(1, 1, 1, 1)
        assert not mini_grid.has_row(2, 1, 1, 1)
        assert not mini_grid.has_row(2, 1, 0, 0)

    def test_cycle_block_holds_long_waits(self, mini_grid):
        assert mini_grid.has_row(1, 2, 52, 60)
        assert not mini_grid.has_row(1, 2, 53, 60)
        assert not mini_grid.has_row(2, 2, 8, 60)

    def test_columns(self, mini_grid):
        assert mini_grid.n_pr == 7 * 7
        assert mini_grid.column_of(0.0, 0.0) == 0
        assert mini_grid.column_of(100.0, 0.0) == 1
        assert mini_grid.column_of(0.0, 500.0) == 7
        assert mini_grid.column_p[8] == 100.0
        assert mini_grid.column_r[8] == 500.0

    def test_column_of_off_lattice(self, mini_grid):
        with pytest.raises(InvalidArgumentError):
            mini_grid.column_of(50.0, 0.0)
        with pytest.raises(InvalidArgumentError):
            mini_grid.column_of(700.0, 0.0)

    def test_row_of_rejects_fractional_clock(self, mini_grid):
        with pytest.raises(InvalidArgumentError, match="whole days"):
            mini_grid.row_of(1, 1, 0.5, 3)

    def test_row_of_rejects_unreachable(self, mini_grid):
        with pytest.raises(InvalidArgumentError, match="not on the grid"):
            mini_grid.row_of(2, 2, 0, 3)

    def test_rows_of_vectorised(self, mini_grid):
        sigma = np.array([0, 1, 9])
        theta = np.array([5, 5, 5])
        rows = mini_grid.rows_of(1, 1, sigma, theta)
        assert rows[0] == mini_grid.row_of(1, 1, 0, 5)
        assert rows[1] == mini_grid.row_of(1, 1, 1, 5)
        assert rows[2] == -1


class TestChi:
    def test_round_trip_all_rows(self, mini_grid):
        for v in range(1, mini_grid.n_sum + 1):
            for s in (1, 25, mini_grid.n_pr):
                assert chi(mini_grid, chi_inverse(mini_grid, v, s)) == (v, s)

    def test_round_trip_all_columns(self, mini_grid):
        for v in (1, 2, 1000, mini_grid.n_sum):
            for s in range(1, mini_grid.n_pr + 1):
                assert chi(mini_grid, chi_inverse(mini_grid, v, s)) == (v, s)

    def test_chi_of_state(self, mini_grid):
        v, s = chi(mini_grid, State(gamma=1, n=1, sigma=0, theta=0, p=0.0, r=0.0))
        assert (v, s) == (1, 1)

    def test_out_of_range(self, mini_grid):
        with pytest.raises(InvalidArgumentError):
            chi_inverse(mini_grid, 0, 1)
        with pytest.raises(InvalidArgumentError):
            chi_inverse(mini_grid, 1, mini_grid.n_pr + 1)


class TestSizing:
    def test_table_bytes(self, mini_grid):
        assert mini_grid.table_bytes() == 3581 * 49 * 8
        assert mini_grid.table_bytes(4) == 3581 * 49 * 4

    def test_too_large(self, mini_config):
        with pytest.raises(GridTooLargeError, match="cap"):
            build_grid(mini_config, max_table_bytes=1024)

    def test_single_precision_halves_the_need(self, mini_config):
        needed = 3581 * 49 * 8 * 2
        with pytest.raises(GridTooLargeError):
            build_grid(mini_config, max_table_bytes=needed - 1)
        build_grid(mini_config, max_table_bytes=needed - 1, single_precision=True)

    def test_longer_horizon_more_rows(self):
        assert build_grid(make_model(horizon=90)).n_sum > build_grid(make_model()).n_sum
