"""Shared fixtures: the two reference patients and small model configurations."""

from __future__ import annotations

import numpy as np
import pytest

from il7_control.config import GridConfig, ModelConfig, PatientParams, SolverConfig
from il7_control.solver import build_grid, iterate

PATIENT_A = {
    "name": "A",
    "lambda": 2.55,
    "rho": 2.06,
    "pi0": 0.049,
    "mu_r": 0.054,
    "mu_p": 0.068,
    "beta_pi": [0.918, 0.721],
    "r0": 332.0,
    "p0": 8.0,
}

PATIENT_B = {
    **PATIENT_A,
    "name": "B",
    "lambda": 1.86,
    "rho": 1.10,
    "r0": 187.0,
}

MINI_GRID = {"p_max": 600.0, "h_p": 100.0, "r_max": 3000.0, "h_r": 500.0}
# Same bounds at the resolution of the shipped patient configs
FINE_GRID = {"p_max": 600.0, "h_p": 30.0, "r_max": 3000.0, "h_r": 100.0}


def make_model(**overrides) -> ModelConfig:
    """T_h = 60 configuration on a coarse grid; overrides replace fields."""
    settings = {"horizon": 60, "sigma_min": 21, "grid": GridConfig(**MINI_GRID)}
    settings.update(overrides)
    return ModelConfig(**settings)


@pytest.fixture
def patient_a() -> PatientParams:
    return PatientParams(**PATIENT_A)


@pytest.fixture
def patient_b() -> PatientParams:
    return PatientParams(**PATIENT_B)


@pytest.fixture
def mini_config() -> ModelConfig:
    return make_model()


@pytest.fixture
def mini_grid(mini_config):
    return build_grid(mini_config)


@pytest.fixture(scope="session")
def solved_mini():
    """(table, report, params, config) for patient A on the mini configuration."""
    params = PatientParams(**PATIENT_A)
    config = make_model()
    table, report = iterate(config, params, solver=SolverConfig(tol=1e-8, max_iter=200))
    return table, report, params, config


@pytest.fixture(scope="session", params=["A", "B"])
def solved_fine(request):
    """(table, params, config) on the fine lattice with T_h = 60, for each patient."""
    params = PatientParams(**(PATIENT_A if request.param == "A" else PATIENT_B))
    config = make_model(grid=GridConfig(**FINE_GRID))
    table, report = iterate(config, params, solver=SolverConfig(tol=1e-6, max_iter=300))
    assert report.converged
    return table, params, config


@pytest.fixture
def affine_case():
    """A setting where bilinear interpolation is exact along every flow line.

    Counts never leave the (p, r) box (the vector field points inwards on
    all four edges), nothing is ever under the threshold and injections
    are free, so B maps a table that is affine in (p, r) with shared
    slopes to a table that is affine in (p, r) row by row.
    """
    params = PatientParams(**{**PATIENT_A, "beta_pi": [0.001, 0.0005], "r0": 1000.0, "p0": 24.0})
    config = ModelConfig(
        horizon=20,
        sigma_min=14,
        dt=0.5,
        threshold=-1.0,
        injection_weight=0.0,
        grid=GridConfig(p_max=48.0, h_p=12.0, r_max=2000.0, h_r=500.0),
    )
    grid = build_grid(config)
    rng = np.random.default_rng(11)
    offsets = rng.uniform(-1.0, 1.0, size=grid.n_sum)
    values = offsets[:, None] + 0.01 * grid.column_p[None, :] - 0.002 * grid.column_r[None, :]
    return params, config, grid, values
