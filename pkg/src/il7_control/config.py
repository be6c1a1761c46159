"""Configuration loading and validation."""

from __future__ import annotations

import hashlib
import json
import os
import re
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from .exceptions import ConfigError

WORKERS_ENV_VAR = "IL7_CONTROL_WORKERS"

# Integer-count checks on float grid bounds
_COUNT_TOLERANCE = 1e-9


def _integral_count(span: float, step: float) -> int | None:
    """Return span/step when it is (numerically) a whole number."""
    ratio = span / step
    nearest = round(ratio)
    if abs(ratio - nearest) > _COUNT_TOLERANCE * max(1.0, abs(ratio)):
        return None
    return int(nearest)


class PatientParams(BaseModel):
    """Biological rates and baseline compartment values for one patient."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    name: str = ""
    lambda_: float = Field(alias="lambda", gt=0)  # thymic output, cells/uL/day
    rho: float = Field(gt=0)  # division rate, /day
    pi0: float = Field(gt=0)  # baseline proliferation rate, /day
    mu_r: float = Field(gt=0)  # resting death rate, /day
    mu_p: float = Field(gt=0)  # proliferating death rate, /day
    beta_pi: tuple[float, ...]  # per-injection effect, one entry per injection
    r0: float = Field(gt=0)  # resting count at t=0, cells/uL
    p0: float = Field(gt=0)  # proliferating count at t=0, cells/uL

    @field_validator("beta_pi")
    @classmethod
    def _check_beta(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value:
            raise ValueError("beta_pi needs one coefficient per injection")
        if any(b < 0 for b in value):
            raise ValueError("beta_pi coefficients must be non-negative")
        if any(later > earlier for earlier, later in zip(value, value[1:])):
            raise ValueError("beta_pi must be non-increasing in injection index")
        return value


class GridConfig(BaseModel):
    """Regular (p, r) lattice of the value table."""

    model_config = ConfigDict(frozen=True)

    p_min: float = 0.0
    p_max: float = 300.0
    h_p: float = Field(default=10.0, gt=0)
    r_min: float = 0.0
    r_max: float = 1500.0
    h_r: float = Field(default=25.0, gt=0)

    @model_validator(mode="after")
    def _check_counts(self) -> GridConfig:
        for axis, lo, hi, step in (
            ("p", self.p_min, self.p_max, self.h_p),
            ("r", self.r_min, self.r_max, self.h_r),
        ):
            if hi <= lo:
                raise ValueError(f"{axis}_max must exceed {axis}_min")
            if _integral_count(hi - lo, step) is None:
                raise ValueError(
                    f"({axis}_max - {axis}_min) / h_{axis} must be an integer"
                )
        return self

    @property
    def n_p(self) -> int:
        return int(_integral_count(self.p_max - self.p_min, self.h_p)) + 1

    @property
    def n_r(self) -> int:
        return int(_integral_count(self.r_max - self.r_min, self.h_r)) + 1

    @property
    def n_pr(self) -> int:
        return self.n_p * self.n_r


class ModelConfig(BaseModel):
    """Doses, cycle structure, horizon, costs and discretisation."""

    model_config = ConfigDict(frozen=True)

    doses: tuple[float, ...] = (0.0, 10.0, 20.0)  # ug/kg, doses[0] == 0
    n_inj: int = Field(default=2, ge=1)
    horizon: int = Field(default=365, ge=2)  # T_h, days
    sigma_min: int = 70  # days between cycle starts
    alpha: float = Field(default=0.001, gt=0)  # discount rate, /day
    eta: float = Field(default=0.05, ge=0)  # spontaneous-jump rate, /day
    dt: float = Field(default=1.0, gt=0)  # quadrature step, days
    threshold: float = 500.0  # CD4 threshold, cells/uL
    injection_spacing: int = Field(default=7, ge=1)  # days
    effect_scale: Literal["log", "additive"] = "log"
    injection_weight: float = Field(default=1.0, ge=0)
    gradual_weight: float = Field(default=1.0 / 30.0, ge=0)
    grid: GridConfig = Field(default_factory=GridConfig)

    @field_validator("doses")
    @classmethod
    def _check_doses(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if len(value) < 2:
            raise ValueError("doses needs d0 = 0 and at least one positive dose")
        if value[0] != 0:
            raise ValueError("doses[0] must be 0")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("doses must be strictly increasing")
        return value

    @model_validator(mode="after")
    def _check_timing(self) -> ModelConfig:
        if self.sigma_min < self.injection_spacing * self.n_inj:
            raise ValueError(
                f"sigma_min must be >= {self.injection_spacing * self.n_inj} "
                "(injection_spacing * n_inj)"
            )
        if self.dt > 1 or _integral_count(1.0, self.dt) is None:
            raise ValueError("dt must divide one day exactly (1/dt integer)")
        return self

    @property
    def m_d(self) -> int:
        return len(self.doses) - 1

    @property
    def n_gamma(self) -> int:
        return len(self.doses)

    @property
    def K(self) -> float:
        """Upper bound of the jump intensity (eta(x) <= K)."""
        return self.eta

    @property
    def steps_per_day(self) -> int:
        return int(round(1.0 / self.dt))


class SolverConfig(BaseModel):
    tol: float = Field(default=1e-6, gt=0)
    max_iter: int = Field(default=500, ge=1)
    fast: bool = True  # flow-line accumulation; False = direct quadrature
    single_precision: bool = False  # float32 storage, float64 arithmetic
    max_table_bytes: int = 2 * 1024**3
    # Optional W0 constants; all three unset means W0 = 0
    w0_ka: float | None = None
    w0_kb: float | None = None
    w0_eps1: float | None = None

    @model_validator(mode="after")
    def _check_w0(self) -> SolverConfig:
        given = [v is not None for v in (self.w0_ka, self.w0_kb, self.w0_eps1)]
        if any(given) and not all(given):
            raise ValueError("w0_ka, w0_kb and w0_eps1 must be set together")
        return self


class MonteCarloConfig(BaseModel):
    n_runs: int = Field(default=10_000, ge=1)
    seed: int = 0


class OutputsConfig(BaseModel):
    directory: str = "runs"


class RunConfig(BaseModel):
    patient: PatientParams
    model: ModelConfig = Field(default_factory=ModelConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    mc: MonteCarloConfig = Field(default_factory=MonteCarloConfig)
    outputs: OutputsConfig = Field(default_factory=OutputsConfig)

    @property
    def config_hash(self) -> str:
        return config_hash(self.patient, self.model)


def config_hash(patient: PatientParams, model: ModelConfig) -> str:
    """Stable digest of everything a value table depends on."""
    payload = {
        "patient": patient.model_dump(mode="json", by_alias=True),
        "model": model.model_dump(mode="json"),
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def worker_count() -> int:
    """Worker processes for Monte Carlo runs, from IL7_CONTROL_WORKERS."""
    raw = os.environ.get(WORKERS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV_VAR} must be an integer, got {raw!r}")


def _interpolate_env_vars(text: str) -> str:
    """Replace ${VAR_NAME} with environment variable values."""

    def replacer(match: re.Match) -> str:
        var_name = match.group(1)
        return os.environ.get(var_name, "")

    return re.sub(r"\$\{(\w+)\}", replacer, text)


def _read_yaml(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        data = yaml.safe_load(_interpolate_env_vars(path.read_text()))
    except yaml.YAMLError as e:
        raise ConfigError(f"Config file {path} is not valid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a mapping")
    return data


def load_patient(path: str | Path) -> PatientParams:
    """Load a patient parameter file (YAML mapping of rates and baseline counts)."""
    path = Path(path).expanduser()
    data = _read_yaml(path)
    try:
        return PatientParams(**data)
    except ValidationError as e:
        raise ConfigError(f"Invalid patient parameters in {path}:\n{e}") from e


def load_config(path: str | Path) -> RunConfig:
    """Load a run config from YAML (with ${ENV} interpolation).

    ``patient`` may be an inline mapping or a path to a patient file,
    resolved relative to the config file's directory.
    """
    path = Path(path).expanduser()
    data = _read_yaml(path)

    patient = data.get("patient")
    if patient is None:
        raise ConfigError(f"Config file {path} has no 'patient' section")
    if isinstance(patient, str):
        patient_path = Path(patient).expanduser()
        if not patient_path.is_absolute():
            patient_path = path.parent / patient_path
        if not patient_path.exists():
            raise ConfigError(f"Patient file referenced by {path} not found: {patient_path}")
        data = {**data, "patient": load_patient(patient_path)}

    try:
        return RunConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration in {path}:\n{e}") from e


def save_config(config: RunConfig, path: str | Path) -> Path:
    """Save a run config to YAML, patient inline."""
    path = Path(path).expanduser()
    path.parent.mkdir(parents=True, exist_ok=True)
    data = config.model_dump(mode="json", by_alias=True)
    path.write_text(yaml.dump(data, default_flow_style=False, sort_keys=False))
    return path
