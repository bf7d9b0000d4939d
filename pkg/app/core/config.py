import math

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

TWO_PI = 2.0 * math.pi


class Settings(BaseSettings):
    """Numerical defaults and service configuration (override via NHSSH_* env vars)."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="NHSSH_",
        extra="ignore",
        case_sensitive=False,
    )

    env: str = Field(default="local")
    log_level: str = Field(default="INFO")
    cors_origins: list[str] = Field(default=["http://localhost:5173", "http://localhost:3000"])

    # ssh_model
    gap_tolerance: float = Field(default=1e-8, description="|λ1-λ2| < tol·γ flags an EP")
    tie_tolerance: float = Field(default=1e-12, description="|Im λ1 - Im λ2| tie, in units of γ")
    phase_boundary_tolerance: float = Field(default=1e-9)

    # dynamics
    condition_switch: float = Field(default=1e6)
    overlap_threshold: float = Field(default=1e-10)
    decay_epsilon: float = Field(default=1e-3)
    experiment_time_cap: float = Field(default=1.8, description="μs, longest emulated run")
    texture_epsilon: float = Field(default=5e-7, description="residual amplitude ratio for dilated texture rows")
    texture_horizon_cap: float = Field(default=40.0, description="μs, longest dilated texture run")

    # dilation
    eta0: float = Field(default=8.0)
    dilation_step: float = Field(default=1e-4, description="μs")
    dilation_horizon: float = Field(default=1.8, description="μs")
    positivity_floor: float = Field(default=0.0)
    hermiticity_warn: float = Field(default=1e-6)

    # pulse_compiler, angular frequencies in rad/μs
    nv_D: float = Field(default=TWO_PI * 2870.0)
    nv_omega_e: float = Field(default=TWO_PI * 2.8025 * 480.0)
    nv_omega_n: float = Field(default=TWO_PI * 1.0705e-3 * 480.0)
    nv_A_zz: float = Field(default=TWO_PI * 13.7)
    lab_check_D: float = Field(default=TWO_PI * 50.0)

    # readout_model, mean photon counts per shot
    # synthetic; 10⁶ shots resolve a post-selected subspace of weight 1/(1 + η₀²)
    pl_rates: tuple[float, float, float, float] = Field(default=(40.0, 30.0, 20.0, 10.0))
    shots: int = Field(default=1_000_000)
    seed: int = Field(default=20200101)
    rate_condition_limit: float = Field(default=1e8)

    # topology
    bloch_tolerance: float = Field(default=1e-6)
    table_bloch_tolerance: float = Field(default=5e-3, description="3-decimal table rounding")

    # cli_runner
    workers: int = Field(default=4)


settings = Settings()
