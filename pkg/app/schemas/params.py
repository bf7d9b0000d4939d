import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings


class SSHParams(BaseModel):
    """Bloch-Hamiltonian parameters; gamma in rad/μs, k in radians (unwrapped)."""

    model_config = ConfigDict(frozen=True)

    v: float
    r: float
    gamma: float = Field(default=1.0, gt=0.0)
    k: float = 0.0
    # zeroes the i/2 gain/loss term; debug knob for the Hermitian limit
    hermitian_limit: bool = False

    @property
    def h_x(self) -> float:
        return self.v + self.r * math.cos(self.k)

    @property
    def h_z(self) -> float:
        return self.r * math.sin(self.k)

    def at(self, k: float) -> "SSHParams":
        return self.model_copy(update={"k": float(k)})


class NVParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    D: float = settings.nv_D
    omega_e: float = settings.nv_omega_e
    omega_n: float = settings.nv_omega_n
    A_zz: float = Field(default=settings.nv_A_zz, gt=0.0)

    @field_validator("D", "omega_e", "omega_n", "A_zz")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("NV parameters must be finite")
        return value

    @classmethod
    def scaled_for_lab_check(cls) -> "NVParams":
        """Zero-field splitting shrunk so lab-frame integration stays tractable."""
        return cls(D=settings.lab_check_D, omega_e=0.0, omega_n=0.0)


class PLRates(BaseModel):
    """Mean photon counts per shot of |0↑⟩, |0↓⟩, |−1↑⟩, |−1↓⟩."""

    model_config = ConfigDict(frozen=True)

    N1: float = Field(default=settings.pl_rates[0], ge=0.0)
    N2: float = Field(default=settings.pl_rates[1], ge=0.0)
    N3: float = Field(default=settings.pl_rates[2], ge=0.0)
    N4: float = Field(default=settings.pl_rates[3], ge=0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.N1, self.N2, self.N3, self.N4], dtype=float)


class Populations(BaseModel):
    model_config = ConfigDict(frozen=True)

    P1: float
    P2: float
    P3: float
    P4: float

    @classmethod
    def from_array(cls, values: np.ndarray) -> "Populations":
        p = np.asarray(values, dtype=float)
        return cls(P1=p[0], P2=p[1], P3=p[2], P4=p[3])

    def as_array(self) -> np.ndarray:
        return np.array([self.P1, self.P2, self.P3, self.P4], dtype=float)

    @property
    def feasible(self) -> bool:
        p = self.as_array()
        return bool(np.all(p >= 0.0) and abs(p.sum() - 1.0) < 1e-12)


class DilationConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    eta0: float = Field(default=settings.eta0, gt=0.0)
    step: float = Field(default=settings.dilation_step, gt=0.0)
    horizon: float = Field(default=settings.dilation_horizon, gt=0.0)
    # uniform loss added to the dilated generator; None picks max(Im λ1, 0)
    loss_shift: float | None = None
    positivity_floor: float = settings.positivity_floor

    @model_validator(mode="after")
    def _grid_fits(self) -> "DilationConfig":
        if self.step > self.horizon:
            raise ValueError("step must not exceed horizon")
        return self

    @property
    def n_intervals(self) -> int:
        """Even interval count so the propagator can stride two samples per step."""
        n = int(math.ceil(self.horizon / self.step - 1e-9))
        return n + (n % 2)

    def t_grid(self) -> np.ndarray:
        return np.arange(self.n_intervals + 1, dtype=float) * self.step

    def m0(self) -> np.ndarray:
        return (1.0 + self.eta0**2) * np.eye(2, dtype=complex)
