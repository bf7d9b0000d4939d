import math

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings


class TextureSample(BaseModel):
    """One measured (or simulated) spin-texture point ⟨σ_x⟩, ⟨σ_z⟩ at momentum k."""

    model_config = ConfigDict(frozen=True)

    k: float
    sx: float
    sz: float
    sx_err: float | None = None
    sz_err: float | None = None
    im_theta_sign: int | None = None

    @field_validator("im_theta_sign")
    @classmethod
    def _unit_sign(cls, value: int | None) -> int | None:
        if value is not None and value not in (-1, 1):
            raise ValueError("im_theta_sign must be +1 or -1")
        return value

    @model_validator(mode="after")
    def _inside_bloch_disk(self) -> "TextureSample":
        # error bars may carry a measured point past the unit circle
        sx = max(abs(self.sx) - (self.sx_err or 0.0), 0.0)
        sz = max(abs(self.sz) - (self.sz_err or 0.0), 0.0)
        if sx * sx + sz * sz > 1.0 + settings.table_bloch_tolerance:
            raise ValueError(f"sx² + sz² = {self.sx**2 + self.sz**2:.4f} lies outside the Bloch disk")
        return self

    @property
    def bloch_norm(self) -> float:
        return math.hypot(self.sx, self.sz)

    def flipped(self, shift: float = 0.0) -> "TextureSample":
        """Partner-band point: ⟨σ_x,z⟩ change sign, errors and Im θ sign carry over."""
        return self.model_copy(update={"k": self.k + shift, "sx": -self.sx, "sz": -self.sz})


class WindingResult(BaseModel):
    w: float
    w_per_zone: float
    link_phases: list[float]
    period: float = Field(description="loop length in k: 2π or 4π")
    grid_size: int
    max_link_phase: float
    crossings: list[float] = Field(default_factory=list)
    extended: bool = False


class WindingBootstrap(BaseModel):
    mean: float
    std: float
    n_resamples: int
