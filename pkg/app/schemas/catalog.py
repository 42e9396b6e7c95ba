"""Run catalog Pydantic schemas."""

from pydantic import BaseModel, ConfigDict


class ModeRead(BaseModel):
    """Schema for reading a cataloged mode."""

    wavelength_nm: float
    quality_factor: float
    mode_volume_norm: float | None = None
    parity: str | None = None
    purcell_factor: float | None = None
    low_confidence: bool = False

    model_config = ConfigDict(from_attributes=True)


class PaginatedModes(BaseModel):
    """Schema for paginated mode responses."""

    config_hash: str
    kind: str
    preset: str | None = None
    items: list[ModeRead]
    total: int
    limit: int
    offset: int
