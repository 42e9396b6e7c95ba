"""Spectrum fitting and mode matching Pydantic schemas."""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SpectrumFitRequest(BaseModel):
    """Schema for a Lorentzian fit request."""

    wavelengths_nm: list[float] = Field(..., min_length=2, description="Strictly increasing wavelengths")
    intensities: list[float] = Field(..., min_length=2)
    windows: list[tuple[float, float]] = Field(default_factory=lambda: [(602.0, 652.0)])
    peaks_per_window: int | list[int] = 1
    background_degree: int | None = Field(default=None, ge=0, description="Remove a polynomial baseline first")

    @model_validator(mode="after")
    def _equal_lengths(self) -> "SpectrumFitRequest":
        if len(self.wavelengths_nm) != len(self.intensities):
            raise ValueError("wavelengths_nm and intensities must have equal length")
        return self


class PeakRead(BaseModel):
    """Schema for reading a fitted peak."""

    center_nm: float
    fwhm_nm: float
    amplitude: float
    background: float
    window: tuple[float, float]
    center_err: float
    fwhm_err: float
    quality_factor: float
    quality_factor_err: float
    residual_norm: float
    flagged: bool

    model_config = ConfigDict(from_attributes=True)


class SpectrumFitResponse(BaseModel):
    peaks: list[PeakRead]
    clamp_fraction: float = 0.0


class CalculatedMode(BaseModel):
    wavelength_nm: float = Field(..., gt=0)
    parity: str | None = None


class MatchRequest(BaseModel):
    """Schema for pairing measured peaks with calculated modes."""

    measured_nm: list[float]
    calculated: list[CalculatedMode]


class MatchedPairRead(BaseModel):
    measured_nm: float
    calculated_nm: float
    parity: str | None = None
    deviation_nm: float

    model_config = ConfigDict(from_attributes=True)


class MatchResponse(BaseModel):
    pairs: list[MatchedPairRead]
    max_deviation: float
    mean_deviation: float
    trend_slope: float | None = None

    model_config = ConfigDict(from_attributes=True)
