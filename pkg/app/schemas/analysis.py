"""Schemas for cavity figures of merit and parity sectors."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.simulation import BoundaryKind

DEFAULT_GAMMA_PERP = 1.0e9


class ParitySector(str, Enum):
    """H_y parity under x -> -x and z -> -z (E = even, O = odd)."""

    EE = "EE"
    EO = "EO"
    OE = "OE"
    OO = "OO"

    @property
    def signs(self) -> tuple[int, int]:
        """(+1 | -1) mirror signs of H_y along x and z."""
        return tuple(1 if c == "E" else -1 for c in self.value)  # type: ignore[return-value]

    @property
    def boundaries(self) -> tuple[BoundaryKind, BoundaryKind]:
        """Mirror kinds for the x = 0 and z = 0 planes of a quadrant run.

        H_y even across a plane makes that plane a perfect electric conductor.
        """
        return tuple(  # type: ignore[return-value]
            BoundaryKind.MIRROR_ODD if c == "E" else BoundaryKind.MIRROR_EVEN for c in self.value
        )


class PurcellRequest(BaseModel):
    wavelength_nm: float = Field(..., gt=0)
    refractive_index: float = Field(..., gt=0)
    quality_factor: float = Field(..., gt=0)
    mode_volume_nm3: float = Field(..., gt=0)


class PurcellResponse(BaseModel):
    purcell_factor: float
    rate_enhancement: float
    mode_volume_norm: float


class CouplingRequest(BaseModel):
    quality_factor: float = Field(..., gt=0)
    mode_volume_nm3: float = Field(..., gt=0)
    wavelength_nm: float = Field(..., gt=0)
    gamma_perp: float = Field(default=DEFAULT_GAMMA_PERP, gt=0, description="Dipole dephasing rate, s^-1")
    margin: float = Field(default=1.0, gt=0)


class CouplingResponse(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    rabi_frequency: float
    cavity_decay: float
    gamma_perp: float
    characteristic_volume_nm3: float
    angular_frequency: float
    strong_coupling: bool
    passes_q_gate: bool
    margin: float


class ReadoutRequest(BaseModel):
    purcell_factor: float = Field(..., gt=0)
    collection_gain: float = Field(default=10.0, gt=0)
    window_ns: float = Field(default=1000.0, gt=0)
    lifetime_ns: float = Field(default=13.0, gt=0)
    shelving_ns: float = Field(default=250.0, gt=0)
    base_collection: float = Field(default=0.01, gt=0, le=1)


class ReadoutResponse(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    improvement: float
    bright_mean: float
    dim_mean: float
    contrast: float
    emission_rate_per_ns: float
    collection: float
