"""Scenario files: everything one CLI invocation needs."""

from enum import Enum
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.analysis import DEFAULT_GAMMA_PERP, ParitySector
from app.schemas.geometry import GeometrySpec, GridRegion, PresetName, preset
from app.schemas.simulation import Axis, MAX_COURANT_3D


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class GeometrySection(_Section):
    """A preset, explicit parameters, or a preset with parameter overrides."""

    preset: PresetName | None = None
    params: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _something_to_build(self) -> "GeometrySection":
        if self.preset is None and not self.params:
            raise ValueError("geometry needs a preset or params")
        return self

    def resolve(self) -> GeometrySpec:
        """Build the validated geometry."""
        if self.preset is None:
            return GeometrySpec.model_validate(self.params)
        if not self.params:
            return preset(self.preset)
        base = preset(self.preset).model_dump()
        return GeometrySpec.model_validate({**base, **self.params})


class GridSection(_Section):
    cells_per_a: int = Field(default=20, ge=4, description="Grid cells per lattice constant")
    padding_nm: float = Field(default=400.0, gt=0)
    region: GridRegion = GridRegion.QUADRANT
    memory_budget_mib: int = Field(default=1024, ge=1)

    @property
    def memory_budget_bytes(self) -> int:
        return self.memory_budget_mib << 20


class RunSection(_Section):
    steps: int = Field(default=20000, ge=1)
    wavelength_nm: float = Field(default=620.0, gt=0, description="Source center wavelength")
    fractional_bandwidth: float = Field(default=0.12, gt=0, le=1.0)
    polarization: Axis = Axis.Y
    source_offset_nm: tuple[float, float, float] = Field(
        default=(30.0, 60.0, 30.0), description="Dipole position relative to the top-face center"
    )
    sectors: tuple[ParitySector, ...] = tuple(ParitySector)
    courant: float = Field(default=0.5, gt=0, le=MAX_COURANT_3D)
    pml_cells: int = Field(default=10, ge=8)
    threads: int = Field(default=1, ge=1)
    mode_fields: bool = Field(default=True, description="Run a second pass to capture mode fields")


class AnalysisSection(_Section):
    band_nm: tuple[float, float] = (560.0, 680.0)
    monitors: bool = True
    min_quality: float = Field(default=5.0, ge=0)
    parity_tolerance: float = Field(default=0.05, gt=0)
    gamma_perp: float = Field(default=DEFAULT_GAMMA_PERP, gt=0)
    coupling_margin: float = Field(default=1.0, gt=0)
    collection_gain: float = Field(default=10.0, gt=0)
    window_ns: float = Field(default=1000.0, gt=0)

    @model_validator(mode="after")
    def _ordered_band(self) -> "AnalysisSection":
        if not 0 < self.band_nm[0] < self.band_nm[1]:
            raise ValueError("band_nm must be increasing and positive")
        return self


class SpectrumSection(_Section):
    path: Path | None = None
    reference: Path | int | None = None
    windows: tuple[tuple[float, float], ...] = ((602.0, 652.0),)
    peaks_per_window: int | tuple[int, ...] = 1


class BandsSection(_Section):
    k_list: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    bands: int = Field(default=3, ge=1)
    frequency_range: tuple[float, float] = (0.15, 0.5)
    ringdown_steps: int = Field(default=6000, ge=200)
    compare_grooveless: bool = True


class SweepParameter(str, Enum):
    """Axes a sweep can walk along."""

    PRESET = "preset"
    DEFECT_RATIO = "defect_ratio"
    HEIGHT_RATIO = "height_ratio"
    TAPER_COUNT = "taper_count"
    FIELD = "field"


class SweepSection(_Section):
    parameter: SweepParameter
    values: tuple[Any, ...]
    field_name: str | None = Field(default=None, description="GeometrySpec field swept when parameter is 'field'")

    @model_validator(mode="after")
    def _non_empty(self) -> "SweepSection":
        if not self.values:
            raise ValueError("sweep axis is empty")
        if self.parameter is SweepParameter.FIELD and not self.field_name:
            raise ValueError("parameter 'field' needs the field name")
        return self


class OutputSection(_Section):
    directory: Path = Path("out")
    catalog: bool = False


class Scenario(_Section):
    """Top-level scenario document (TOML or JSON)."""

    name: str = "scenario"
    seed: int = Field(default=0, ge=0, lt=2**64)
    geometry: GeometrySection = Field(default_factory=lambda: GeometrySection(preset=PresetName.TABLE1_BASE))
    grid: GridSection = Field(default_factory=GridSection)
    run: RunSection = Field(default_factory=RunSection)
    analysis: AnalysisSection = Field(default_factory=AnalysisSection)
    spectrum: SpectrumSection = Field(default_factory=SpectrumSection)
    bands: BandsSection = Field(default_factory=BandsSection)
    sweep: SweepSection | None = None
    output: OutputSection = Field(default_factory=OutputSection)
