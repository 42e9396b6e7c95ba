"""Nanobeam geometry schemas and presets."""

import re
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

LENGTH_FIELDS = (
    "lattice_constant_a",
    "defect_spacing_D",
    "beam_height_H",
    "beam_width_W",
    "beam_length_L",
    "groove_width_Wx",
    "groove_length_Wz",
    "groove_depth_h",
    "clearance_below_Hs",
    "clearance_side_Ws",
)

_LENGTH_PATTERN = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(nm|um|µm|a)?\s*$")
_UNIT_SCALE_NM = {None: 1.0, "nm": 1.0, "um": 1000.0, "µm": 1000.0}


def parse_length(value: Any, lattice_constant_nm: float | None = None) -> float:
    """Normalize a length to nm.

    Args:
        value: A number (nm) or a string such as ``"450nm"``, ``"1.24um"``, ``"0.9a"``.
        lattice_constant_nm: Value of ``a`` used to resolve the ``a`` suffix.

    Returns:
        Length in nm.

    Raises:
        ValueError: If the string cannot be parsed or ``a`` is unknown.
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"length must be a number or a string, got {type(value).__name__}")
    match = _LENGTH_PATTERN.match(value)
    if match is None:
        raise ValueError(f"unparseable length {value!r}")
    number, unit = float(match.group(1)), match.group(2)
    if unit == "a":
        if lattice_constant_nm is None:
            raise ValueError("lattice constant cannot itself be given in units of a")
        return number * lattice_constant_nm
    return number * _UNIT_SCALE_NM[unit]


class GeometrySpec(BaseModel):
    """Parametric triangular nanobeam cavity; every length is stored in nm."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    lattice_constant_a: float = Field(..., gt=0, description="Mirror period a")
    defect_spacing_D: float = Field(..., gt=0, description="Central gap between the two innermost grooves")
    beam_height_H: float = Field(..., gt=0, description="Depth of the triangle apex below the top face")
    beam_width_W: float = Field(..., gt=0, description="Width of the flat top face")
    beam_length_L: float = Field(..., gt=0, description="Beam length along z")
    groove_width_Wx: float = Field(..., gt=0, description="Groove extent along z")
    groove_length_Wz: float = Field(..., gt=0, description="Groove extent along x (transverse)")
    groove_depth_h: float = Field(..., gt=0, description="Groove depth below the top face")
    clearance_below_Hs: float = Field(..., gt=0, description="Vertical gap to the substrate")
    clearance_side_Ws: float = Field(..., gt=0, description="Lateral gap to the trench walls")
    taper: tuple[float, ...] = Field(default=(), description="Per-gap spacings, symmetric about the center")
    refractive_index_n: float = Field(default=2.4, ge=1.0, description="Beam refractive index")
    grooves_per_side: int = Field(default=10, ge=0, description="Grooves on each side of the cavity center")

    @model_validator(mode="before")
    @classmethod
    def _normalize_lengths(cls, data: Any) -> Any:
        """Resolve unit-tagged lengths to nm before field validation."""
        if not isinstance(data, dict) or "lattice_constant_a" not in data:
            return data
        values = dict(data)
        a_nm = parse_length(values["lattice_constant_a"])
        values["lattice_constant_a"] = a_nm
        for name in LENGTH_FIELDS[1:]:
            if name in values:
                values[name] = parse_length(values[name], a_nm)
        if "taper" in values and values["taper"] is not None:
            values["taper"] = tuple(parse_length(v, a_nm) for v in values["taper"])
        return values

    @model_validator(mode="after")
    def _check_invariants(self) -> "GeometrySpec":
        """Enforce cross-field constraints of the parametric model."""
        if self.groove_depth_h > self.beam_height_H:
            raise ValueError("groove_depth_h must not exceed beam_height_H")
        if self.groove_length_Wz > self.beam_width_W:
            raise ValueError("groove_length_Wz must not exceed beam_width_W")
        if self.taper:
            if len(self.taper) % 2 == 0:
                raise ValueError("taper must have an odd number of gaps")
            if any(g <= 0 for g in self.taper):
                raise ValueError("taper gaps must be positive")
            if tuple(reversed(self.taper)) != self.taper:
                raise ValueError("taper must be palindromic")
            if self.grooves_per_side < len(self.taper) // 2 + 1:
                raise ValueError("grooves_per_side is too small to hold the taper")
        if self.grooves_per_side > 0:
            span = 2.0 * self.outermost_groove_offset() + self.groove_width_Wx
            if span > self.beam_length_L:
                raise ValueError(
                    f"groove pattern spans {span:.1f} nm, longer than beam_length_L={self.beam_length_L:.1f} nm"
                )
        return self

    def outward_gaps(self) -> list[float]:
        """Gaps between consecutive grooves on one side, from the center outward.

        The first entry is half of the central gap (center to first groove).
        """
        if self.grooves_per_side == 0:
            return []
        if self.taper:
            middle = len(self.taper) // 2
            central, tapered = self.taper[middle], list(self.taper[middle + 1:])
        else:
            central, tapered = self.defect_spacing_D, []
        regular = [self.lattice_constant_a] * (self.grooves_per_side - 1 - len(tapered))
        return [central / 2.0, *tapered, *regular]

    def outermost_groove_offset(self) -> float:
        """Distance from the cavity center to the outermost groove center."""
        return float(sum(self.outward_gaps()))


class PresetName(str, Enum):
    """Named geometries shipped with the toolkit."""

    TABLE1_BASE = "table1-base"
    FIG7_HIGHQ = "fig7-highq"
    GROOVELESS = "grooveless"


_TABLE1_NM: dict[str, Any] = {
    "lattice_constant_a": 205.0,
    "defect_spacing_D": 180.0,
    "beam_height_H": 450.0,
    "beam_width_W": 1240.0,
    "beam_length_L": 8000.0,
    "groove_width_Wx": 82.0,
    "groove_length_Wz": 460.0,
    "groove_depth_h": 225.0,
    "clearance_below_Hs": 5000.0,
    "clearance_side_Ws": 6000.0,
    "refractive_index_n": 2.4,
    "grooves_per_side": 10,
}


def preset(name: str | PresetName) -> GeometrySpec:
    """Return a named geometry.

    Args:
        name: One of :class:`PresetName`.

    Returns:
        The preset geometry.

    Raises:
        ValueError: If the name is unknown.
    """
    key = PresetName(name)
    if key is PresetName.TABLE1_BASE:
        return GeometrySpec.model_validate(_TABLE1_NM)
    if key is PresetName.GROOVELESS:
        return GeometrySpec.model_validate({**_TABLE1_NM, "grooves_per_side": 0})
    # 11 gaps at 0.9a in the middle, thinner beam, longer mirrors
    return GeometrySpec.model_validate(
        {
            **_TABLE1_NM,
            "defect_spacing_D": "0.9a",
            "beam_height_H": "1.65a",
            "groove_depth_h": "0.825a",
            "taper": ["0.9a"] * 11,
            "grooves_per_side": 15,
        }
    )


class GridRegion(str, Enum):
    """Part of the structure a dielectric grid covers."""

    FULL = "full"
    QUADRANT = "quadrant"
    UNIT_CELL = "unit-cell"
