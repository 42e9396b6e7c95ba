"""Time-domain solver configuration schemas."""

import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

MAX_COURANT_3D = 1.0 / math.sqrt(3.0)


class BoundaryKind(str, Enum):
    """Treatment of the two faces of one axis.

    Mirror kinds put a symmetry plane on the low face (first grid node) and an
    absorbing layer on the high face. Their parity is that of the E field:
    ``mirror-odd`` is a perfect-conductor plane, ``mirror-even`` a
    perfect-magnetic-conductor plane.
    """

    ABSORBING = "absorbing"
    MIRROR_EVEN = "mirror-even"
    MIRROR_ODD = "mirror-odd"
    BLOCH = "bloch"
    PERIODIC = "periodic"
    PEC = "pec"

    @property
    def low_absorbing(self) -> bool:
        return self is BoundaryKind.ABSORBING

    @property
    def high_absorbing(self) -> bool:
        return self in (BoundaryKind.ABSORBING, BoundaryKind.MIRROR_EVEN, BoundaryKind.MIRROR_ODD)

    @property
    def wraps(self) -> bool:
        return self in (BoundaryKind.BLOCH, BoundaryKind.PERIODIC)


class Axis(str, Enum):
    """Cartesian axis of the nanobeam frame."""

    X = "x"
    Y = "y"
    Z = "z"

    @property
    def index(self) -> int:
        return "xyz".index(self.value)


class FieldComponent(str, Enum):
    """Yee field component."""

    EX = "ex"
    EY = "ey"
    EZ = "ez"
    HX = "hx"
    HY = "hy"
    HZ = "hz"


class Boundaries(BaseModel):
    """Boundary kind per axis plus the Bloch phase k*a (radians)."""

    model_config = ConfigDict(frozen=True)

    x: BoundaryKind = BoundaryKind.ABSORBING
    y: BoundaryKind = BoundaryKind.ABSORBING
    z: BoundaryKind = BoundaryKind.ABSORBING
    bloch_phase: float = Field(default=0.0, description="Phase k*a accumulated over one period")

    def kinds(self) -> tuple[BoundaryKind, BoundaryKind, BoundaryKind]:
        """Kinds ordered (x, y, z)."""
        return self.x, self.y, self.z

    @model_validator(mode="after")
    def _single_bloch_axis(self) -> "Boundaries":
        if sum(kind is BoundaryKind.BLOCH for kind in self.kinds()) > 1:
            raise ValueError("at most one axis may carry Bloch boundaries")
        if self.y in (BoundaryKind.MIRROR_EVEN, BoundaryKind.MIRROR_ODD):
            raise ValueError("the beam has no mirror plane normal to y")
        return self

    @property
    def is_complex(self) -> bool:
        """Whether fields must be complex (a Bloch axis with nonzero phase)."""
        return any(k is BoundaryKind.BLOCH for k in self.kinds()) and self.bloch_phase != 0.0


class DipoleSource(BaseModel):
    """Point current with a Gaussian-modulated sinusoidal time profile."""

    model_config = ConfigDict(frozen=True)

    position_nm: tuple[float, float, float]
    polarization: Axis = Axis.Y
    wavelength_nm: float = Field(..., gt=0, description="Center wavelength of the envelope")
    fractional_bandwidth: float = Field(default=0.2, gt=0, le=1.0, description="Spectral std / center frequency")
    amplitude: float = 1.0


class Probe(BaseModel):
    """Point sampler of one field component."""

    model_config = ConfigDict(frozen=True)

    component: FieldComponent
    position_nm: tuple[float, float, float]
    name: str | None = None

    @property
    def label(self) -> str:
        """Channel name used in records."""
        return self.name or f"{self.component.value}@{','.join(f'{v:g}' for v in self.position_nm)}"


class FluxPlane(BaseModel):
    """Plane normal to an axis accumulating outward Poynting power."""

    model_config = ConfigDict(frozen=True)

    name: str
    axis: Axis
    position_nm: float
    outward: int = Field(default=1, description="+1 counts power along +axis, -1 along -axis")

    @model_validator(mode="after")
    def _unit_direction(self) -> "FluxPlane":
        if self.outward not in (-1, 1):
            raise ValueError("outward must be +1 or -1")
        return self


class SimulationConfig(BaseModel):
    """Everything the leapfrog solver needs besides the permittivity grid."""

    model_config = ConfigDict(frozen=True)

    cell_size_nm: float = Field(..., gt=0)
    courant: float = Field(default=0.5, gt=0, le=MAX_COURANT_3D)
    pml_cells: int = Field(default=10, ge=8)
    pml_order: float = Field(default=3.0, ge=1.0)
    pml_reflection: float = Field(default=1e-8, gt=0, lt=1)
    pml_kappa_max: float = Field(default=1.0, ge=1.0)
    pml_alpha_max: float = Field(default=0.0, ge=0.0)
    boundaries: Boundaries = Field(default_factory=Boundaries)
    steps: int = Field(..., ge=1)
    sources: tuple[DipoleSource, ...] = ()
    probes: tuple[Probe, ...] = ()
    flux_planes: tuple[FluxPlane, ...] = ()
    dft_wavelengths_nm: tuple[float, ...] = ()
    threads: int = Field(default=1, ge=1)
    check_interval: int = Field(default=100, ge=1)
    progress_interval: int = Field(default=1000, ge=1)
