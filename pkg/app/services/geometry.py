"""Triangular nanobeam construction and rasterization to a Yee permittivity grid.

Frame: origin at the center of the top face, x transverse, y pointing down
into the beam, z along the beam measured from the cavity center.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum

import numpy as np

from app.core.errors import ConfigRejectedError, InvalidInputError, MemoryBudgetError
from app.core.logging import logger
from app.schemas.geometry import GeometrySpec, GridRegion

# Subsample offsets (in cells) of the fixed 4x4x4 volume-fraction estimate
SUBSAMPLE_OFFSETS = np.array([-0.375, -0.125, 0.125, 0.375])

# Offset of each E component from its grid node, in cells
COMPONENT_OFFSETS: dict[str, tuple[float, float, float]] = {
    "ex": (0.5, 0.0, 0.0),
    "ey": (0.0, 0.5, 0.0),
    "ez": (0.0, 0.0, 0.5),
    "hx": (0.0, 0.5, 0.5),
    "hy": (0.5, 0.0, 0.5),
    "hz": (0.5, 0.5, 0.0),
}

DEFAULT_MEMORY_BUDGET = 1 << 30


class Material(str, Enum):
    """Material tag returned by :func:`material_at`."""

    DIAMOND = "diamond"
    VACUUM = "vacuum"


@dataclass(frozen=True)
class DielectricGrid:
    """Relative permittivity sampled at the three staggered E locations."""

    cell_size_nm: float
    origin_nm: tuple[float, float, float]
    eps_x: np.ndarray
    eps_y: np.ndarray
    eps_z: np.ndarray
    region: GridRegion = GridRegion.FULL
    refractive_index: float = 1.0

    @property
    def shape(self) -> tuple[int, int, int]:
        """Grid dimensions (Nx, Ny, Nz)."""
        return tuple(self.eps_x.shape)  # type: ignore[return-value]

    def eps(self, component: str) -> np.ndarray:
        """Permittivity array aligned with an E component ('ex', 'ey', 'ez')."""
        return {"ex": self.eps_x, "ey": self.eps_y, "ez": self.eps_z}[component]

    def coordinates(self, component: str, axis: int) -> np.ndarray:
        """Physical coordinates (nm) of a field component's samples along one axis."""
        offset = COMPONENT_OFFSETS[component][axis]
        n = self.shape[axis]
        return self.origin_nm[axis] + (np.arange(n) + offset) * self.cell_size_nm

    def index_of(self, component: str, point_nm: tuple[float, float, float]) -> tuple[int, int, int]:
        """Nearest sample index of a component to a physical point.

        Raises:
            ConfigRejectedError: If the point lies outside the grid.
        """
        index = []
        for axis, coordinate in enumerate(point_nm):
            offset = COMPONENT_OFFSETS[component][axis]
            i = int(round((coordinate - self.origin_nm[axis]) / self.cell_size_nm - offset))
            if not 0 <= i < self.shape[axis]:
                raise ConfigRejectedError(
                    f"point {point_nm} lies outside the grid along axis {'xyz'[axis]}"
                )
            index.append(i)
        return tuple(index)  # type: ignore[return-value]


def groove_centers(spec: GeometrySpec) -> np.ndarray:
    """Sorted z positions (nm) of all groove centers, mirror-symmetric about z = 0."""
    offsets = np.cumsum(spec.outward_gaps())
    return np.concatenate([-offsets[::-1], offsets])


def _in_triangle(spec: GeometrySpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    half_width = 0.5 * spec.beam_width_W * (1.0 - y / spec.beam_height_H)
    return (y >= 0.0) & (y <= spec.beam_height_H) & (np.abs(x) <= half_width)


def _in_groove_xy(spec: GeometrySpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (np.abs(x) <= 0.5 * spec.groove_length_Wz) & (y >= 0.0) & (y <= spec.groove_depth_h)


def _in_groove_z(centers: np.ndarray, half_width: float, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if centers.size == 0:
        return np.zeros(z.shape, dtype=bool)
    right = np.clip(np.searchsorted(centers, z), 0, centers.size - 1)
    left = np.clip(right - 1, 0, centers.size - 1)
    nearest = np.minimum(np.abs(z - centers[left]), np.abs(z - centers[right]))
    return nearest <= half_width


def material_mask(spec: GeometrySpec, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vectorized diamond indicator for broadcastable coordinate arrays (nm)."""
    x, y, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(z, float))
    in_beam = _in_triangle(spec, x, y) & (np.abs(z) <= 0.5 * spec.beam_length_L)
    groove = _in_groove_xy(spec, x, y) & _in_groove_z(groove_centers(spec), 0.5 * spec.groove_width_Wx, z)
    return in_beam & ~groove


def material_at(spec: GeometrySpec, point: tuple[float, float, float]) -> Material:
    """Material at one point (nm) of the nanobeam frame."""
    inside = bool(material_mask(spec, point[0], point[1], point[2]))
    return Material.DIAMOND if inside else Material.VACUUM


def estimate_memory(
    shape: tuple[int, int, int], complex_fields: bool = False, dft_frequencies: int = 0
) -> int:
    """Bytes needed by a solver state on a grid of the given shape.

    Counts six field arrays, three update coefficients, four work arrays and
    three complex accumulators per DFT frequency.
    """
    cells = int(np.prod(shape))
    field_bytes = 16 if complex_fields else 8
    return cells * (10 * field_bytes + 3 * 8 + dft_frequencies * 3 * 16)


def _check_budget(shape: tuple[int, int, int], budget_bytes: int) -> None:
    required = estimate_memory(shape)
    if required > budget_bytes:
        logger.error(
            "Grid exceeds memory budget",
            extra={"shape": shape, "required_bytes": required, "budget_bytes": budget_bytes},
        )
        raise MemoryBudgetError(required, budget_bytes, shape)


def _subsamples(origin: float, n: int, offset: float, cell: float) -> np.ndarray:
    """Subsample coordinates, shape (n, 4), of the cells centered on each sample."""
    centers = origin + (np.arange(n) + offset) * cell
    return centers[:, None] + SUBSAMPLE_OFFSETS[None, :] * cell


def _fill_fraction(
    spec: GeometrySpec,
    xs: np.ndarray,
    ys: np.ndarray,
    zs: np.ndarray,
    beam_z: Callable[[np.ndarray], np.ndarray],
    groove_z: Callable[[np.ndarray], np.ndarray],
) -> np.ndarray:
    """Diamond volume fraction of every cell from its 4x4x4 tensor subsamples.

    The beam is a prism along z with z-independent groove boxes, so the mean
    over the tensor subsamples factorizes into (x, y) and z parts.
    """
    x = xs[:, :, None, None]
    y = ys[None, None, :, :]
    triangle = _in_triangle(spec, x, y)
    cross = triangle.mean(axis=(1, 3))
    carved = (triangle & _in_groove_xy(spec, x, y)).mean(axis=(1, 3))
    along = beam_z(zs).mean(axis=1)
    grooved = (groove_z(zs) & beam_z(zs)).mean(axis=1)
    return cross[:, :, None] * along[None, None, :] - carved[:, :, None] * grooved[None, None, :]


def _rasterize_box(
    spec: GeometrySpec,
    cell: float,
    shape: tuple[int, int, int],
    origin: tuple[float, float, float],
    region: GridRegion,
    beam_z: Callable[[np.ndarray], np.ndarray],
    groove_z: Callable[[np.ndarray], np.ndarray],
) -> DielectricGrid:
    contrast = spec.refractive_index_n**2 - 1.0
    eps = {}
    for component in ("ex", "ey", "ez"):
        ox, oy, oz = COMPONENT_OFFSETS[component]
        fraction = _fill_fraction(
            spec,
            _subsamples(origin[0], shape[0], ox, cell),
            _subsamples(origin[1], shape[1], oy, cell),
            _subsamples(origin[2], shape[2], oz, cell),
            beam_z,
            groove_z,
        )
        eps[component] = 1.0 + contrast * fraction
    return DielectricGrid(
        cell_size_nm=cell,
        origin_nm=origin,
        eps_x=eps["ex"],
        eps_y=eps["ey"],
        eps_z=eps["ez"],
        region=region,
        refractive_index=spec.refractive_index_n,
    )


def _transverse_extent(spec: GeometrySpec, cell: float, padding: float, region: GridRegion):
    half_x = math.ceil((0.5 * spec.beam_width_W + padding) / cell)
    top = math.ceil(padding / cell)
    ny = top + math.ceil((spec.beam_height_H + padding) / cell)
    if region is GridRegion.QUADRANT:
        return half_x, 0.0, ny, -top * cell
    return 2 * half_x, -half_x * cell, ny, -top * cell


def rasterize(
    spec: GeometrySpec,
    cell_size: float,
    padding: float,
    region: GridRegion = GridRegion.FULL,
    absorbing_cells: int = 10,
    memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET,
) -> DielectricGrid:
    """Rasterize the beam onto a staggered grid with scalar subpixel averaging.

    Args:
        spec: Beam geometry.
        cell_size: Grid spacing in nm.
        padding: Vacuum margin in nm on every open side (absorbing layer included).
        region: Full domain or the x >= 0, z >= 0 quadrant.
        absorbing_cells: Absorbing-layer thickness the padding has to hold.
        memory_budget_bytes: Refuse grids whose solver state would exceed this.

    Returns:
        The permittivity grid. In the full region the beam axis and the cavity
        center sit on grid nodes half-way through the x and z ranges; in the
        quadrant they sit on node 0.

    Raises:
        InvalidInputError: On nonpositive cell size or too little padding.
        MemoryBudgetError: If the state would not fit the budget.
    """
    if cell_size <= 0:
        raise InvalidInputError("cell_size must be positive")
    if padding < absorbing_cells * cell_size:
        raise InvalidInputError(
            f"padding {padding:.1f} nm is thinner than the {absorbing_cells}-cell absorbing layer"
        )
    nx, x0, ny, y0 = _transverse_extent(spec, cell_size, padding, region)
    half_z = math.ceil((0.5 * spec.beam_length_L + padding) / cell_size)
    if region is GridRegion.QUADRANT:
        nz, z0 = half_z, 0.0
    else:
        nz, z0 = 2 * half_z, -half_z * cell_size
    shape = (nx, ny, nz)
    _check_budget(shape, memory_budget_bytes)

    centers = groove_centers(spec)
    half_length = 0.5 * spec.beam_length_L
    grid = _rasterize_box(
        spec,
        cell_size,
        shape,
        (x0, y0, z0),
        region,
        beam_z=lambda z: np.abs(z) <= half_length,
        groove_z=lambda z: _in_groove_z(centers, 0.5 * spec.groove_width_Wx, z),
    )
    logger.info(
        "Rasterized nanobeam",
        extra={"shape": shape, "cell_size_nm": cell_size, "region": region.value},
    )
    return grid


def rasterize_unit_cell(
    spec: GeometrySpec,
    cells_per_a: int,
    padding: float,
    absorbing_cells: int = 10,
    memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET,
) -> DielectricGrid:
    """Rasterize one mirror period (length a along z, groove centered at z = 0).

    A spec with ``grooves_per_side == 0`` gives the uniform waveguide cell.
    """
    if cells_per_a < 4:
        raise InvalidInputError("cells_per_a must be at least 4")
    cell = spec.lattice_constant_a / cells_per_a
    if padding < absorbing_cells * cell:
        raise InvalidInputError("padding is thinner than the absorbing layer")
    nx, x0, ny, y0 = _transverse_extent(spec, cell, padding, GridRegion.FULL)
    shape = (nx, ny, cells_per_a)
    _check_budget(shape, memory_budget_bytes)
    has_groove = spec.grooves_per_side > 0
    half_groove = 0.5 * spec.groove_width_Wx
    return _rasterize_box(
        spec,
        cell,
        shape,
        (x0, y0, -0.5 * spec.lattice_constant_a),
        GridRegion.UNIT_CELL,
        beam_z=lambda z: np.ones(z.shape, dtype=bool),
        groove_z=lambda z: (np.abs(z) <= half_groove) if has_groove else np.zeros(z.shape, dtype=bool),
    )
