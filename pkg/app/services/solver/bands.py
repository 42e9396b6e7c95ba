"""Guided-band dispersion of one period from Bloch-periodic ringdowns."""

import math
from dataclasses import dataclass

import numpy as np

from app.core.errors import InvalidInputError
from app.core.logging import logger
from app.schemas.simulation import Axis, Boundaries, BoundaryKind, DipoleSource, FieldComponent, Probe, SimulationConfig
from app.services.analysis import harmonic_inversion
from app.services.geometry import DielectricGrid
from app.services.solver.ringdown import run_ringdown
from app.services.solver.state import SourceWaveform

# Fractions of the interior used for source/probe sites; none lies on a symmetry plane
_SITE_FRACTIONS = ((0.37, 0.23, 0.31), (0.61, 0.44, 0.71), (0.29, 0.67, 0.53))
_POLARIZATIONS = (Axis.X, Axis.Y, Axis.Z)


@dataclass(frozen=True)
class BandPoint:
    """Mode frequencies (c/a) at one Bloch wavevector (pi/a)."""

    k: float
    frequencies: tuple[float, ...]
    requested: int

    @property
    def shortfall(self) -> bool:
        return len(self.frequencies) < self.requested


def _sites(grid: DielectricGrid, kinds, pml_cells: int) -> list[tuple[float, float, float]]:
    """Physical positions of low-symmetry sites, pulled toward high permittivity."""
    lo = [pml_cells if kind.low_absorbing else 0 for kind in kinds]
    hi = [n - pml_cells if kind.high_absorbing else n for n, kind in zip(grid.shape, kinds)]
    dense = grid.eps_y[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]] > 0.5 * (grid.eps_y.max() + 1.0)
    cells = np.argwhere(dense) if grid.eps_y.max() > 1.0 else None
    sites = []
    for fractions in _SITE_FRACTIONS:
        if cells is not None and cells.size:
            pick = cells[int(fractions[0] * (len(cells) - 1))]
            index = [lo[a] + int(pick[a]) for a in range(3)]
            index[2] = lo[2] + int(fractions[2] * (hi[2] - lo[2]))
        else:
            index = [lo[a] + int(f * (hi[a] - lo[a])) for a, f in enumerate(fractions)]
        sites.append(tuple(grid.origin_nm[a] + index[a] * grid.cell_size_nm for a in range(3)))
    return sites  # type: ignore[return-value]


def _merge(frequencies: list[float], tolerance: float) -> list[float]:
    merged: list[float] = []
    for f in sorted(frequencies):
        if merged and f - merged[-1] <= tolerance * f:
            continue
        merged.append(f)
    return merged


def band_structure(
    unit_cell: DielectricGrid,
    k_list: list[float],
    bands: int = 3,
    frequency_range: tuple[float, float] = (0.15, 0.5),
    ringdown_steps: int = 6000,
    transverse: BoundaryKind = BoundaryKind.ABSORBING,
    courant: float = 0.5,
    pml_cells: int = 10,
    threads: int = 1,
    merge_tolerance: float = 0.01,
    min_q: float = 20.0,
) -> list[BandPoint]:
    """Band frequencies of a one-period cell for each Bloch wavevector.

    Args:
        unit_cell: Grid whose z extent is exactly one lattice period.
        k_list: Wavevectors along z in units of pi/a.
        bands: Number of lowest bands to report.
        frequency_range: Search band in units of c/a.
        ringdown_steps: Steps recorded after the sources shut off.
        transverse: Boundary kind for x and y (absorbing for guided bands,
            periodic for closed validation cells).
        courant: Courant number.
        pml_cells: Absorbing-layer thickness on absorbing axes.
        threads: Solver worker threads.
        merge_tolerance: Relative distance below which probe peaks are one band.
        min_q: Poles broader than this are treated as radiation, not bands.

    Returns:
        One :class:`BandPoint` per k; a point with fewer than ``bands``
        frequencies has ``shortfall`` set.
    """
    f_lo, f_hi = frequency_range
    if not 0 < f_lo < f_hi:
        raise InvalidInputError(f"frequency_range must satisfy 0 < lo < hi, got {frequency_range}")
    if bands < 1:
        raise InvalidInputError("bands must be at least 1")
    cells_per_a = unit_cell.shape[2]
    center = 0.5 * (f_lo + f_hi)
    bandwidth = min(1.0, (f_hi - f_lo) / (4.0 * center))
    wavelength_nm = unit_cell.cell_size_nm * cells_per_a / center
    kinds = (transverse, transverse, BoundaryKind.BLOCH)
    sites = _sites(unit_cell, kinds, pml_cells)
    sources = tuple(
        DipoleSource(position_nm=site, polarization=pol, wavelength_nm=wavelength_nm, fractional_bandwidth=bandwidth)
        for site, pol in zip(sites, _POLARIZATIONS)
    )
    probes = tuple(
        Probe(component=component, position_nm=site, name=f"{component.value}{i}")
        for i, site in enumerate(sites)
        for component in (FieldComponent.EX, FieldComponent.EY, FieldComponent.EZ)
    )

    points = []
    for k in k_list:
        base = SimulationConfig(
            cell_size_nm=unit_cell.cell_size_nm,
            courant=courant,
            pml_cells=pml_cells,
            boundaries=Boundaries(x=transverse, y=transverse, z=BoundaryKind.BLOCH, bloch_phase=float(np.pi * k)),
            steps=1,
            sources=sources,
            probes=probes,
            threads=threads,
        )
        shutoff = math.ceil(max(SourceWaveform.from_source(s, unit_cell.cell_size_nm).shutoff_time for s in sources) / courant)
        config = base.model_copy(update={"steps": shutoff + ringdown_steps})
        record = run_ringdown(unit_cell, config)

        band_cells = (f_lo / cells_per_a, f_hi / cells_per_a)
        found: list[float] = []
        for label in record.probes:
            signal = record.post_shutoff(label)
            if not np.any(signal):
                continue
            for mode in harmonic_inversion(signal, record.dt, band_cells, min_relative_amplitude=1e-3):
                if mode.quality_factor >= min_q:
                    found.append(mode.frequency * cells_per_a)
        frequencies = tuple(_merge(found, merge_tolerance)[:bands])
        point = BandPoint(k=float(k), frequencies=frequencies, requested=bands)
        if point.shortfall:
            logger.warning("Fewer bands resolved than requested", extra={"k": k, "found": len(frequencies), "requested": bands})
        points.append(point)
    return points
