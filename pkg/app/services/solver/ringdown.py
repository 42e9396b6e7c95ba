"""Ringdown runs: probes, flux planes and frequency-domain field capture."""

from dataclasses import dataclass, field

import numpy as np

from app.core.config import config_hash as hash_config
from app.core.errors import ConfigRejectedError, MemoryBudgetError
from app.core.logging import logger
from app.core.units import cell_frequency, time_step_seconds
from app.schemas.simulation import Axis, FluxPlane, SimulationConfig
from app.services.geometry import DEFAULT_MEMORY_BUDGET, DielectricGrid, estimate_memory
from app.services.solver.state import E_COMPONENTS, SimulationState


@dataclass(frozen=True)
class RingdownRecord:
    """Probe and flux time series of one run.

    ``dt`` is the step in solver units, ``dt_seconds`` the same step in
    seconds. Every series has exactly ``steps`` samples; E probes and flux
    sample at (n + 1) * dt, H probes at (n + 3/2) * dt.
    """

    config_hash: str
    cell_size_nm: float
    shape: tuple[int, int, int]
    dt: float
    dt_seconds: float
    steps: int
    shutoff_step: int
    probes: dict[str, np.ndarray]
    flux: dict[str, np.ndarray] = field(default_factory=dict)
    dft_fields: dict[float, dict[str, np.ndarray]] = field(default_factory=dict)

    def post_shutoff(self, name: str) -> np.ndarray:
        """Probe series with the driven part removed."""
        return self.probes[name][self.shutoff_step:]


@dataclass(frozen=True)
class FieldSnapshot:
    """Components and permittivity on one grid plane.

    ``coordinates`` holds the node coordinates (nm) of the two in-plane axes
    in (x, y, z) order with the normal axis left out.
    """

    axis: Axis
    index: int
    position_nm: float
    coordinates: tuple[np.ndarray, np.ndarray]
    fields: dict[str, np.ndarray]
    eps: dict[str, np.ndarray]


@dataclass(frozen=True)
class _CompiledPlane:
    plane: FluxPlane
    index: int
    window: tuple[slice, slice, slice]

    @property
    def axes(self) -> tuple[int, int, int]:
        n = self.plane.axis.index
        return n, (n + 1) % 3, (n + 2) % 3

    def _at(self, index: int) -> tuple:
        window = list(self.window)
        window[self.axes[0]] = index
        return tuple(window)

    def tangential_h(self, fields: dict[str, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
        """Tangential H averaged over the half-cells on both sides of the plane."""
        _, t1, t2 = self.axes
        here, below = self._at(self.index), self._at(self.index - 1)
        return tuple(  # type: ignore[return-value]
            0.5 * (fields["h" + "xyz"[t]][here] + fields["h" + "xyz"[t]][below]) for t in (t1, t2)
        )

    def power(self, fields: dict[str, np.ndarray], h_before: tuple[np.ndarray, np.ndarray]) -> float:
        _, t1, t2 = self.axes
        here = self._at(self.index)
        e1, e2 = fields["e" + "xyz"[t1]][here], fields["e" + "xyz"[t2]][here]
        h_after = self.tangential_h(fields)
        h1 = 0.5 * (h_before[0] + h_after[0])
        h2 = 0.5 * (h_before[1] + h_after[1])
        s = np.real(e1 * np.conj(h2)) - np.real(e2 * np.conj(h1))
        return self.plane.outward * float(np.sum(s))


def _interior(n: int, kind, pml_cells: int) -> tuple[int, int]:
    lo = pml_cells if kind.low_absorbing else 0
    hi = n - pml_cells if kind.high_absorbing else n
    return lo, hi


def _node_index(grid: DielectricGrid, axis: int, position_nm: float) -> int:
    return int(round((position_nm - grid.origin_nm[axis]) / grid.cell_size_nm))


def _compile_plane(state: SimulationState, plane: FluxPlane) -> _CompiledPlane:
    n = plane.axis.index
    shape, kinds, pml = state.shape, state.kinds, state.config.pml_cells
    index = _node_index(state.grid, n, plane.position_nm)
    lo, hi = _interior(shape[n], kinds[n], pml)
    if not max(lo, 1) <= index < hi:
        raise ConfigRejectedError(
            f"flux plane {plane.name!r} at {plane.position_nm} nm is outside the interior along {plane.axis.value}"
        )
    window = [slice(*_interior(shape[a], kinds[a], pml)) for a in range(3)]
    window[n] = slice(None)
    return _CompiledPlane(plane=plane, index=index, window=tuple(window))  # type: ignore[arg-type]


def _compile_probes(state: SimulationState) -> dict[str, tuple[str, tuple[int, int, int]]]:
    compiled = {}
    for probe in state.config.probes:
        component = probe.component.value
        if probe.label in compiled:
            raise ConfigRejectedError(f"duplicate probe label {probe.label!r}")
        compiled[probe.label] = (component, state.grid.index_of(component, probe.position_nm))
    return compiled


def _check_memory(grid: DielectricGrid, config: SimulationConfig, budget: int) -> None:
    required = estimate_memory(grid.shape, config.boundaries.is_complex, len(config.dft_wavelengths_nm))
    if required > budget:
        logger.error(
            "Run exceeds memory budget",
            extra={"shape": grid.shape, "required_bytes": required, "budget_bytes": budget},
        )
        raise MemoryBudgetError(required, budget, grid.shape)


def run_ringdown(
    grid: DielectricGrid,
    config: SimulationConfig,
    memory_budget_bytes: int = DEFAULT_MEMORY_BUDGET,
    run_hash: str | None = None,
) -> RingdownRecord:
    """Drive a grid with the configured sources and record the ringdown.

    Frequency-domain E fields at ``config.dft_wavelengths_nm`` are
    accumulated from the source shut-off onward as sum(E * exp(i w t) * dt).

    Args:
        grid: Permittivity grid.
        config: Solver configuration with at least one probe.
        memory_budget_bytes: Refuse runs whose state would exceed this.
        run_hash: Hash stored in the record; defaults to the hash of ``config``.

    Returns:
        The complete record. Identical inputs give identical records for any
        thread count.

    Raises:
        ConfigRejectedError: No probes, or a probe/plane outside the grid.
        MemoryBudgetError: If the state would not fit.
        InstabilityError: If the fields blow up.
    """
    if not config.probes:
        raise ConfigRejectedError("a ringdown run needs at least one probe")
    _check_memory(grid, config, memory_budget_bytes)

    state = SimulationState(grid, config)
    try:
        probes = _compile_probes(state)
        planes = [_compile_plane(state, plane) for plane in config.flux_planes]
        series = {label: np.zeros(config.steps, dtype=state.dtype) for label in probes}
        flux = {p.plane.name: np.zeros(config.steps) for p in planes}
        omegas = {
            wavelength: 2.0 * np.pi * cell_frequency(wavelength, grid.cell_size_nm)
            for wavelength in config.dft_wavelengths_nm
        }
        dft = {
            wavelength: {c: np.zeros(state.shape, dtype=np.complex128) for c in E_COMPONENTS}
            for wavelength in omegas
        }
        shutoff = min(state.shutoff_step, config.steps)
        h_before: dict[str, tuple[np.ndarray, np.ndarray]] = {}

        def capture(s: SimulationState) -> None:
            for p in planes:
                h_before[p.plane.name] = tuple(h.copy() for h in p.tangential_h(s.fields))  # type: ignore[assignment]

        logger.info(
            "Starting ringdown",
            extra={"shape": grid.shape, "steps": config.steps, "shutoff_step": shutoff, "threads": config.threads},
        )
        for n in range(config.steps):
            state.step(on_electric=capture if planes else None)
            for label, (component, index) in probes.items():
                series[label][n] = state.fields[component][index]
            for p in planes:
                flux[p.plane.name][n] = p.power(state.fields, h_before[p.plane.name])
            if n + 1 >= shutoff and dft:
                t = state.time
                for wavelength, omega in omegas.items():
                    phase = np.exp(1j * omega * t) * state.dt
                    for c in E_COMPONENTS:
                        dft[wavelength][c] += state.fields[c] * phase
            if (n + 1) % config.progress_interval == 0:
                logger.debug("Ringdown progress", extra={"step": n + 1, "steps": config.steps})
    finally:
        state.close()

    record = RingdownRecord(
        config_hash=run_hash or hash_config(config),
        cell_size_nm=grid.cell_size_nm,
        shape=grid.shape,
        dt=state.dt,
        dt_seconds=time_step_seconds(grid.cell_size_nm, config.courant),
        steps=config.steps,
        shutoff_step=shutoff,
        probes=series,
        flux=flux,
        dft_fields=dft,
    )
    logger.info("Finished ringdown", extra={"config_hash": record.config_hash, "steps": config.steps})
    return record


def plane_slice(
    fields: dict[str, np.ndarray], grid: DielectricGrid, axis: Axis, position_nm: float = 0.0
) -> FieldSnapshot:
    """Copy every array of ``fields`` on the grid plane nearest to ``position_nm``.

    Raises:
        ConfigRejectedError: If the plane lies outside the grid.
    """
    n = axis.index
    index = _node_index(grid, n, position_nm)
    if not 0 <= index < grid.shape[n]:
        raise ConfigRejectedError(f"plane {axis.value}={position_nm} nm lies outside the grid")
    take = [slice(None)] * 3
    take[n] = index
    take = tuple(take)
    in_plane = [a for a in range(3) if a != n]
    coordinates = tuple(
        grid.origin_nm[a] + np.arange(grid.shape[a]) * grid.cell_size_nm for a in in_plane
    )
    return FieldSnapshot(
        axis=axis,
        index=index,
        position_nm=grid.origin_nm[n] + index * grid.cell_size_nm,
        coordinates=coordinates,  # type: ignore[arg-type]
        fields={name: np.array(f[take], copy=True) for name, f in fields.items()},
        eps={c: np.array(grid.eps(c)[take], copy=True) for c in E_COMPONENTS},
    )


def snapshot_fields(state: SimulationState, axis: Axis, position_nm: float = 0.0) -> FieldSnapshot:
    """Bit-exact copy of all six current field components on one plane."""
    return plane_slice(state.fields, state.grid, axis, position_nm)
