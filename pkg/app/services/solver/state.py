"""Leapfrog state of the staggered-grid Maxwell solver.

Field layout per cell (i, j, k), in cells:

    ex (i+1/2, j, k)      hx (i, j+1/2, k+1/2)
    ey (i, j+1/2, k)      hy (i+1/2, j, k+1/2)
    ez (i, j, k+1/2)      hz (i+1/2, j+1/2, k)

Between steps the state holds E at integer time n*dt and H at (n+1/2)*dt.
"""

import math
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from app.core.errors import ConfigRejectedError, InstabilityError
from app.core.logging import logger
from app.core.units import cell_frequency
from app.schemas.simulation import Axis, BoundaryKind, DipoleSource, SimulationConfig
from app.services.geometry import DielectricGrid
from app.services.solver.cpml import E_TERMS, H_TERMS, Cpml

E_COMPONENTS = ("ex", "ey", "ez")
H_COMPONENTS = ("hx", "hy", "hz")
MIN_CELLS_PER_WAVELENGTH = 10


@dataclass(frozen=True)
class SourceWaveform:
    """Gaussian-modulated sinusoid in solver time units.

    The envelope peaks at ``4 * width`` and the source shuts off four widths
    after that peak, at ``8 * width``. Ringdown analysis starts at the shut-off.
    """

    frequency: float
    width: float
    amplitude: float

    @classmethod
    def from_source(cls, source: DipoleSource, cell_size_nm: float) -> "SourceWaveform":
        frequency = cell_frequency(source.wavelength_nm, cell_size_nm)
        width = 1.0 / (2.0 * math.pi * source.fractional_bandwidth * frequency)
        return cls(frequency=frequency, width=width, amplitude=source.amplitude)

    @property
    def peak_time(self) -> float:
        return 4.0 * self.width

    @property
    def shutoff_time(self) -> float:
        return 8.0 * self.width

    def __call__(self, t: float) -> float:
        if t > self.shutoff_time:
            return 0.0
        tau = t - self.peak_time
        return self.amplitude * math.sin(2.0 * math.pi * self.frequency * tau) * math.exp(
            -0.5 * (tau / self.width) ** 2
        )

    def derivative(self, t: np.ndarray) -> np.ndarray:
        """Analytic time derivative, vectorized (zero after shut-off)."""
        tau = np.asarray(t, dtype=float) - self.peak_time
        omega = 2.0 * math.pi * self.frequency
        envelope = np.exp(-0.5 * (tau / self.width) ** 2)
        value = self.amplitude * envelope * (
            omega * np.cos(omega * tau) - tau / self.width**2 * np.sin(omega * tau)
        )
        return np.where(np.asarray(t) > self.shutoff_time, 0.0, value)


@dataclass(frozen=True)
class _CompiledSource:
    component: str
    index: tuple[int, int, int]
    waveform: SourceWaveform


def _tangential(axis: int) -> tuple[str, str]:
    return tuple(c for c in E_COMPONENTS if c[1] != "xyz"[axis])  # type: ignore[return-value]


class SimulationState:
    """Fields, update coefficients and boundary machinery of one run."""

    def __init__(self, grid: DielectricGrid, config: SimulationConfig):
        self.grid = grid
        self.config = config
        self.shape = grid.shape
        self.kinds = config.boundaries.kinds()
        self.dt = config.courant
        self.step_index = 0
        self._validate()

        self.dtype = np.complex128 if config.boundaries.is_complex else np.float64
        self.bloch_factor = complex(np.exp(1j * config.boundaries.bloch_phase))
        self.fields: dict[str, np.ndarray] = {
            c: np.zeros(self.shape, dtype=self.dtype) for c in E_COMPONENTS + H_COMPONENTS
        }
        self.coefficients = {c: self.dt / grid.eps(c) for c in E_COMPONENTS}
        self.cpml = Cpml(self.shape, self.kinds, config, self.dt, np.dtype(self.dtype))
        self.sources = [self._compile(source) for source in config.sources]
        self._slabs = [
            (int(s[0]), int(s[-1]) + 1)
            for s in np.array_split(np.arange(self.shape[0]), min(config.threads, self.shape[0]))
        ]
        self._pool = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None

    def _validate(self) -> None:
        if not math.isclose(self.grid.cell_size_nm, self.config.cell_size_nm, rel_tol=1e-9):
            raise ConfigRejectedError("config cell size does not match the grid")
        if float(min(self.grid.eps_x.min(), self.grid.eps_y.min(), self.grid.eps_z.min())) < 1.0:
            raise ConfigRejectedError("permittivity below 1 breaks the stability bound")
        for source in self.config.sources:
            cells = source.wavelength_nm / (self.grid.refractive_index * self.grid.cell_size_nm)
            if cells < MIN_CELLS_PER_WAVELENGTH:
                raise ConfigRejectedError(
                    f"source wavelength {source.wavelength_nm} nm spans {cells:.1f} cells in the medium, "
                    f"need at least {MIN_CELLS_PER_WAVELENGTH}"
                )

    def _compile(self, source: DipoleSource) -> _CompiledSource:
        component = polarization_component(source.polarization)
        return _CompiledSource(
            component=component,
            index=self.grid.index_of(component, source.position_nm),
            waveform=SourceWaveform.from_source(source, self.grid.cell_size_nm),
        )

    @property
    def time(self) -> float:
        """Time of the E field in solver units."""
        return self.step_index * self.dt

    @property
    def shutoff_step(self) -> int:
        """First step index after which every source is silent."""
        if not self.sources:
            return 0
        return math.ceil(max(s.waveform.shutoff_time for s in self.sources) / self.dt)

    # -- boundary ghosts ---------------------------------------------------

    def _low_ghost(self, f: np.ndarray, axis: int) -> np.ndarray:
        kind = self.kinds[axis]
        first = [slice(None)] * 3
        if kind.wraps:
            first[axis] = slice(-1, None)
            factor = self.bloch_factor.conjugate() if kind is BoundaryKind.BLOCH else 1.0
            return f[tuple(first)] * factor
        first[axis] = slice(0, 1)
        if kind is BoundaryKind.MIRROR_EVEN:
            return -f[tuple(first)]
        if kind is BoundaryKind.MIRROR_ODD:
            return f[tuple(first)].copy()
        return np.zeros_like(f[tuple(first)])

    def _high_ghost(self, f: np.ndarray, axis: int) -> np.ndarray:
        kind = self.kinds[axis]
        first = [slice(None)] * 3
        first[axis] = slice(0, 1)
        if kind.wraps:
            factor = self.bloch_factor if kind is BoundaryKind.BLOCH else 1.0
            return f[tuple(first)] * factor
        return np.zeros_like(f[tuple(first)])

    def _backward(self, f: np.ndarray, axis: int, lo: int, hi: int) -> np.ndarray:
        if axis == 0:
            if lo > 0:
                previous = f[lo - 1:hi - 1]
            else:
                previous = np.concatenate([self._low_ghost(f, 0), f[0:hi - 1]], axis=0)
            return f[lo:hi] - previous
        slab = f[lo:hi]
        return np.diff(slab, axis=axis, prepend=self._low_ghost(slab, axis))

    def _forward(self, f: np.ndarray, axis: int, lo: int, hi: int) -> np.ndarray:
        if axis == 0:
            if hi < self.shape[0]:
                following = f[lo + 1:hi + 1]
            else:
                following = np.concatenate([f[lo + 1:hi], self._high_ghost(f, 0)], axis=0)
            return following - f[lo:hi]
        slab = f[lo:hi]
        return np.diff(slab, axis=axis, append=self._high_ghost(slab, axis))

    # -- half steps --------------------------------------------------------

    def _curl(self, terms, differentiate, lo: int, hi: int) -> dict[str, np.ndarray]:
        curl: dict[str, np.ndarray] = {}
        for sign, (updated, source, axis) in zip((1, -1) * 3, terms):
            d = differentiate(self.fields[source], axis, lo, hi)
            self.cpml.correct(updated, axis, d, lo, hi)
            curl[updated] = d if sign > 0 else curl[updated] - d
        return curl

    def _update_e_slab(self, slab: tuple[int, int]) -> None:
        lo, hi = slab
        curl = self._curl(E_TERMS, self._backward, lo, hi)
        for c in E_COMPONENTS:
            self.fields[c][lo:hi] += self.coefficients[c][lo:hi] * curl[c]

    def _update_h_slab(self, slab: tuple[int, int]) -> None:
        lo, hi = slab
        curl = self._curl(H_TERMS, self._forward, lo, hi)
        for c in H_COMPONENTS:
            self.fields[c][lo:hi] -= self.dt * curl[c]

    def _run_slabs(self, update: Callable[[tuple[int, int]], None]) -> None:
        if self._pool is None:
            for slab in self._slabs:
                update(slab)
        else:
            # list() drains the iterator: barrier plus exception propagation
            list(self._pool.map(update, self._slabs))

    def _inject_sources(self) -> None:
        t = (self.step_index + 0.5) * self.dt
        for source in self.sources:
            value = source.waveform(t)
            if value != 0.0:
                field = self.fields[source.component]
                field[source.index] -= self.coefficients[source.component][source.index] * value

    def _apply_electric_walls(self) -> None:
        for axis, kind in enumerate(self.kinds):
            if kind in (BoundaryKind.ABSORBING, BoundaryKind.MIRROR_ODD, BoundaryKind.PEC):
                index = [slice(None)] * 3
                index[axis] = 0
                for c in _tangential(axis):
                    self.fields[c][tuple(index)] = 0.0

    def _check_finite(self) -> None:
        for name, f in self.fields.items():
            if not np.isfinite(f).all():
                logger.error("Solver became unstable", extra={"step": self.step_index, "component": name})
                raise InstabilityError(self.step_index, name)

    def step(self, on_electric: Callable[["SimulationState"], None] | None = None) -> "SimulationState":
        """Advance E by one step, then H, applying boundaries and sources.

        Args:
            on_electric: Called after the E half-step, before H moves; sees
                E^{n+1} next to H^{n+1/2}.

        Returns:
            This state.

        Raises:
            InstabilityError: If a periodic finiteness check fails.
        """
        self._run_slabs(self._update_e_slab)
        self._inject_sources()
        self._apply_electric_walls()
        if on_electric is not None:
            on_electric(self)
        self._run_slabs(self._update_h_slab)
        self.step_index += 1
        if self.step_index % self.config.check_interval == 0:
            self._check_finite()
        return self

    def electric_energy(self) -> float:
        """0.5 * sum(eps |E|^2) over the grid, in solver units."""
        return 0.5 * sum(
            float(np.sum(self.grid.eps(c) * np.abs(self.fields[c]) ** 2)) for c in E_COMPONENTS
        )

    def energy(self, h_lagged: dict[str, np.ndarray]) -> float:
        """Leapfrog-invariant energy using H from before the last step.

        Args:
            h_lagged: Copies of hx, hy, hz taken before the most recent step.
        """
        magnetic = 0.5 * sum(
            float(np.sum(np.real(np.conj(h_lagged[c]) * self.fields[c]))) for c in H_COMPONENTS
        )
        return self.electric_energy() + magnetic

    def close(self) -> None:
        """Release worker threads."""
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None


def step(state: SimulationState) -> SimulationState:
    """Advance a solver state by one leapfrog update."""
    return state.step()


def polarization_component(axis: Axis) -> str:
    """E component name for a polarization axis."""
    return "e" + axis.value
