"""Closed-form and quadrature references the solver is checked against.

All functions use solver units (c = 1, lengths in cells) unless a
parameter says otherwise.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from app.core.errors import InvalidInputError
from app.schemas.geometry import GridRegion
from app.services.geometry import DielectricGrid
from app.services.solver.state import SourceWaveform


def yee_dispersion_frequency(k: Sequence[float], dt: float) -> float:
    """Angular frequency of a staggered-grid plane wave with wavevector ``k`` (rad/cell).

    Solves sin^2(w dt / 2) / dt^2 = sum_i sin^2(k_i / 2).

    Raises:
        InvalidInputError: If the wave is above the grid cutoff for this step.
    """
    s = dt * math.sqrt(sum(math.sin(0.5 * ki) ** 2 for ki in k))
    if s > 1.0:
        raise InvalidInputError("wavevector lies beyond the grid cutoff for this time step")
    return 2.0 / dt * math.asin(s)


@dataclass(frozen=True)
class Layer:
    index: float
    thickness: float


def quarter_wave_stack(n_high: float, n_low: float, design_wavelength: float, pairs: int) -> list[Layer]:
    """High/low index pairs, each layer a quarter of the design wavelength thick inside it."""
    if pairs < 1:
        raise InvalidInputError("pairs must be at least 1")
    high = Layer(n_high, design_wavelength / (4.0 * n_high))
    low = Layer(n_low, design_wavelength / (4.0 * n_low))
    return [layer for _ in range(pairs) for layer in (high, low)]


def _interface(n1: float, n2: float) -> np.ndarray:
    r = (n1 - n2) / (n1 + n2)
    t = 2.0 * n1 / (n1 + n2)
    return np.array([[1.0 / t, r / t], [r / t, 1.0 / t]], dtype=complex)


def _propagation(n: float, d: float, wavelength: float) -> np.ndarray:
    phi = 2.0 * math.pi * n * d / wavelength
    return np.array([[np.exp(-1j * phi), 0.0], [0.0, np.exp(1j * phi)]], dtype=complex)


def transfer_matrix_reflectance(
    layers: Sequence[Layer],
    wavelengths: Sequence[float],
    n_incident: float = 1.0,
    n_exit: float = 1.0,
) -> np.ndarray:
    """Normal-incidence power reflectance of a layer stack.

    Thicknesses and wavelengths share one length unit.
    """
    result = []
    for wavelength in wavelengths:
        total = np.eye(2, dtype=complex)
        previous = n_incident
        for layer in layers:
            total = total @ _interface(previous, layer.index) @ _propagation(layer.index, layer.thickness, wavelength)
            previous = layer.index
        total = total @ _interface(previous, n_exit)
        result.append(abs(total[1, 0] / total[0, 0]) ** 2)
    return np.array(result)


def bragg_stack_grid(layers: Sequence[Layer], leading_cells: int, trailing_cells: int) -> DielectricGrid:
    """1 x 1 x Nz grid holding ``layers`` along z (thicknesses in whole cells).

    The first layer starts on node ``leading_cells``; nodes on an interface
    get the mean permittivity of both sides.
    """
    thickness = [int(round(layer.thickness)) for layer in layers]
    if any(t < 1 for t in thickness):
        raise InvalidInputError("every layer must be at least one cell thick")
    nz = leading_cells + sum(thickness) + trailing_cells
    # permittivity of cell [k, k+1)
    cells = np.ones(nz)
    position = leading_cells
    for layer, t in zip(layers, thickness):
        cells[position:position + t] = layer.index**2
        position += t
    nodes = 0.5 * (cells + np.concatenate([[1.0], cells[:-1]]))
    eps_node = nodes.reshape(1, 1, nz)
    return DielectricGrid(
        cell_size_nm=1.0,
        origin_nm=(0.0, 0.0, 0.0),
        eps_x=eps_node.copy(),
        eps_y=eps_node.copy(),
        eps_z=cells.reshape(1, 1, nz).copy(),
        region=GridRegion.FULL,
        refractive_index=max(layer.index for layer in layers),
    )


def transmission_spectrum(signal: np.ndarray, reference: np.ndarray, dt: float, frequencies: Sequence[float]) -> np.ndarray:
    """|DFT(signal)|^2 / |DFT(reference)|^2 evaluated at the given frequencies."""
    t = np.arange(len(signal)) * dt
    basis = np.exp(2j * np.pi * np.outer(frequencies, t))
    return np.abs(basis @ np.asarray(signal)) ** 2 / np.abs(basis @ np.asarray(reference)) ** 2


def dipole_radiated_energy(waveform: SourceWaveform) -> float:
    """Energy a point current moment J(t) radiates in free space: int (dJ/dt)^2 dt / (6 pi)."""
    value, _ = integrate.quad(
        lambda t: float(waveform.derivative(np.array(t))) ** 2,
        0.0,
        waveform.shutoff_time,
        limit=400,
    )
    return value / (6.0 * math.pi)


def gaussian_mode_volume(sigma: float, half_extent: float = math.inf) -> float:
    """Mode volume of |E|^2 = exp(-r^2 / sigma^2) by quadrature over a cube."""
    if sigma <= 0:
        raise InvalidInputError("sigma must be positive")
    line, _ = integrate.quad(lambda x: math.exp(-(x / sigma) ** 2), -half_extent, half_extent)
    return line**3
