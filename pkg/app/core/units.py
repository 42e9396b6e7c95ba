"""Physical constants and conversions between lab units and solver units.

The solver works with c = 1, eps0 = mu0 = 1 and lengths measured in grid
cells, so one time unit is the time light needs to cross one cell.
"""

from scipy import constants

C_M_PER_S: float = constants.c
NM: float = 1e-9
NV_ZPL_NM: float = 637.0


def angular_frequency_from_wavelength(wavelength_nm: float) -> float:
    """Vacuum angular frequency in rad/s for a wavelength in nm."""
    return 2.0 * constants.pi * C_M_PER_S / (wavelength_nm * NM)


def time_step_seconds(cell_size_nm: float, courant: float) -> float:
    """Physical duration of one leapfrog step, dt = S * cell / c."""
    return courant * cell_size_nm * NM / C_M_PER_S


def cell_frequency(wavelength_nm: float, cell_size_nm: float) -> float:
    """Frequency in solver units (cycles per cell-crossing time)."""
    return cell_size_nm / wavelength_nm


def wavelength_from_cell_frequency(frequency: float, cell_size_nm: float) -> float:
    """Inverse of :func:`cell_frequency`."""
    return cell_size_nm / frequency
