"""Convolutional perfectly matched layer (CPML).

Each absorbing face carries graded profiles

    sigma(rho) = sigma_max * rho**m
    kappa(rho) = 1 + (kappa_max - 1) * rho**m
    alpha(rho) = alpha_max * (1 - rho)

with rho the normalized depth into the layer (0 at the interior edge, 1 at
the outer wall). A spatial derivative d inside the layer is replaced by

    psi <- b * psi + c * d
    d   <- d / kappa + psi

    b = exp(-(sigma / kappa + alpha) * dt)
    c = sigma / (sigma * kappa + kappa**2 * alpha) * (b - 1)

Solver units: c = eps0 = mu0 = 1 and unit cell size, so eta = 1.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from app.schemas.simulation import BoundaryKind, SimulationConfig

# Derivatives each component's update takes: (updated component, source component, axis)
E_TERMS = (
    ("ex", "hz", 1), ("ex", "hy", 2),
    ("ey", "hx", 2), ("ey", "hz", 0),
    ("ez", "hy", 0), ("ez", "hx", 1),
)
H_TERMS = (
    ("hx", "ez", 1), ("hx", "ey", 2),
    ("hy", "ex", 2), ("hy", "ez", 0),
    ("hz", "ey", 0), ("hz", "ex", 1),
)


@dataclass
class AxisProfile:
    """CPML coefficients along one axis.

    ``node`` arrays sit on integer positions (E-update derivatives), ``half``
    arrays on half-integer positions (H-update derivatives).
    """

    n: int
    regions: list[tuple[int, int]] = field(default_factory=list)
    kappa: dict[str, np.ndarray] = field(default_factory=dict)
    b: dict[str, np.ndarray] = field(default_factory=dict)
    c: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def build(cls, n: int, kind: BoundaryKind, config: SimulationConfig, dt: float) -> "AxisProfile":
        """Grade the layers of one axis according to its boundary kind."""
        profile = cls(n=n)
        thickness = config.pml_cells
        low, high = kind.low_absorbing, kind.high_absorbing
        if not (low or high):
            return profile
        if (low + high) * thickness >= n:
            raise ValueError(f"axis of {n} cells cannot hold the absorbing layers")
        if low:
            profile.regions.append((0, thickness))
        if high:
            profile.regions.append((n - thickness, n))

        m = config.pml_order
        sigma_max = -(m + 1.0) * math.log(config.pml_reflection) / (2.0 * thickness)
        for position, shift in (("node", 0.0), ("half", 0.5)):
            p = np.arange(n) + shift
            depth = np.zeros(n)
            if low:
                depth = np.maximum(depth, thickness - p)
            if high:
                depth = np.maximum(depth, p - (n - thickness))
            rho = np.clip(depth / thickness, 0.0, 1.0)
            sigma = sigma_max * rho**m
            kappa = 1.0 + (config.pml_kappa_max - 1.0) * rho**m
            alpha = config.pml_alpha_max * (1.0 - rho)
            b = np.exp(-(sigma / kappa + alpha) * dt)
            denominator = sigma * kappa + kappa**2 * alpha
            c = np.divide(sigma * (b - 1.0), denominator, out=np.zeros(n), where=denominator > 0)
            profile.kappa[position], profile.b[position], profile.c[position] = kappa, b, c
        return profile


class Cpml:
    """Auxiliary convolution fields and the derivative correction."""

    def __init__(
        self,
        shape: tuple[int, int, int],
        kinds: tuple[BoundaryKind, BoundaryKind, BoundaryKind],
        config: SimulationConfig,
        dt: float,
        dtype: np.dtype,
    ):
        self.shape = shape
        self.axes = [AxisProfile.build(shape[a], kinds[a], config, dt) for a in range(3)]
        self._psi: dict[tuple[str, int, int], np.ndarray] = {}
        for updated, _, axis in E_TERMS + H_TERMS:
            for r, (start, stop) in enumerate(self.axes[axis].regions):
                psi_shape = list(shape)
                psi_shape[axis] = stop - start
                self._psi[(updated, axis, r)] = np.zeros(psi_shape, dtype=dtype)

    def correct(self, updated: str, axis: int, derivative: np.ndarray, lo: int, hi: int) -> None:
        """Apply the CPML correction in place to a derivative of the x-slab [lo, hi)."""
        profile = self.axes[axis]
        position = "node" if updated.startswith("e") else "half"
        for r, (start, stop) in enumerate(profile.regions):
            psi = self._psi[(updated, axis, r)]
            if axis == 0:
                g0, g1 = max(start, lo), min(stop, hi)
                if g0 >= g1:
                    continue
                d_index = (slice(g0 - lo, g1 - lo),)
                psi_view = psi[g0 - start:g1 - start]
                coeffs = slice(g0, g1)
                shape = (-1, 1, 1)
            else:
                d_index = (slice(None),) * axis + (slice(start, stop),)
                psi_view = psi[lo:hi]
                coeffs = slice(start, stop)
                shape = (1, -1, 1) if axis == 1 else (1, 1, -1)
            kappa = profile.kappa[position][coeffs].reshape(shape)
            b = profile.b[position][coeffs].reshape(shape)
            c = profile.c[position][coeffs].reshape(shape)
            d = derivative[d_index]
            psi_view *= b
            psi_view += c * d
            derivative[d_index] = d / kappa + psi_view
