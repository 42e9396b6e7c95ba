"""Resonance extraction and cavity figures of merit."""

import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from scipy import fft, linalg, optimize

from app.core.errors import AnalysisError, InvalidInputError
from app.core.logging import logger
from app.core.units import (
    C_M_PER_S,
    NM,
    NV_ZPL_NM,
    angular_frequency_from_wavelength,
    cell_frequency,
    wavelength_from_cell_frequency,
)
from app.schemas.analysis import ParitySector

MIN_INVERSION_SAMPLES = 200
Q_GATE = 3.0e3


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not (value > 0 and math.isfinite(value)):
            raise InvalidInputError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class HarmonicMode:
    """One decaying sinusoid recovered from a ringdown.

    ``frequency`` and ``decay_rate`` use the reciprocal of the ``dt`` unit
    handed to :func:`harmonic_inversion`; the field amplitude decays as
    exp(-decay_rate * t).
    """

    frequency: float
    decay_rate: float
    quality_factor: float
    amplitude: complex
    lorentzian_q: float | None = None
    q_capped: bool = False
    low_confidence: bool = False

    @property
    def flagged(self) -> bool:
        return self.q_capped or self.low_confidence


def _decimation(n: int, dt: float, f_hi: float, max_samples: int) -> int:
    nyquist_stride = max(1, int(0.4 / (f_hi * dt)))
    return min(nyquist_stride, max(1, math.ceil(n / max_samples)))


def _pencil_poles(x: np.ndarray, rank_tolerance: float, max_order: int | None) -> np.ndarray:
    n = x.size
    pencil = n // 3
    hankel = linalg.hankel(x[: n - pencil], x[n - pencil - 1:])
    _, s, vh = linalg.svd(hankel, full_matrices=False)
    if s[0] == 0.0:
        return np.array([], dtype=complex)
    rank = int(np.sum(s > rank_tolerance * s[0]))
    order = rank if max_order is None else min(rank, max_order)
    if max_order is not None and max_order > rank:
        logger.warning("Pencil is rank deficient, reducing model order", extra={"requested": max_order, "rank": rank})
    w = vh[:order]
    return linalg.eigvals(w[:, 1:] @ linalg.pinv(w[:, :-1]))


def _lorentzian(f: np.ndarray, center: float, half_width: float, height: float, offset: float) -> np.ndarray:
    return height / (1.0 + ((f - center) / half_width) ** 2) + offset


def _spectral_q(x: np.ndarray, dt: float, frequency: float, decay_rate: float) -> float | None:
    """Q of a Lorentzian fitted to the zero-padded power spectrum near one pole."""
    fwhm = max(decay_rate / math.pi, 1.0 / (x.size * dt))
    nfft = fft.next_fast_len(min(max(8 * x.size, int(10.0 / (fwhm * dt))), 1 << 22))
    power = np.abs(fft.fft(x, nfft)) ** 2
    freqs = fft.fftfreq(nfft, dt)
    window = (freqs > 0) & (np.abs(freqs - frequency) <= 2.0 * fwhm)
    if np.count_nonzero(window) < 8:
        return None
    f, p = freqs[window], power[window]
    scale = p.max()
    initial = np.array([frequency, 0.5 * fwhm, 1.0, 0.0])
    result = optimize.least_squares(
        lambda q: _lorentzian(f, *q) - p / scale,
        initial,
        method="trf",
        bounds=([f.min(), 1e-3 * fwhm, 0.0, -1.0], [f.max(), 10.0 * fwhm, np.inf, 1.0]),
    )
    if not result.success:
        return None
    return float(result.x[0] / (2.0 * result.x[1]))


def harmonic_inversion(
    signal: np.ndarray,
    dt: float,
    band: tuple[float, float],
    max_samples: int = 1500,
    rank_tolerance: float = 1e-8,
    max_order: int | None = None,
    min_relative_amplitude: float = 1e-6,
) -> list[HarmonicMode]:
    """Decompose a ringdown into decaying sinusoids (total-least-squares matrix pencil).

    Args:
        signal: Real or complex samples taken after the source shut off.
        dt: Sample spacing (any unit; frequencies come back in its reciprocal).
        band: (f_lo, f_hi); poles outside it are dropped.
        max_samples: Samples kept after stride decimation.
        rank_tolerance: Singular values below this fraction of the largest are noise.
        max_order: Optional cap on the model order.
        min_relative_amplitude: Drop poles weaker than this fraction of the strongest.

    Returns:
        Modes sorted by frequency. A mode whose Q exceeds the resolvable cap
        pi * N * f * dt (N input samples) is reported at the cap with
        ``q_capped``; a mode whose Lorentzian cross-check disagrees by more than 10% is ``low_confidence``.

    Raises:
        AnalysisError: Fewer than 200 samples.
        InvalidInputError: Malformed band or step.
    """
    x = np.asarray(signal)
    f_lo, f_hi = band
    _require_positive(dt=dt, f_hi=f_hi)
    if not 0 <= f_lo < f_hi:
        raise InvalidInputError(f"band must satisfy 0 <= f_lo < f_hi, got {band}")
    if x.size < MIN_INVERSION_SAMPLES:
        raise AnalysisError(f"harmonic inversion needs at least {MIN_INVERSION_SAMPLES} samples, got {x.size}")

    duration = x.size * dt
    stride = _decimation(x.size, dt, f_hi, max_samples)
    x = x[::stride][:max_samples]
    step = dt * stride
    z = _pencil_poles(x, rank_tolerance, max_order)
    if z.size == 0:
        return []

    vandermonde = np.power.outer(z, np.arange(x.size)).T
    amplitudes = linalg.lstsq(vandermonde, x.astype(complex))[0]
    strongest = np.max(np.abs(amplitudes))
    q_cap = math.pi * duration

    modes = []
    for pole, amplitude in zip(z, amplitudes):
        frequency = float(np.angle(pole) / (2.0 * math.pi * step))
        magnitude = abs(pole)
        if not f_lo <= frequency <= f_hi or magnitude == 0.0:
            continue
        decay_rate = -math.log(magnitude) / step
        if decay_rate < -1.0 / (x.size * step):
            continue
        if abs(amplitude) < min_relative_amplitude * strongest:
            continue
        cap = q_cap * frequency
        quality = math.pi * frequency / decay_rate if decay_rate > 0 else math.inf
        capped = quality > cap
        spectral = _spectral_q(x, step, frequency, max(decay_rate, 0.0))
        quality = min(quality, cap)
        low = spectral is None or abs(spectral - quality) > 0.1 * quality
        modes.append(
            HarmonicMode(
                frequency=frequency,
                decay_rate=max(decay_rate, 0.0),
                quality_factor=quality,
                amplitude=complex(amplitude),
                lorentzian_q=spectral,
                q_capped=capped,
                low_confidence=low,
            )
        )
    modes.sort(key=lambda m: m.frequency)
    logger.info(
        "Harmonic inversion finished",
        extra={"samples": int(x.size), "stride": stride, "poles": int(z.size), "modes": len(modes)},
    )
    return modes


@dataclass(frozen=True)
class ModeVolume:
    """Mode volume in the field's length unit cubed, optionally normalized to (lambda/n)^3."""

    volume: float
    normalized: float | None = None


def _weighted_intensity(
    fields: Mapping[str, np.ndarray], eps: Mapping[str, np.ndarray] | np.ndarray | float
) -> np.ndarray:
    total = None
    for name, f in fields.items():
        weight = eps[name] if isinstance(eps, Mapping) else eps
        term = np.asarray(weight) * np.abs(f) ** 2
        total = term if total is None else total + term
    if total is None:
        raise AnalysisError("no field components supplied")
    return total


def mode_volume(
    fields: Mapping[str, np.ndarray],
    eps: Mapping[str, np.ndarray] | np.ndarray | float,
    cell_size: float = 1.0,
    wavelength: float | None = None,
    refractive_index: float | None = None,
    symmetry_factor: int = 1,
) -> ModeVolume:
    """V_m = sum(eps |E|^2) * cell^3 / max(eps |E|^2).

    Args:
        fields: E components on congruent grids.
        eps: Matching permittivity arrays (per component or shared).
        cell_size: Grid spacing; the volume comes back in its cube.
        wavelength: With ``refractive_index``, also report V_m / (wavelength/n)^3.
        refractive_index: See ``wavelength``.
        symmetry_factor: Number of mirror images the grid stands for (4 for a quadrant).

    Raises:
        AnalysisError: If the field is zero everywhere.
    """
    intensity = _weighted_intensity(fields, eps)
    peak = float(intensity.max())
    if peak <= 0.0:
        raise AnalysisError("mode volume of an all-zero field is undefined")
    volume = symmetry_factor * float(intensity.sum()) * cell_size**3 / peak
    normalized = None
    if wavelength is not None and refractive_index is not None:
        normalized = volume / (wavelength / refractive_index) ** 3
    return ModeVolume(volume=volume, normalized=normalized)


@dataclass(frozen=True)
class EnergyDensity:
    electric: np.ndarray
    magnetic: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.electric + self.magnetic


def energy_density(
    e_fields: Mapping[str, np.ndarray],
    h_fields: Mapping[str, np.ndarray] | None,
    eps: Mapping[str, np.ndarray] | np.ndarray | float,
    mu: float = 1.0,
) -> EnergyDensity:
    """Pointwise U_E = eps |E|^2 / 2 and U_M = mu |H|^2 / 2."""
    electric = 0.5 * _weighted_intensity(e_fields, eps)
    if h_fields:
        magnetic = 0.5 * _weighted_intensity(h_fields, mu)
    else:
        magnetic = np.zeros_like(electric)
    return EnergyDensity(electric=electric, magnetic=magnetic)


def purcell_factor(wavelength_nm: float, refractive_index: float, quality_factor: float, mode_volume_nm3: float) -> float:
    """F = 3/(4 pi^2) * (lambda/n)^3 * Q / V_m; also the ratio of decay rates."""
    _require_positive(
        wavelength_nm=wavelength_nm,
        refractive_index=refractive_index,
        quality_factor=quality_factor,
        mode_volume_nm3=mode_volume_nm3,
    )
    return 3.0 / (4.0 * math.pi**2) * (wavelength_nm / refractive_index) ** 3 * quality_factor / mode_volume_nm3


@dataclass(frozen=True)
class CouplingAssessment:
    """Emitter-cavity rates in s^-1; volumes in nm^3."""

    rabi_frequency: float
    cavity_decay: float
    gamma_perp: float
    characteristic_volume_nm3: float
    angular_frequency: float
    strong_coupling: bool
    passes_q_gate: bool
    margin: float


def coupling_assessment(
    quality_factor: float,
    mode_volume_nm3: float,
    wavelength_nm: float,
    gamma_perp: float,
    margin: float = 1.0,
    q_gate: float = Q_GATE,
) -> CouplingAssessment:
    """Rabi frequency, cavity decay and regime of an emitter in the mode.

    Strong coupling means g > margin * max(kappa, gamma_perp).
    """
    _require_positive(
        quality_factor=quality_factor,
        mode_volume_nm3=mode_volume_nm3,
        wavelength_nm=wavelength_nm,
        gamma_perp=gamma_perp,
        margin=margin,
    )
    wavelength_m = wavelength_nm * NM
    omega = angular_frequency_from_wavelength(wavelength_nm)
    v0_nm3 = C_M_PER_S * wavelength_m**2 / (8.0 * math.pi * gamma_perp) / NM**3
    g = gamma_perp * math.sqrt(v0_nm3 / mode_volume_nm3)
    kappa = omega / (4.0 * math.pi * quality_factor)
    return CouplingAssessment(
        rabi_frequency=g,
        cavity_decay=kappa,
        gamma_perp=gamma_perp,
        characteristic_volume_nm3=v0_nm3,
        angular_frequency=omega,
        strong_coupling=g > margin * max(kappa, gamma_perp),
        passes_q_gate=quality_factor > q_gate,
        margin=margin,
    )


@dataclass(frozen=True)
class FluxRatio:
    ratio: float
    up_energy: float
    down_energy: float
    flagged: bool = False


def flux_ratio(record, up: str = "up", down: str = "down") -> FluxRatio:
    """Ratio of the post-shutoff time-integrated power through two planes.

    Args:
        record: A ringdown record carrying both flux series.
        up: Name of the plane above the top face.
        down: Name of the plane below the apex.

    Returns:
        |integral up| / |integral down|; infinite and flagged when only the
        downward integral vanishes.

    Raises:
        AnalysisError: A plane is missing or both integrals vanish.
    """
    missing = {up, down} - set(record.flux)
    if missing:
        raise AnalysisError(f"record lacks flux planes {sorted(missing)}")
    start = record.shutoff_step
    up_energy = abs(float(np.sum(record.flux[up][start:]))) * record.dt
    down_energy = abs(float(np.sum(record.flux[down][start:]))) * record.dt
    if up_energy == 0.0 and down_energy == 0.0:
        raise AnalysisError("both flux integrals are zero")
    if down_energy == 0.0:
        logger.warning("Downward flux integral is zero", extra={"up_energy": up_energy})
        return FluxRatio(ratio=math.inf, up_energy=up_energy, down_energy=0.0, flagged=True)
    return FluxRatio(ratio=up_energy / down_energy, up_energy=up_energy, down_energy=down_energy)


def readout_visibility(purcell: float, collection_gain: float = 10.0) -> float:
    """Photon-rate improvement over bulk: Purcell factor times collection gain."""
    _require_positive(purcell=purcell, collection_gain=collection_gain)
    return purcell * collection_gain


@dataclass(frozen=True)
class PhotonBudget:
    """Expected detected photons in one readout window (times in ns)."""

    window_ns: float
    lifetime_ns: float
    shelving_ns: float
    collection: float
    emission_rate_per_ns: float
    bright_mean: float
    dim_mean: float

    @property
    def contrast(self) -> float:
        return 1.0 - self.dim_mean / self.bright_mean


def photon_budget(
    purcell: float,
    collection_gain: float = 10.0,
    window_ns: float = 1000.0,
    lifetime_ns: float = 13.0,
    shelving_ns: float = 250.0,
    base_collection: float = 0.01,
) -> PhotonBudget:
    """Bright and dim photon means for a spin readout window.

    The bright state emits at F / lifetime for the whole window. The dim
    state first sits in the metastable level for an exponential time of
    mean ``shelving_ns``, then emits like the bright state.
    """
    _require_positive(
        purcell=purcell,
        collection_gain=collection_gain,
        window_ns=window_ns,
        lifetime_ns=lifetime_ns,
        shelving_ns=shelving_ns,
        base_collection=base_collection,
    )
    collection = base_collection * collection_gain
    if collection > 1.0:
        raise InvalidInputError(f"collection efficiency {collection:.3f} exceeds 1")
    rate = purcell / lifetime_ns
    dark = shelving_ns * (1.0 - math.exp(-window_ns / shelving_ns))
    return PhotonBudget(
        window_ns=window_ns,
        lifetime_ns=lifetime_ns,
        shelving_ns=shelving_ns,
        collection=collection,
        emission_rate_per_ns=rate,
        bright_mean=collection * rate * window_ns,
        dim_mean=collection * rate * (window_ns - dark),
    )


def _renewal_counts(rng: np.random.Generator, rate: float, start: np.ndarray, window: float, chunk: int = 64) -> np.ndarray:
    counts = np.zeros(start.size, dtype=np.int64)
    t = start.astype(float).copy()
    active = t < window
    while active.any():
        idx = np.flatnonzero(active)
        arrivals = t[idx, None] + np.cumsum(rng.exponential(1.0 / rate, size=(idx.size, chunk)), axis=1)
        counts[idx] += np.count_nonzero(arrivals < window, axis=1)
        t[idx] = arrivals[:, -1]
        active[idx] = arrivals[:, -1] < window
    return counts


@dataclass(frozen=True)
class PhotonCounts:
    bright: np.ndarray
    dim: np.ndarray


def simulate_photon_counts(budget: PhotonBudget, trials: int = 100_000, seed: int = 0) -> PhotonCounts:
    """Monte Carlo of emission cycles for the bright and dim readout states."""
    if trials < 1:
        raise InvalidInputError("trials must be at least 1")
    rng = np.random.default_rng(seed)
    rate = budget.emission_rate_per_ns
    bright = _renewal_counts(rng, rate, np.zeros(trials), budget.window_ns)
    shelved = rng.exponential(budget.shelving_ns, size=trials)
    dim = _renewal_counts(rng, rate, shelved, budget.window_ns)
    return PhotonCounts(
        bright=rng.binomial(bright, budget.collection),
        dim=rng.binomial(dim, budget.collection),
    )


@dataclass(frozen=True)
class ParityClassification:
    """Best-matching H_y sector; ``sector`` is None when nothing is clean enough."""

    sector: ParitySector | None
    best: ParitySector
    residuals: dict[ParitySector, float]


def classify_parity(hy_plane: np.ndarray, tolerance: float = 1e-6) -> ParityClassification:
    """Score an H_y plane (axes x, z) against the four mirror-parity sectors.

    The plane must be sampled symmetrically about the mirror planes, so that
    reversing an axis maps each sample onto its mirror image.

    Raises:
        AnalysisError: If the plane is zero.
    """
    f = np.asarray(hy_plane)
    norm = float(np.linalg.norm(f))
    if norm == 0.0:
        raise AnalysisError("cannot classify the parity of a zero field")
    fx, fz, fxz = np.flip(f, 0), np.flip(f, 1), np.flip(f, (0, 1))
    residuals = {}
    for sector in ParitySector:
        sx, sz = sector.signs
        projection = 0.25 * (f + sx * fx + sz * fz + sx * sz * fxz)
        residuals[sector] = float(np.linalg.norm(f - projection)) / norm
    best = min(residuals, key=residuals.__getitem__)
    return ParityClassification(
        sector=best if residuals[best] <= tolerance else None, best=best, residuals=residuals
    )


def zpl_detuning(wavelength_nm: float, zpl_nm: float = NV_ZPL_NM) -> float:
    """Signed offset of a mode from the NV- zero-phonon line, nm."""
    return wavelength_nm - zpl_nm


@dataclass(frozen=True)
class ResonantMode:
    """A cavity resonance with its figures of merit.

    ``parity`` is the H_y sector label; mode volumes stay None until a
    frequency-domain field pass has been made.
    """

    wavelength_nm: float
    quality_factor: float
    amplitude: complex
    refractive_index: float
    parity: str | None = None
    mode_volume_nm3: float | None = None
    mode_volume_norm: float | None = None
    low_confidence: bool = False
    q_capped: bool = False

    @property
    def flagged(self) -> bool:
        return self.low_confidence or self.q_capped

    @property
    def purcell_factor(self) -> float | None:
        if self.mode_volume_nm3 is None:
            return None
        return purcell_factor(self.wavelength_nm, self.refractive_index, self.quality_factor, self.mode_volume_nm3)


def modes_from_record(
    record,
    band_nm: tuple[float, float],
    refractive_index: float,
    min_quality: float = 0.0,
    merge_tolerance: float = 1e-3,
) -> list[ResonantMode]:
    """Resonances seen by any probe of a ringdown record.

    Each probe is inverted on its own; poles closer than ``merge_tolerance``
    (relative frequency) are one mode, described by its strongest sighting.

    Args:
        record: Ringdown record with post-shutoff probe series.
        band_nm: Wavelength search window (nm).
        refractive_index: Index used to normalize mode volumes later on.
        min_quality: Drop poles broader than this.
        merge_tolerance: Relative frequency distance that counts as the same mode.

    Returns:
        Modes sorted by increasing wavelength.
    """
    lo_nm, hi_nm = band_nm
    _require_positive(lo_nm=lo_nm, hi_nm=hi_nm)
    band = (cell_frequency(hi_nm, record.cell_size_nm), cell_frequency(lo_nm, record.cell_size_nm))
    sightings: list[HarmonicMode] = []
    for label in record.probes:
        signal = record.post_shutoff(label)
        if not np.any(signal):
            continue
        sightings.extend(
            m for m in harmonic_inversion(signal, record.dt, band) if m.quality_factor >= min_quality
        )
    groups: list[list[HarmonicMode]] = []
    for mode in sorted(sightings, key=lambda m: m.frequency):
        if groups and mode.frequency - groups[-1][0].frequency <= merge_tolerance * mode.frequency:
            groups[-1].append(mode)
        else:
            groups.append([mode])
    modes = []
    for group in groups:
        best = max(group, key=lambda m: abs(m.amplitude))
        modes.append(
            ResonantMode(
                wavelength_nm=wavelength_from_cell_frequency(best.frequency, record.cell_size_nm),
                quality_factor=best.quality_factor,
                amplitude=best.amplitude,
                refractive_index=refractive_index,
                low_confidence=best.low_confidence,
                q_capped=best.q_capped,
            )
        )
    modes.sort(key=lambda m: m.wavelength_nm)
    logger.info("Extracted modes from record", extra={"config_hash": record.config_hash, "modes": len(modes)})
    return modes
