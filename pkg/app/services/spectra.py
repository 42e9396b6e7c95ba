"""Photoluminescence spectra: background removal, Lorentzian fits, mode matching."""

from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial
from scipy import optimize, signal

from app.core.errors import FitError, InvalidInputError
from app.core.logging import logger
from app.dal.artifacts import read_spectrum_csv

DEFAULT_WINDOW_NM = (602.0, 652.0)
MIN_WINDOW_SAMPLES = 10


@dataclass(frozen=True)
class Spectrum:
    """Intensity (counts) against strictly increasing wavelength (nm)."""

    wavelengths: np.ndarray
    intensities: np.ndarray
    position_um: float | None = None
    clamp_fraction: float = 0.0

    def __post_init__(self):
        w, i = np.asarray(self.wavelengths, dtype=float), np.asarray(self.intensities, dtype=float)
        if w.ndim != 1 or w.shape != i.shape:
            raise InvalidInputError("wavelengths and intensities must be 1D arrays of equal length")
        if w.size > 1 and np.any(np.diff(w) <= 0):
            raise InvalidInputError("wavelengths must be strictly increasing")
        if np.any(i < 0):
            raise InvalidInputError("intensities must be non-negative")
        object.__setattr__(self, "wavelengths", w)
        object.__setattr__(self, "intensities", i)

    def window(self, lo: float, hi: float) -> "Spectrum":
        keep = (self.wavelengths >= lo) & (self.wavelengths <= hi)
        return replace(self, wavelengths=self.wavelengths[keep], intensities=self.intensities[keep])


def _clamped(spectrum: Spectrum, values: np.ndarray) -> Spectrum:
    negative = values < 0
    fraction = float(np.count_nonzero(negative)) / values.size if values.size else 0.0
    if fraction:
        logger.info("Clamped negative intensities after background removal", extra={"clamp_fraction": fraction})
    return replace(spectrum, intensities=np.where(negative, 0.0, values), clamp_fraction=fraction)


def _clipped_baseline(w: np.ndarray, y: np.ndarray, degree: int, iterations: int = 200) -> np.ndarray:
    """Polynomial fitted to the data with peaks iteratively clipped down to it."""
    work = y.copy()
    baseline = y
    for _ in range(iterations):
        baseline = Polynomial.fit(w, work, degree)(w)
        clipped = np.minimum(work, baseline)
        if np.allclose(clipped, work, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(y).max()))):
            break
        work = clipped
    return baseline


def subtract_background(spectrum: Spectrum, reference: Spectrum | int) -> Spectrum:
    """Remove a measured reference or a fitted polynomial baseline.

    Args:
        spectrum: Measured spectrum.
        reference: Reference spectrum (linearly resampled onto ``spectrum``)
            or the degree of a peak-clipping polynomial baseline.

    Returns:
        Spectrum with negatives clamped to zero; ``clamp_fraction`` tells how
        many samples were clamped.

    Raises:
        InvalidInputError: If the reference does not cover the spectrum or the degree is negative.
    """
    if isinstance(reference, Spectrum):
        if reference.wavelengths[0] > spectrum.wavelengths[0] or reference.wavelengths[-1] < spectrum.wavelengths[-1]:
            raise InvalidInputError("reference spectrum does not cover the measured window")
        resampled = np.interp(spectrum.wavelengths, reference.wavelengths, reference.intensities)
        return _clamped(spectrum, spectrum.intensities - resampled)
    if reference < 0:
        raise InvalidInputError("baseline degree must be non-negative")
    baseline = _clipped_baseline(spectrum.wavelengths, spectrum.intensities, int(reference))
    return _clamped(spectrum, spectrum.intensities - baseline)


def q_from_peak(center_nm: float, fwhm_nm: float) -> float:
    """Q = center / FWHM."""
    if not fwhm_nm > 0:
        raise InvalidInputError(f"FWHM must be positive, got {fwhm_nm}")
    return center_nm / fwhm_nm


@dataclass(frozen=True)
class LorentzianPeak:
    """One fitted peak; ``*_err`` are one-sigma uncertainties from the fit covariance."""

    center_nm: float
    fwhm_nm: float
    amplitude: float
    background: float
    window: tuple[float, float]
    center_err: float = 0.0
    fwhm_err: float = 0.0
    amplitude_err: float = 0.0
    residual_norm: float = 0.0
    initial_cost: float = 0.0
    final_cost: float = 0.0
    flagged: bool = False

    @property
    def quality_factor(self) -> float:
        return q_from_peak(self.center_nm, self.fwhm_nm)

    @property
    def quality_factor_err(self) -> float:
        q = self.quality_factor
        return q * float(np.hypot(self.center_err / self.center_nm, self.fwhm_err / self.fwhm_nm))


def lorentzian_sum(w: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Sum of Lorentzians plus a constant; params = [c1, g1, a1, c2, g2, a2, ..., offset]."""
    total = np.full(w.shape, params[-1], dtype=float)
    for center, fwhm, amplitude in params[:-1].reshape(-1, 3):
        total += amplitude / (1.0 + ((w - center) / (0.5 * fwhm)) ** 2)
    return total


def _lorentzian_jacobian(w: np.ndarray, params: np.ndarray) -> np.ndarray:
    jac = np.empty((w.size, params.size))
    for k, (center, fwhm, amplitude) in enumerate(params[:-1].reshape(-1, 3)):
        u = (w - center) / (0.5 * fwhm)
        denom = 1.0 + u**2
        jac[:, 3 * k] = amplitude * 2.0 * u / (0.5 * fwhm * denom**2)
        jac[:, 3 * k + 1] = amplitude * 2.0 * u**2 / (fwhm * denom**2)
        jac[:, 3 * k + 2] = 1.0 / denom
    jac[:, -1] = 1.0
    return jac


def _initial_guess(w: np.ndarray, y: np.ndarray, count: int) -> np.ndarray:
    window_length = min(11, y.size if y.size % 2 else y.size - 1)
    smoothed = signal.savgol_filter(y, window_length, 3) if window_length > 3 else y
    indices, properties = signal.find_peaks(smoothed, prominence=0.0)
    if indices.size < count:
        raise FitError(f"requested {count} peaks but the window has {indices.size} local maxima")
    top = np.sort(indices[np.argsort(properties["prominences"])[::-1][:count]])
    widths = signal.peak_widths(smoothed, top, rel_height=0.5)[0]
    spacing = np.gradient(w)
    offset = float(np.percentile(smoothed, 10))
    guess = []
    for index, width in zip(top, widths):
        guess += [w[index], max(width * spacing[index], 2.0 * spacing[index]), max(smoothed[index] - offset, 0.0)]
    return np.array(guess + [offset])


def _fit_window(spectrum: Spectrum, lo: float, hi: float, count: int, max_nfev: int) -> list[LorentzianPeak]:
    part = spectrum.window(lo, hi)
    w, y = part.wavelengths, part.intensities
    if w.size < MIN_WINDOW_SAMPLES:
        raise FitError(f"window [{lo}, {hi}] holds {w.size} samples, need at least {MIN_WINDOW_SAMPLES}")
    x0 = _initial_guess(w, y, count)
    span = w[-1] - w[0]
    lower = np.array([w[0], 1e-6 * span, 0.0] * count + [-np.inf])
    upper = np.array([w[-1], 2.0 * span, np.inf] * count + [np.inf])
    x0 = np.clip(x0, lower + 1e-12 * span, upper)

    def residual(params: np.ndarray) -> np.ndarray:
        return lorentzian_sum(w, params) - y

    initial_cost = 0.5 * float(np.sum(residual(x0) ** 2))
    result = optimize.least_squares(
        residual,
        x0,
        jac=lambda p: _lorentzian_jacobian(w, p),
        bounds=(lower, upper),
        method="trf",
        ftol=1e-15,
        xtol=1e-15,
        gtol=1e-15,
        max_nfev=max_nfev,
    )
    dof = max(w.size - x0.size, 1)
    variance = 2.0 * result.cost / dof
    covariance = np.linalg.pinv(result.jac.T @ result.jac) * variance
    errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    rms = float(np.sqrt(2.0 * result.cost / w.size))
    if not result.success:
        logger.warning("Lorentzian fit did not converge", extra={"window": (lo, hi), "status": result.status})

    peaks = []
    for k, (center, fwhm, amplitude) in enumerate(result.x[:-1].reshape(-1, 3)):
        amplitude_err = float(errors[3 * k + 2])
        flagged = (not result.success) or amplitude < 5.0 * rms or amplitude_err > 0.3 * amplitude
        peaks.append(
            LorentzianPeak(
                center_nm=float(center),
                fwhm_nm=float(fwhm),
                amplitude=float(amplitude),
                background=float(result.x[-1]),
                window=(lo, hi),
                center_err=float(errors[3 * k]),
                fwhm_err=float(errors[3 * k + 1]),
                amplitude_err=amplitude_err,
                residual_norm=float(np.sqrt(2.0 * result.cost)),
                initial_cost=initial_cost,
                final_cost=float(result.cost),
                flagged=bool(flagged),
            )
        )
    return peaks


def fit_lorentzians(
    spectrum: Spectrum,
    windows: Sequence[tuple[float, float]] = (DEFAULT_WINDOW_NM,),
    peaks_per_window: int | Sequence[int] = 1,
    max_nfev: int = 2000,
) -> list[LorentzianPeak]:
    """Fit a sum of Lorentzians plus a constant inside each window.

    Initial centers come from the most prominent local maxima of a smoothed
    copy of the data, initial widths from their half-maximum widths. The
    trust-region solver never accepts a step that raises the cost, so
    ``final_cost <= initial_cost`` for every peak.

    Args:
        spectrum: Background-subtracted spectrum.
        windows: (lo, hi) wavelength windows, nm.
        peaks_per_window: One count for all windows or one per window.
        max_nfev: Bound on residual evaluations per window.

    Returns:
        Peaks sorted by center wavelength. Peaks from a non-converged fit, or
        with amplitude below five times the residual rms, or with a relative
        amplitude uncertainty above 30% are ``flagged``.

    Raises:
        FitError: Too few samples in a window or more peaks than local maxima.
    """
    counts = [peaks_per_window] * len(windows) if isinstance(peaks_per_window, int) else list(peaks_per_window)
    if len(counts) != len(windows):
        raise InvalidInputError("peaks_per_window must match the number of windows")
    peaks: list[LorentzianPeak] = []
    for (lo, hi), count in zip(windows, counts):
        if count < 1:
            raise InvalidInputError("each window needs at least one peak")
        peaks.extend(_fit_window(spectrum, lo, hi, count, max_nfev))
    peaks.sort(key=lambda p: p.center_nm)
    logger.info("Fitted Lorentzian peaks", extra={"windows": len(windows), "peaks": len(peaks)})
    return peaks


def synthesize_spectrum(
    peaks: Sequence[tuple[float, float, float]],
    wavelengths: np.ndarray,
    background: float | Sequence[float] = 0.0,
    noise_fraction: float = 0.0,
    seed: int = 0,
) -> Spectrum:
    """Lorentzian peaks (center, FWHM, amplitude) on a polynomial background.

    Gaussian noise has standard deviation ``noise_fraction`` times the
    largest peak amplitude; negatives are clamped to zero.
    """
    w = np.asarray(wavelengths, dtype=float)
    params = np.array([value for peak in peaks for value in peak] + [0.0])
    coefficients = [background] if np.isscalar(background) else list(background)
    values = lorentzian_sum(w, params) + Polynomial(coefficients)(w)
    if noise_fraction > 0 and len(peaks):
        rng = np.random.default_rng(seed)
        values = values + rng.normal(0.0, noise_fraction * max(p[2] for p in peaks), size=w.size)
    return Spectrum(wavelengths=w, intensities=np.clip(values, 0.0, None))


@dataclass(frozen=True)
class MatchedPair:
    measured_nm: float
    calculated_nm: float
    parity: str | None = None

    @property
    def deviation_nm(self) -> float:
        """Measured minus calculated."""
        return self.measured_nm - self.calculated_nm


@dataclass(frozen=True)
class ModeMatching:
    pairs: list[MatchedPair] = field(default_factory=list)

    @property
    def max_deviation(self) -> float:
        return max((abs(p.deviation_nm) for p in self.pairs), default=0.0)

    @property
    def mean_deviation(self) -> float:
        return float(np.mean([abs(p.deviation_nm) for p in self.pairs])) if self.pairs else 0.0

    @property
    def trend_slope(self) -> float | None:
        """Least-squares slope of |deviation| against calculated wavelength (nm/nm)."""
        if len(self.pairs) < 2:
            return None
        x = [p.calculated_nm for p in self.pairs]
        y = [abs(p.deviation_nm) for p in self.pairs]
        return float(Polynomial.fit(x, y, 1).convert().coef[-1]) if len(set(x)) > 1 else None


def _wavelength(item) -> float:
    for attribute in ("center_nm", "wavelength_nm"):
        if hasattr(item, attribute):
            return float(getattr(item, attribute))
    return float(item)


def _parity(item) -> str | None:
    parity = getattr(item, "parity", None)
    return getattr(parity, "value", parity)


def match_modes(measured: Sequence, calculated: Sequence) -> ModeMatching:
    """Order-preserving one-to-one pairing minimizing the total |measured - calculated|.

    Every entry of the shorter list is paired; the longer list may skip
    entries. Items are peaks, modes or plain wavelengths.
    """
    if not measured or not calculated:
        return ModeMatching()
    meas = sorted(measured, key=_wavelength)
    calc = sorted(calculated, key=_wavelength)
    swap = len(meas) > len(calc)
    short, long = (calc, meas) if swap else (meas, calc)
    a = np.array([_wavelength(x) for x in short])
    b = np.array([_wavelength(x) for x in long])
    n, m = a.size, b.size
    cost = np.full((n + 1, m + 1), np.inf)
    cost[0, :] = 0.0
    for i in range(1, n + 1):
        for j in range(i, m + 1):
            cost[i, j] = min(cost[i, j - 1], cost[i - 1, j - 1] + abs(a[i - 1] - b[j - 1]))
    pairs = []
    i, j = n, m
    while i > 0:
        if j > i and cost[i, j] == cost[i, j - 1]:
            j -= 1
            continue
        s, l_ = short[i - 1], long[j - 1]
        m_item, c_item = (l_, s) if swap else (s, l_)
        pairs.append(MatchedPair(measured_nm=_wavelength(m_item), calculated_nm=_wavelength(c_item), parity=_parity(c_item)))
        i, j = i - 1, j - 1
    pairs.reverse()
    return ModeMatching(pairs=pairs)


def load_spectrum(path: Path) -> Spectrum:
    """Read a two- or three-column spectrum CSV (the third column is a stage position)."""
    rows = read_spectrum_csv(path)
    position = None
    if rows.shape[1] == 3:
        positions = np.unique(rows[:, 2])
        if positions.size != 1:
            raise InvalidInputError(f"{path} holds several stage positions; load it as a scan")
        position = float(positions[0])
    order = np.argsort(rows[:, 0])
    return Spectrum(wavelengths=rows[order, 0], intensities=rows[order, 1], position_um=position)


def load_scan(path: Path) -> list[Spectrum]:
    """Read a three-column scan CSV into one spectrum per stage position."""
    rows = read_spectrum_csv(path)
    if rows.shape[1] != 3:
        raise InvalidInputError(f"{path} has no stage-position column")
    spectra = []
    for position in np.unique(rows[:, 2]):
        part = rows[rows[:, 2] == position]
        order = np.argsort(part[:, 0])
        spectra.append(Spectrum(wavelengths=part[order, 0], intensities=part[order, 1], position_um=float(position)))
    return spectra


@dataclass(frozen=True)
class ScanProfile:
    positions_um: np.ndarray
    windows: tuple[tuple[float, float], ...]
    peak_intensity: np.ndarray


def scan_profile(scan: Sequence[Spectrum], windows: Sequence[tuple[float, float]]) -> ScanProfile:
    """Peak intensity per stage position (rows) and wavelength window (columns)."""
    table = np.zeros((len(scan), len(windows)))
    for r, spectrum in enumerate(scan):
        for c, (lo, hi) in enumerate(windows):
            part = spectrum.window(lo, hi).intensities
            table[r, c] = part.max() if part.size else 0.0
    positions = np.array([s.position_um if s.position_um is not None else np.nan for s in scan])
    return ScanProfile(positions_um=positions, windows=tuple(windows), peak_intensity=table)
