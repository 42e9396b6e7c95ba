"""Tests for measured-spectrum processing."""

import numpy as np
import pytest

from app.core.errors import FitError, InvalidInputError
from app.services.spectra import (
    Spectrum,
    fit_lorentzians,
    load_scan,
    load_spectrum,
    lorentzian_sum,
    match_modes,
    q_from_peak,
    scan_profile,
    subtract_background,
    synthesize_spectrum,
)

MEASURED = [(605.4, 87.0), (616.9, 213.0), (627.4, 221.0), (638.6, 170.0), (649.6, 87.0)]
CALCULATED = [585.0, 610.0, 617.7, 632.2, 648.0]
GRID = np.arange(560.0, 680.0, 0.05)


def measured_peaks(amplitude: float = 1000.0) -> list[tuple[float, float, float]]:
    return [(center, center / q, amplitude) for center, q in MEASURED]


class TestSpectrum:
    """Tests for Spectrum validation."""

    def test_decreasing_wavelengths_rejected(self):
        """Wavelengths must increase strictly."""
        with pytest.raises(InvalidInputError):
            Spectrum(wavelengths=np.array([600.0, 599.0]), intensities=np.array([1.0, 1.0]))

    def test_negative_intensity_rejected(self):
        """Counts cannot be negative."""
        with pytest.raises(InvalidInputError):
            Spectrum(wavelengths=np.array([600.0, 601.0]), intensities=np.array([1.0, -1.0]))

    def test_window_is_inclusive(self):
        spectrum = Spectrum(wavelengths=np.arange(600.0, 610.0), intensities=np.ones(10))

        part = spectrum.window(602.0, 605.0)

        np.testing.assert_array_equal(part.wavelengths, [602.0, 603.0, 604.0, 605.0])


class TestSubtractBackground:
    """Tests for background removal."""

    def test_spectrum_minus_itself_is_zero(self):
        """Subtracting a spectrum from itself leaves zeros and clamps nothing."""
        spectrum = synthesize_spectrum(measured_peaks(), GRID, background=50.0)

        result = subtract_background(spectrum, spectrum)

        np.testing.assert_allclose(result.intensities, 0.0, atol=1e-9)
        assert result.clamp_fraction == 0.0

    def test_constant_offset_removed_by_flat_baseline(self):
        """A degree-0 baseline removes a constant offset exactly."""
        spectrum = Spectrum(wavelengths=GRID, intensities=np.full(GRID.size, 100.0))

        result = subtract_background(spectrum, 0)

        np.testing.assert_allclose(result.intensities, 0.0, atol=1e-9)

    def test_sloped_baseline_leaves_peak_intact(self):
        """A peak on a linear background is recovered within 2% after a degree-1 baseline."""
        w = np.arange(560.0, 700.0, 0.05)
        spectrum = synthesize_spectrum([(627.4, 2.84, 1000.0)], w, background=[-100.0, 0.5])

        cleaned = subtract_background(spectrum, 1)
        (peak,) = fit_lorentzians(cleaned)

        assert peak.center_nm == pytest.approx(627.4, abs=0.05)
        assert peak.fwhm_nm == pytest.approx(2.84, rel=0.02)
        assert peak.amplitude == pytest.approx(1000.0, rel=0.02)

    def test_reference_must_cover_spectrum(self):
        """A reference narrower than the measurement is rejected."""
        spectrum = Spectrum(wavelengths=GRID, intensities=np.ones(GRID.size))
        reference = spectrum.window(600.0, 650.0)

        with pytest.raises(InvalidInputError):
            subtract_background(spectrum, reference)

    def test_negative_degree_rejected(self):
        spectrum = Spectrum(wavelengths=GRID, intensities=np.ones(GRID.size))

        with pytest.raises(InvalidInputError):
            subtract_background(spectrum, -1)

    def test_negatives_clamped_and_counted(self):
        """Samples that fall below the reference are clamped to zero."""
        spectrum = Spectrum(wavelengths=np.arange(600.0, 604.0), intensities=np.array([5.0, 1.0, 5.0, 5.0]))
        reference = Spectrum(wavelengths=np.arange(600.0, 604.0), intensities=np.full(4, 2.0))

        result = subtract_background(spectrum, reference)

        np.testing.assert_allclose(result.intensities, [3.0, 0.0, 3.0, 3.0])
        assert result.clamp_fraction == pytest.approx(0.25)


class TestQFromPeak:
    """Tests for the quality factor of a peak."""

    def test_measured_values(self):
        """Q is the center wavelength over the FWHM."""
        assert q_from_peak(627.4, 2.839) == pytest.approx(221.0, abs=0.05)
        assert q_from_peak(638.6, 3.756) == pytest.approx(170.0, abs=0.05)

    def test_width_equal_to_center(self):
        assert q_from_peak(600.0, 600.0) == 1.0

    @pytest.mark.parametrize("fwhm", [0.0, -1.0])
    def test_nonpositive_width_rejected(self, fwhm):
        with pytest.raises(InvalidInputError):
            q_from_peak(627.4, fwhm)

    def test_scale_homogeneous(self):
        """Scaling center and width together leaves Q unchanged."""
        assert q_from_peak(3 * 627.4, 3 * 2.839) == pytest.approx(q_from_peak(627.4, 2.839))


class TestFitLorentzians:
    """Tests for multi-Lorentzian fitting."""

    def test_single_peak_recovered_exactly(self):
        """A noiseless Lorentzian is recovered to solver precision."""
        spectrum = synthesize_spectrum([(627.4, 2.84, 500.0)], np.arange(602.0, 652.0, 0.05))

        (peak,) = fit_lorentzians(spectrum)

        assert peak.center_nm == pytest.approx(627.4, abs=1e-6)
        assert peak.fwhm_nm == pytest.approx(2.84, abs=1e-6)
        assert peak.amplitude == pytest.approx(500.0, rel=1e-6)
        assert peak.background == pytest.approx(0.0, abs=1e-6)
        assert not peak.flagged

    def test_five_measured_peaks_with_noise(self):
        """Five noisy peaks come back with centers within 0.1 nm and Q within 5%."""
        spectrum = synthesize_spectrum(measured_peaks(), GRID, background=50.0, noise_fraction=0.01, seed=3)

        peaks = fit_lorentzians(spectrum, windows=[(590.0, 665.0)], peaks_per_window=5)

        assert len(peaks) == 5
        for peak, (center, q) in zip(peaks, MEASURED):
            assert peak.center_nm == pytest.approx(center, abs=0.1)
            assert peak.quality_factor == pytest.approx(q, rel=0.05)
            assert not peak.flagged

    def test_fitted_model_explains_the_noise(self):
        """Residuals of the fitted model are at the injected noise level."""
        spectrum = synthesize_spectrum(measured_peaks(), GRID, background=50.0, noise_fraction=0.01, seed=4)
        peaks = fit_lorentzians(spectrum, windows=[(590.0, 665.0)], peaks_per_window=5)
        part = spectrum.window(590.0, 665.0)
        params = np.array([v for p in peaks for v in (p.center_nm, p.fwhm_nm, p.amplitude)] + [peaks[0].background])

        residual = lorentzian_sum(part.wavelengths, params) - part.intensities

        assert np.mean((residual / 10.0) ** 2) < 1.5

    def test_cost_never_increases(self):
        spectrum = synthesize_spectrum(measured_peaks(), GRID, background=50.0, noise_fraction=0.01, seed=5)

        for peak in fit_lorentzians(spectrum, windows=[(590.0, 665.0)], peaks_per_window=5):
            assert peak.final_cost <= peak.initial_cost

    def test_flat_noise_is_flagged(self):
        """A window of pure noise yields a flagged peak rather than an error."""
        rng = np.random.default_rng(9)
        w = np.arange(602.0, 652.0, 0.05)
        spectrum = Spectrum(wavelengths=w, intensities=100.0 + rng.normal(0.0, 1.0, w.size))

        (peak,) = fit_lorentzians(spectrum)

        assert peak.flagged

    def test_too_few_samples(self):
        spectrum = synthesize_spectrum([(627.4, 2.84, 500.0)], np.arange(600.0, 660.0, 1.0))

        with pytest.raises(FitError):
            fit_lorentzians(spectrum, windows=[(626.0, 630.0)])

    def test_more_peaks_than_maxima(self):
        """Asking for peaks in a monotone window fails."""
        w = np.arange(602.0, 652.0, 0.1)
        spectrum = Spectrum(wavelengths=w, intensities=w - 500.0)

        with pytest.raises(FitError):
            fit_lorentzians(spectrum)

    def test_window_count_mismatch(self):
        spectrum = synthesize_spectrum([(627.4, 2.84, 500.0)], GRID)

        with pytest.raises(InvalidInputError):
            fit_lorentzians(spectrum, windows=[(602.0, 652.0)], peaks_per_window=[1, 1])


class TestMatchModes:
    """Tests for measured/calculated mode pairing."""

    def test_table_pairing(self):
        """Measured and calculated lists pair in order with a shrinking deviation."""
        matching = match_modes([c for c, _ in MEASURED], CALCULATED)

        deviations = [p.deviation_nm for p in matching.pairs]
        assert deviations == pytest.approx([20.4, 6.9, 9.7, 6.4, 1.6], abs=1e-9)
        assert matching.max_deviation == pytest.approx(20.4)
        assert matching.mean_deviation == pytest.approx(9.0)
        assert matching.trend_slope < 0

    def test_identical_lists(self):
        matching = match_modes(CALCULATED, CALCULATED)

        assert matching.max_deviation == 0.0

    def test_empty_input(self):
        """An empty list on either side gives no pairs."""
        assert match_modes([], CALCULATED).pairs == []
        assert match_modes(CALCULATED, []).pairs == []

    def test_uniform_shift_keeps_pairing(self):
        """Shifting every measured line equally leaves the pairing unchanged."""
        measured = [c for c, _ in MEASURED]
        base = match_modes(measured, CALCULATED)

        shifted = match_modes([m + 3.0 for m in measured], [c + 3.0 for c in CALCULATED])

        assert [p.deviation_nm for p in shifted.pairs] == pytest.approx([p.deviation_nm for p in base.pairs])

    def test_shorter_list_fully_paired(self):
        """Extra calculated lines are skipped when fewer lines were measured."""
        matching = match_modes([611.0, 647.0], CALCULATED)

        assert [(p.measured_nm, p.calculated_nm) for p in matching.pairs] == [(611.0, 610.0), (647.0, 648.0)]


class TestLoadSpectrum:
    """Tests for reading spectrum CSV files."""

    def test_two_column_file(self, tmp_path):
        """Comment lines are skipped and rows come back sorted."""
        path = tmp_path / "spectrum.csv"
        path.write_text("# exported\n601.0,5\n600.0,4\n602.0,6\n")

        spectrum = load_spectrum(path)

        np.testing.assert_array_equal(spectrum.wavelengths, [600.0, 601.0, 602.0])
        np.testing.assert_array_equal(spectrum.intensities, [4.0, 5.0, 6.0])
        assert spectrum.position_um is None

    def test_single_position_file(self, tmp_path):
        path = tmp_path / "spectrum.csv"
        path.write_text("600.0,4,1.5\n601.0,5,1.5\n")

        assert load_spectrum(path).position_um == 1.5

    def test_scan_file_rejected_as_spectrum(self, tmp_path):
        path = tmp_path / "scan.csv"
        path.write_text("600.0,4,0\n600.0,5,1\n")

        with pytest.raises(InvalidInputError):
            load_spectrum(path)

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("600.0,4,0,1\n")

        with pytest.raises(InvalidInputError):
            load_spectrum(path)


class TestScan:
    """Tests for stage-position scans."""

    def test_profile_per_position_and_window(self, tmp_path):
        """Each stage position becomes one row of peak intensities."""
        path = tmp_path / "scan.csv"
        path.write_text("600.0,1,0\n610.0,7,0\n600.0,3,2\n610.0,2,2\n")

        scan = load_scan(path)
        profile = scan_profile(scan, [(595.0, 605.0), (605.0, 615.0)])

        assert [s.position_um for s in scan] == [0.0, 2.0]
        np.testing.assert_array_equal(profile.positions_um, [0.0, 2.0])
        np.testing.assert_array_equal(profile.peak_intensity, [[1.0, 7.0], [3.0, 2.0]])

    def test_scan_needs_position_column(self, tmp_path):
        path = tmp_path / "spectrum.csv"
        path.write_text("600.0,1\n601.0,2\n")

        with pytest.raises(InvalidInputError):
            load_scan(path)
