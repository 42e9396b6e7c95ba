"""API-level tests for the spectrum endpoints."""

import numpy as np
from fastapi import status

from app.services.spectra import synthesize_spectrum


class TestFitSpectrum:
    """Tests for POST /api/v1/spectra/fit endpoint."""

    def test_fit_success(self, client):
        """Happy path: a single Lorentzian comes back with its center and Q."""
        spectrum = synthesize_spectrum([(627.4, 2.84, 500.0)], np.arange(602.0, 652.0, 0.1), background=20.0)
        payload = {
            "wavelengths_nm": spectrum.wavelengths.tolist(),
            "intensities": spectrum.intensities.tolist(),
        }
        response = client.post("/api/v1/spectra/fit", json=payload)

        assert response.status_code == status.HTTP_200_OK
        (peak,) = response.json()["peaks"]
        assert abs(peak["center_nm"] - 627.4) < 1e-4
        assert abs(peak["quality_factor"] - 627.4 / 2.84) < 0.01
        assert peak["flagged"] is False

    def test_fit_with_background_removal(self, client):
        """A flat baseline is removed before fitting when a degree is given."""
        spectrum = synthesize_spectrum([(627.4, 2.84, 500.0)], np.arange(602.0, 652.0, 0.1), background=200.0)
        payload = {
            "wavelengths_nm": spectrum.wavelengths.tolist(),
            "intensities": spectrum.intensities.tolist(),
            "background_degree": 0,
        }
        response = client.post("/api/v1/spectra/fit", json=payload)

        assert response.status_code == status.HTTP_200_OK
        assert abs(response.json()["peaks"][0]["background"]) < 20.0

    def test_fit_unequal_lengths(self, client):
        """Validation error: wavelengths and intensities of different length return 422."""
        payload = {"wavelengths_nm": [600.0, 601.0, 602.0], "intensities": [1.0, 2.0]}
        response = client.post("/api/v1/spectra/fit", json=payload)

        assert response.status_code == status.HTTP_422_UNPROCESSABLE_CONTENT

    def test_fit_unordered_wavelengths(self, client):
        """Service error: decreasing wavelengths return 422."""
        payload = {"wavelengths_nm": [601.0, 600.0], "intensities": [1.0, 2.0]}
        response = client.post("/api/v1/spectra/fit", json=payload)

        assert response.status_code == status.HTTP_422_UNPROCESSABLE_CONTENT

    def test_fit_without_peaks(self, client):
        """Fit error: a monotone window has no peak to fit and returns 422."""
        w = np.arange(602.0, 652.0, 0.1)
        payload = {"wavelengths_nm": w.tolist(), "intensities": (w - 500.0).tolist()}
        response = client.post("/api/v1/spectra/fit", json=payload)

        assert response.status_code == status.HTTP_422_UNPROCESSABLE_CONTENT


class TestMatchModes:
    """Tests for POST /api/v1/spectra/match endpoint."""

    def test_match_success(self, client):
        """Happy path: measured and calculated lines pair in order."""
        payload = {
            "measured_nm": [605.4, 616.9, 627.4, 638.6, 649.6],
            "calculated": [
                {"wavelength_nm": 585.0, "parity": "OE"},
                {"wavelength_nm": 610.0, "parity": "EO"},
                {"wavelength_nm": 617.7, "parity": "EO"},
                {"wavelength_nm": 632.2, "parity": "EE"},
                {"wavelength_nm": 648.0, "parity": "EE"},
            ],
        }
        response = client.post("/api/v1/spectra/match", json=payload)

        assert response.status_code == status.HTTP_200_OK
        data = response.json()
        assert [round(p["deviation_nm"], 6) for p in data["pairs"]] == [20.4, 6.9, 9.7, 6.4, 1.6]
        assert data["pairs"][0]["parity"] == "OE"
        assert data["trend_slope"] < 0

    def test_match_empty(self, client):
        """An empty measured list gives no pairs."""
        response = client.post("/api/v1/spectra/match", json={"measured_nm": [], "calculated": []})

        assert response.status_code == status.HTTP_200_OK
        data = response.json()
        assert data["pairs"] == []
        assert data["max_deviation"] == 0.0
        assert data["trend_slope"] is None
