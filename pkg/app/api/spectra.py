"""Spectrum fitting and mode matching endpoints."""

from fastapi import APIRouter, HTTPException, status

from app.core.errors import NanobeamError
from app.core.logging import logger
from app.schemas.spectra import MatchRequest, MatchResponse, PeakRead, SpectrumFitRequest, SpectrumFitResponse
from app.services.spectra import Spectrum, fit_lorentzians, match_modes, subtract_background

router = APIRouter(prefix="/api/v1/spectra", tags=["spectra"])


@router.post("/fit", response_model=SpectrumFitResponse)
def fit_endpoint(data: SpectrumFitRequest) -> SpectrumFitResponse:
    """Fit Lorentzians plus a constant inside each window.

    Args:
        data: Spectrum samples, windows and peak counts.

    Returns:
        Fitted peaks sorted by wavelength.

    Raises:
        HTTPException: If the spectrum or the fit request is rejected (422).
    """
    try:
        spectrum = Spectrum(wavelengths=data.wavelengths_nm, intensities=data.intensities)
        if data.background_degree is not None:
            spectrum = subtract_background(spectrum, data.background_degree)
        peaks = fit_lorentzians(spectrum, data.windows, data.peaks_per_window)
    except NanobeamError as e:
        logger.warning("Fit request rejected", extra={"error": str(e)})
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_CONTENT, detail=str(e))
    logger.info("Fitted spectrum", extra={"peaks": len(peaks)})
    return SpectrumFitResponse(
        peaks=[PeakRead.model_validate(p) for p in peaks], clamp_fraction=spectrum.clamp_fraction
    )


@router.post("/match", response_model=MatchResponse)
def match_endpoint(data: MatchRequest) -> MatchResponse:
    """Order-preserving pairing of measured and calculated wavelengths."""
    matching = match_modes(data.measured_nm, data.calculated)
    return MatchResponse.model_validate(matching)
