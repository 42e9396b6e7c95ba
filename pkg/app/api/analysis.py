"""Cavity figure-of-merit endpoints."""

from fastapi import APIRouter, HTTPException, status

from app.core.errors import NanobeamError
from app.core.logging import logger
from app.schemas.analysis import (
    CouplingRequest,
    CouplingResponse,
    PurcellRequest,
    PurcellResponse,
    ReadoutRequest,
    ReadoutResponse,
)
from app.services.analysis import coupling_assessment, photon_budget, purcell_factor, readout_visibility

router = APIRouter(prefix="/api/v1", tags=["analysis"])


@router.post("/purcell", response_model=PurcellResponse)
def purcell_endpoint(data: PurcellRequest) -> PurcellResponse:
    """Purcell factor of a mode.

    Args:
        data: Wavelength, index, Q and mode volume.

    Returns:
        Purcell factor, the equal rate enhancement and V_m in (lambda/n)^3.

    Raises:
        HTTPException: If the inputs are rejected (422).
    """
    try:
        factor = purcell_factor(data.wavelength_nm, data.refractive_index, data.quality_factor, data.mode_volume_nm3)
    except NanobeamError as e:
        logger.warning("Purcell request rejected", extra={"error": str(e)})
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_CONTENT, detail=str(e))
    return PurcellResponse(
        purcell_factor=factor,
        rate_enhancement=factor,
        mode_volume_norm=data.mode_volume_nm3 / (data.wavelength_nm / data.refractive_index) ** 3,
    )


@router.post("/coupling", response_model=CouplingResponse)
def coupling_endpoint(data: CouplingRequest) -> CouplingResponse:
    """Emitter-cavity coupling regime.

    Raises:
        HTTPException: If the inputs are rejected (422).
    """
    try:
        assessment = coupling_assessment(
            data.quality_factor, data.mode_volume_nm3, data.wavelength_nm, data.gamma_perp, data.margin
        )
    except NanobeamError as e:
        logger.warning("Coupling request rejected", extra={"error": str(e)})
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_CONTENT, detail=str(e))
    return CouplingResponse.model_validate(assessment)


@router.post("/readout", response_model=ReadoutResponse)
def readout_endpoint(data: ReadoutRequest) -> ReadoutResponse:
    """Readout improvement and photon budget for a Purcell-enhanced emitter."""
    try:
        improvement = readout_visibility(data.purcell_factor, data.collection_gain)
        budget = photon_budget(
            data.purcell_factor,
            data.collection_gain,
            data.window_ns,
            data.lifetime_ns,
            data.shelving_ns,
            data.base_collection,
        )
    except NanobeamError as e:
        logger.warning("Readout request rejected", extra={"error": str(e)})
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_CONTENT, detail=str(e))
    return ReadoutResponse(
        improvement=improvement,
        bright_mean=budget.bright_mean,
        dim_mean=budget.dim_mean,
        contrast=budget.contrast,
        emission_rate_per_ns=budget.emission_rate_per_ns,
        collection=budget.collection,
    )
