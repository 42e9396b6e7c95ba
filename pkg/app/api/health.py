"""Health check endpoints."""

from fastapi import APIRouter

from app.core.units import NV_ZPL_NM

router = APIRouter(tags=["health"])


@router.get("/health")
def health_check() -> dict[str, str | float]:
    """Liveness probe.

    Returns:
        dict: Status plus the emitter line the figure-of-merit endpoints assume.
    """
    return {"status": "healthy", "service": "nanobeam", "zpl_nm": NV_ZPL_NM}
