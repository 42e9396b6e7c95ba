"""Run catalog endpoints."""

from fastapi import APIRouter, HTTPException, Query, status
from sqlalchemy.exc import SQLAlchemyError

from app.core.logging import logger
from app.db.session import DbSession
from app.schemas.catalog import ModeRead, PaginatedModes
from app.services.catalog import get_run_modes

router = APIRouter(prefix="/api/v1", tags=["runs"])


@router.get("/runs/{config_hash}/modes", response_model=PaginatedModes)
async def get_run_modes_endpoint(
    config_hash: str,
    db: DbSession,
    limit: int = Query(default=20, ge=1, le=100, description="Maximum number of modes to return"),
    offset: int = Query(default=0, ge=0, description="Number of modes to skip"),
) -> PaginatedModes:
    """Get the cataloged modes of a run.

    Args:
        config_hash: Scenario hash of the run.
        db: Database session.
        limit: Maximum number of modes to return (1-100).
        offset: Number of modes to skip.

    Returns:
        Paginated modes ordered by wavelength.

    Raises:
        HTTPException: If the run is unknown (404) or a database error occurs (500).
    """
    try:
        run, modes, total = await get_run_modes(db, config_hash, limit, offset)
    except SQLAlchemyError as e:
        logger.error("Database error retrieving modes", extra={"config_hash": config_hash, "error": str(e)})
        raise HTTPException(
            status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
            detail="Failed to retrieve modes",
        )
    if run is None:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"Run '{config_hash}' not found")
    logger.info("Retrieved run modes", extra={"config_hash": config_hash, "count": len(modes), "total": total})
    return PaginatedModes(
        config_hash=run.config_hash,
        kind=run.kind,
        preset=run.preset,
        items=[ModeRead.model_validate(m) for m in modes],
        total=total,
        limit=limit,
        offset=offset,
    )
