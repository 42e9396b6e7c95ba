"""Run catalog business logic."""

import asyncio
from collections.abc import Sequence

from sqlalchemy.ext.asyncio import AsyncSession

from app.core.logging import logger
from app.dal.catalog import create_run, get_modes_by_run, get_run_by_hash
from app.db.base import Base
from app.db.session import AsyncSessionLocal, engine
from app.models.run import ModeEntry, SimulationRun
from app.services.analysis import ResonantMode


async def record_run(
    db: AsyncSession, config_hash: str, kind: str, modes: Sequence[ResonantMode], preset: str | None = None
) -> SimulationRun:
    """Catalog the modes of a run.

    Args:
        db: Database session.
        config_hash: Scenario hash.
        kind: ``"run"`` or ``"sweep"``.
        modes: Modes found by the run.
        preset: Preset name, if any.

    Returns:
        The cataloged run.
    """
    run = await create_run(db, config_hash, kind, modes, preset)
    logger.info("Cataloged run", extra={"config_hash": config_hash, "kind": kind, "modes": len(modes)})
    return run


async def get_run_modes(
    db: AsyncSession, config_hash: str, limit: int, offset: int
) -> tuple[SimulationRun | None, list[ModeEntry], int]:
    """Get a cataloged run and one page of its modes.

    Returns:
        Tuple of (run or None when unknown, modes, total count).
    """
    run = await get_run_by_hash(db, config_hash)
    if run is None:
        return None, [], 0
    modes, total = await get_modes_by_run(db, config_hash, limit, offset)
    return run, modes, total


async def _record_with_new_session(config_hash: str, kind: str, modes: Sequence[ResonantMode], preset: str | None) -> None:
    async with engine.begin() as conn:
        await conn.run_sync(Base.metadata.create_all)
    async with AsyncSessionLocal() as session:
        await record_run(session, config_hash, kind, modes, preset)
    await engine.dispose()


def catalog_modes(config_hash: str, kind: str, modes: Sequence[ResonantMode], preset: str | None = None) -> None:
    """Blocking catalog write for command-line use."""
    asyncio.run(_record_with_new_session(config_hash, kind, modes, preset))
