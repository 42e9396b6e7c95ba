"""Data access layer for the run catalog."""

from collections.abc import Sequence

from sqlalchemy import delete, func, select
from sqlalchemy.ext.asyncio import AsyncSession

from app.models.run import ModeEntry, SimulationRun
from app.services.analysis import ResonantMode


async def create_run(
    db: AsyncSession, config_hash: str, kind: str, modes: Sequence[ResonantMode], preset: str | None = None
) -> SimulationRun:
    """Persist a run and its modes, replacing an earlier entry with the same hash.

    Args:
        db: Database session.
        config_hash: Scenario hash of the run.
        kind: ``"run"`` or ``"sweep"``.
        modes: Modes to record.
        preset: Geometry preset name, if the scenario used one.

    Returns:
        The created run.
    """
    stale = select(SimulationRun.id).where(SimulationRun.config_hash == config_hash)
    await db.execute(delete(ModeEntry).where(ModeEntry.run_id.in_(stale)))
    await db.execute(delete(SimulationRun).where(SimulationRun.config_hash == config_hash))
    run = SimulationRun(config_hash=config_hash, preset=preset, kind=kind)
    run.modes = [
        ModeEntry(
            wavelength_nm=mode.wavelength_nm,
            quality_factor=mode.quality_factor,
            mode_volume_norm=mode.mode_volume_norm,
            parity=mode.parity,
            purcell_factor=mode.purcell_factor,
            low_confidence=mode.flagged,
        )
        for mode in modes
    ]
    db.add(run)
    await db.commit()
    await db.refresh(run)
    return run


async def get_run_by_hash(db: AsyncSession, config_hash: str) -> SimulationRun | None:
    result = await db.execute(select(SimulationRun).where(SimulationRun.config_hash == config_hash))
    return result.scalar_one_or_none()


async def get_modes_by_run(
    db: AsyncSession, config_hash: str, limit: int, offset: int
) -> tuple[list[ModeEntry], int]:
    """Get paginated modes of a run.

    Args:
        db: Database session.
        config_hash: Scenario hash of the run.
        limit: Maximum number of modes to return.
        offset: Number of modes to skip.

    Returns:
        Tuple of (modes ordered by wavelength, total count).
    """
    count_query = (
        select(func.count())
        .select_from(ModeEntry)
        .join(SimulationRun)
        .where(SimulationRun.config_hash == config_hash)
    )
    result = await db.execute(count_query)
    total = result.scalar_one()

    modes_query = (
        select(ModeEntry)
        .join(SimulationRun)
        .where(SimulationRun.config_hash == config_hash)
        .order_by(ModeEntry.wavelength_nm.asc(), ModeEntry.id.asc())
        .limit(limit)
        .offset(offset)
    )
    result = await db.execute(modes_query)
    modes = list(result.scalars().all())

    return modes, total
