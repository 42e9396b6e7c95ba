"""Initialize the run catalog tables."""

import asyncio

from app.db.base import Base
from app.db.session import engine
from app.models import ModeEntry, SimulationRun  # noqa: F401 - Import to register models


async def create_tables() -> None:
    async with engine.begin() as conn:
        await conn.run_sync(Base.metadata.create_all)
    await engine.dispose()


if __name__ == "__main__":
    print("Creating catalog tables...")
    asyncio.run(create_tables())
    print("Catalog tables created successfully!")
