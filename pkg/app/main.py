from contextlib import asynccontextmanager

from fastapi import FastAPI

from app.api.analysis import router as analysis_router
from app.api.health import router as health_router
from app.api.runs import router as runs_router
from app.api.spectra import router as spectra_router
from app.core.logging import setup_logging
from app.db.base import Base
from app.db.session import engine
from app.models import ModeEntry, SimulationRun  # noqa: F401 - Import to register models


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Lifespan event handler for startup and shutdown."""
    setup_logging()
    async with engine.begin() as conn:
        await conn.run_sync(Base.metadata.create_all)
    yield


app = FastAPI(
    title="Nanobeam Cavity API",
    description="Cavity figures of merit, spectrum fitting and the simulation run catalog",
    version="0.1.0",
    lifespan=lifespan,
)


app.include_router(health_router)
app.include_router(analysis_router)
app.include_router(spectra_router)
app.include_router(runs_router)
