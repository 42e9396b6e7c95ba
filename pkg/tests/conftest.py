"""Pytest configuration and fixtures."""

import numpy as np
import pytest
import pytest_asyncio
from fastapi.testclient import TestClient
from sqlalchemy.ext.asyncio import AsyncSession, async_sessionmaker, create_async_engine

from app.db.base import Base
from app.db.session import get_db
from app.main import app
from app.schemas.geometry import GridRegion
from app.services.geometry import DielectricGrid


# File-based SQLite database for tests (more reliable than :memory: across threads)
TEST_DB_PATH = "./test_catalog.db"
SQLALCHEMY_DATABASE_URL = f"sqlite+aiosqlite:///{TEST_DB_PATH}"

test_engine = create_async_engine(
    SQLALCHEMY_DATABASE_URL,
    echo=False,
)
TestAsyncSessionLocal = async_sessionmaker(
    test_engine,
    class_=AsyncSession,
    expire_on_commit=False,
)


@pytest_asyncio.fixture(scope="function")
async def db_session():
    """Create a fresh async database session for each test."""
    async with test_engine.begin() as conn:
        await conn.run_sync(Base.metadata.drop_all)
        await conn.run_sync(Base.metadata.create_all)

    async with TestAsyncSessionLocal() as session:
        try:
            yield session
        finally:
            await session.close()
            async with test_engine.begin() as conn:
                await conn.run_sync(Base.metadata.drop_all)


@pytest.fixture(scope="function")
def client(db_session: AsyncSession):
    """Create a test client with overridden database dependency."""
    async def override_get_db():
        try:
            yield db_session
        finally:
            pass

    app.dependency_overrides[get_db] = override_get_db
    with TestClient(app) as test_client:
        yield test_client
    app.dependency_overrides.clear()


def vacuum_grid(shape, cell_size_nm=10.0, origin_nm=None, eps=1.0) -> DielectricGrid:
    """Uniform grid centred on the origin unless an origin is given."""
    if origin_nm is None:
        origin_nm = tuple(-0.5 * n * cell_size_nm for n in shape)
    fill = np.full(shape, eps, dtype=np.float64)
    return DielectricGrid(
        eps_x=fill.copy(),
        eps_y=fill.copy(),
        eps_z=fill.copy(),
        cell_size_nm=cell_size_nm,
        origin_nm=origin_nm,
        region=GridRegion.FULL,
        refractive_index=float(np.sqrt(eps)),
    )


@pytest.fixture
def make_grid():
    """Factory for uniform dielectric grids."""
    return vacuum_grid


def dielectric_volume(grid: DielectricGrid, component: str = "ex") -> float:
    """Solid volume (nm^3) implied by one permittivity component."""
    contrast = grid.refractive_index**2 - 1.0
    if contrast <= 0:
        return 0.0
    return float(np.sum(grid.eps(component) - 1.0) / contrast * grid.cell_size_nm**3)
