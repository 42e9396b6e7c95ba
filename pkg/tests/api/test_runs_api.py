"""API-level tests for the run catalog endpoints."""

import pytest_asyncio
from fastapi import status

from app.dal.catalog import create_run
from app.services.analysis import ResonantMode

RUN_HASH = "0123456789abcdef"


@pytest_asyncio.fixture(scope="function")
async def cataloged_run(db_session):
    """Catalog one run with five modes."""
    modes = [
        ResonantMode(
            wavelength_nm=w,
            quality_factor=q,
            amplitude=1.0,
            refractive_index=2.4,
            parity=p,
            mode_volume_nm3=2.0e7,
            mode_volume_norm=1.8,
        )
        for w, q, p in [(648.0, 185.0, "EE"), (585.0, 80.0, "OE"), (617.7, 274.0, "EO"), (610.0, 180.0, "EO"), (632.2, 71.0, "EE")]
    ]
    return await create_run(db_session, RUN_HASH, "run", modes, "table1-base")


class TestGetRunModes:
    """Tests for GET /api/v1/runs/{config_hash}/modes endpoint."""

    def test_get_modes(self, client, cataloged_run):
        """Read path: modes come back ordered by wavelength with run metadata."""
        response = client.get(f"/api/v1/runs/{RUN_HASH}/modes")

        assert response.status_code == status.HTTP_200_OK
        data = response.json()
        assert data["config_hash"] == RUN_HASH
        assert data["kind"] == "run"
        assert data["preset"] == "table1-base"
        assert data["total"] == 5
        assert [m["wavelength_nm"] for m in data["items"]] == [585.0, 610.0, 617.7, 632.2, 648.0]
        assert data["items"][0]["parity"] == "OE"

    def test_get_modes_with_pagination(self, client, cataloged_run):
        """Limit and offset select one page."""
        response = client.get(f"/api/v1/runs/{RUN_HASH}/modes?limit=2&offset=2")

        assert response.status_code == status.HTTP_200_OK
        data = response.json()
        assert [m["wavelength_nm"] for m in data["items"]] == [617.7, 632.2]
        assert data["limit"] == 2
        assert data["offset"] == 2
        assert data["total"] == 5

    def test_unknown_run(self, client):
        """Unknown hash returns 404."""
        response = client.get("/api/v1/runs/ffffffffffffffff/modes")

        assert response.status_code == status.HTTP_404_NOT_FOUND

    def test_invalid_limit(self, client):
        """Validation error: a limit above 100 returns 422."""
        response = client.get(f"/api/v1/runs/{RUN_HASH}/modes?limit=101")

        assert response.status_code == status.HTTP_422_UNPROCESSABLE_CONTENT
