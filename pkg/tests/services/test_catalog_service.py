"""Service-level tests for the run catalog."""

from unittest.mock import AsyncMock, MagicMock, patch

from sqlalchemy.ext.asyncio import AsyncSession

from app.models.run import ModeEntry, SimulationRun
from app.services.analysis import ResonantMode
from app.services.catalog import get_run_modes, record_run


class TestRecordRun:
    """Tests for record_run service function."""

    async def test_record_run_delegates_to_dal(self):
        """Service passes the hash, kind, modes and preset through to the DAL."""
        # Arrange
        mock_db = MagicMock(spec=AsyncSession)
        mock_run = MagicMock(spec=SimulationRun)
        modes = [ResonantMode(wavelength_nm=617.7, quality_factor=274.0, amplitude=1.0, refractive_index=2.4)]

        with patch("app.services.catalog.create_run", new_callable=AsyncMock, return_value=mock_run) as mock_dal:
            # Act
            result = await record_run(mock_db, "0123456789abcdef", "run", modes, "table1-base")

        # Assert
        assert result == mock_run
        mock_dal.assert_called_once_with(mock_db, "0123456789abcdef", "run", modes, "table1-base")


class TestGetRunModes:
    """Tests for get_run_modes service function."""

    async def test_known_run(self):
        """A known hash returns the run with one page of modes."""
        # Arrange
        mock_db = MagicMock(spec=AsyncSession)
        mock_run = MagicMock(spec=SimulationRun)
        mock_modes = [MagicMock(spec=ModeEntry) for _ in range(3)]

        with patch("app.services.catalog.get_run_by_hash", new_callable=AsyncMock, return_value=mock_run), patch(
            "app.services.catalog.get_modes_by_run", new_callable=AsyncMock, return_value=(mock_modes, 7)
        ) as mock_modes_dal:
            # Act
            run, modes, total = await get_run_modes(mock_db, "0123456789abcdef", limit=3, offset=2)

        # Assert
        assert run == mock_run
        assert modes == mock_modes
        assert total == 7
        mock_modes_dal.assert_called_once_with(mock_db, "0123456789abcdef", 3, 2)

    async def test_unknown_run_skips_mode_query(self):
        """An unknown hash returns None without querying modes."""
        # Arrange
        mock_db = MagicMock(spec=AsyncSession)

        with patch("app.services.catalog.get_run_by_hash", new_callable=AsyncMock, return_value=None), patch(
            "app.services.catalog.get_modes_by_run", new_callable=AsyncMock
        ) as mock_modes_dal:
            # Act
            run, modes, total = await get_run_modes(mock_db, "0123456789abcdef", limit=20, offset=0)

        # Assert
        assert run is None
        assert modes == []
        assert total == 0
        mock_modes_dal.assert_not_called()
