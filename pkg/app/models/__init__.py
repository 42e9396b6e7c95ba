"""Database models."""

from app.models.run import ModeEntry, SimulationRun

__all__ = ["ModeEntry", "SimulationRun"]
