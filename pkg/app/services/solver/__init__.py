"""Staggered-grid time-domain Maxwell solver."""

from app.services.solver.bands import BandPoint, band_structure
from app.services.solver.ringdown import FieldSnapshot, RingdownRecord, plane_slice, run_ringdown, snapshot_fields
from app.services.solver.state import SimulationState, SourceWaveform, step

__all__ = [
    "BandPoint",
    "FieldSnapshot",
    "RingdownRecord",
    "SimulationState",
    "SourceWaveform",
    "band_structure",
    "plane_slice",
    "run_ringdown",
    "snapshot_fields",
    "step",
]
