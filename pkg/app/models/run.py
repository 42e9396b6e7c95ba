"""Run catalog database models."""

from datetime import datetime

from sqlalchemy import Boolean, Float, ForeignKey, String, func
from sqlalchemy.orm import Mapped, mapped_column, relationship

from app.db.base import Base


class SimulationRun(Base):
    """One cataloged ``run`` or ``sweep`` point, keyed by scenario hash."""

    __tablename__ = "simulation_runs"

    id: Mapped[int] = mapped_column(primary_key=True)
    config_hash: Mapped[str] = mapped_column(String(16), index=True, unique=True, nullable=False)
    preset: Mapped[str | None] = mapped_column(String, nullable=True)
    kind: Mapped[str] = mapped_column(String, nullable=False)
    created_at: Mapped[datetime] = mapped_column(server_default=func.now(), nullable=False)

    modes: Mapped[list["ModeEntry"]] = relationship(
        back_populates="run", cascade="all, delete-orphan", order_by="ModeEntry.wavelength_nm"
    )


class ModeEntry(Base):
    """A resonance found by a cataloged run."""

    __tablename__ = "mode_entries"

    id: Mapped[int] = mapped_column(primary_key=True)
    run_id: Mapped[int] = mapped_column(ForeignKey("simulation_runs.id", ondelete="CASCADE"), index=True)
    wavelength_nm: Mapped[float] = mapped_column(Float, nullable=False)
    quality_factor: Mapped[float] = mapped_column(Float, nullable=False)
    mode_volume_norm: Mapped[float | None] = mapped_column(Float, nullable=True)
    parity: Mapped[str | None] = mapped_column(String(2), nullable=True)
    purcell_factor: Mapped[float | None] = mapped_column(Float, nullable=True)
    low_confidence: Mapped[bool] = mapped_column(Boolean, default=False, nullable=False)

    run: Mapped[SimulationRun] = relationship(back_populates="modes")
