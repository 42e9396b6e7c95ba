"""Declarative base for the run catalog tables."""

from sqlalchemy.orm import DeclarativeBase


class Base(DeclarativeBase):
    """Base class for catalog ORM models."""
