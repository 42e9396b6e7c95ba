"""Data access layer tests package."""

