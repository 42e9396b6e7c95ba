"""Data access layer for database operations."""

