"""API tests package."""

