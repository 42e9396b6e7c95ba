"""Services tests package."""

