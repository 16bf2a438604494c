"""Test adapters for unit testing."""

from vwlab.infrastructure.testing.adapters import MockFieldStore, MockReportRepository

__all__ = ["MockFieldStore", "MockReportRepository"]
