"""File system adapters for reports and field snapshots."""

from vwlab.infrastructure.file_system.adapters import JsonReportRepository, SnapshotFieldStore

__all__ = ["JsonReportRepository", "SnapshotFieldStore"]
