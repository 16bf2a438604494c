"""Abstract interfaces (ports) for infrastructure adapters."""

from vwlab.core.interfaces.ports import FieldStore, ReportRepository

__all__ = ["FieldStore", "ReportRepository"]
