"""Abstract interfaces (ports) for infrastructure adapters."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

import numpy as np

from vwlab.core.domain.models import Field


class ReportRepository(ABC):
    """Abstract interface for storing machine-readable experiment reports."""

    @abstractmethod
    def save_report(self, name: str, payload: dict[str, Any]) -> Path | str:
        """Persist a report and return where it went."""
        ...

    @abstractmethod
    def load_report(self, name: str) -> dict[str, Any]:
        """Load a report. Raises ReportSchemaError if its schema is not the current one."""
        ...


class FieldStore(ABC):
    """Abstract interface for lattice field snapshots and dense operator dumps."""

    @abstractmethod
    def save_field(self, name: str, field: Field, metadata: dict[str, Any] | None = None) -> None:
        """Persist a field snapshot with optional provenance metadata."""
        ...

    @abstractmethod
    def load_field(self, name: str) -> Field:
        """Load a field snapshot. Raises FileNotFoundError/KeyError if missing."""
        ...

    @abstractmethod
    def save_matrix(self, name: str, matrix: np.ndarray, metadata: dict[str, Any] | None = None) -> None:
        """Persist a dense matrix (e.g. an assembled operator)."""
        ...
