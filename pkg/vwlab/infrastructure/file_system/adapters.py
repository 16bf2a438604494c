"""File system adapters for JSON reports and VWF1 field snapshots."""

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from vwlab.core.domain.errors import ReportSchemaError
from vwlab.core.domain.models import REPORT_SCHEMA, Field
from vwlab.core.interfaces.ports import FieldStore, ReportRepository
from vwlab.core.lattice import decode_field, encode_field

logger = logging.getLogger(__name__)


def _json_default(value: Any) -> Any:
    """Convert numpy scalars and arrays for json.dumps."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def dump_json(payload: dict[str, Any]) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n"


def check_schema(payload: dict[str, Any], source: str) -> dict[str, Any]:
    schema = payload.get("schema")
    if schema != REPORT_SCHEMA:
        raise ReportSchemaError(f"{source}: schema {schema!r} is not {REPORT_SCHEMA!r}")
    return payload


class JsonReportRepository(ReportRepository):
    """Writes reports as UTF-8 JSON files under a root directory."""

    def __init__(self, root: Path | str) -> None:
        self.root = Path(root)

    def _resolve_path(self, name: str) -> Path:
        """Resolve name relative to root unless absolute; add .json if no suffix."""
        path = Path(name)
        if not path.suffix:
            path = path.with_suffix(".json")
        return path if path.is_absolute() else self.root / path

    def save_report(self, name: str, payload: dict[str, Any]) -> Path:
        path = self._resolve_path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        body = {"schema": REPORT_SCHEMA, **payload}
        path.write_text(dump_json(body), encoding="utf-8")
        logger.info("Wrote report %s", path)
        return path

    def load_report(self, name: str) -> dict[str, Any]:
        path = self._resolve_path(name)
        payload = json.loads(path.read_text(encoding="utf-8"))
        return check_schema(payload, str(path))


class SnapshotFieldStore(FieldStore):
    """Stores fields as VWF1 binaries and matrices as .npy, each with a JSON sidecar."""

    def __init__(self, root: Path | str) -> None:
        self.root = Path(root)

    def _write_sidecar(self, path: Path, metadata: dict[str, Any]) -> None:
        path.with_suffix(".json").write_text(dump_json(metadata), encoding="utf-8")

    def save_field(self, name: str, field: Field, metadata: dict[str, Any] | None = None) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / f"{name}.vwf"
        path.write_bytes(encode_field(field))
        sidecar = {"kind": field.kind, "N": field.grid.N, "L": field.grid.L, **(metadata or {})}
        self._write_sidecar(path, sidecar)
        logger.debug("Saved %s field snapshot %s", field.kind, path)

    def load_field(self, name: str) -> Field:
        path = self.root / f"{name}.vwf"
        return decode_field(path.read_bytes())

    def save_matrix(self, name: str, matrix: np.ndarray, metadata: dict[str, Any] | None = None) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        path = self.root / f"{name}.npy"
        np.save(path, np.asarray(matrix, dtype=float))
        self._write_sidecar(path, {"shape": list(np.shape(matrix)), **(metadata or {})})
        logger.info("Saved %dx%d matrix %s", *np.shape(matrix), path)
