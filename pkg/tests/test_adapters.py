"""Unit tests for the report and snapshot adapters."""

import json
from pathlib import Path

import numpy as np
import pytest

from vwlab.core.domain.errors import ReportSchemaError
from vwlab.core.domain.models import REPORT_SCHEMA, Configuration, Field, Grid
from vwlab.infrastructure.file_system.adapters import JsonReportRepository, SnapshotFieldStore, dump_json
from vwlab.infrastructure.testing.adapters import MockFieldStore, MockReportRepository


class TestJsonReportRepository:
    """Tests for JsonReportRepository."""

    def test_save_and_load_report_roundtrip(self, tmp_path: Path) -> None:
        repo = JsonReportRepository(tmp_path)
        path = repo.save_report("run", {"value": np.float64(0.5), "counts": np.arange(3), "where": Path("a/b")})
        assert path == tmp_path / "run.json"
        loaded = repo.load_report("run.json")
        assert loaded["schema"] == REPORT_SCHEMA
        assert loaded["value"] == 0.5
        assert loaded["counts"] == [0, 1, 2]
        assert loaded["where"] == "a/b"

    def test_report_text_is_sorted_and_newline_terminated(self, tmp_path: Path) -> None:
        repo = JsonReportRepository(tmp_path)
        path = repo.save_report("nested/report.json", {"zeta": 1, "alpha": 2})
        text = path.read_text(encoding="utf-8")
        assert text.endswith("}\n")
        assert text.index('"alpha"') < text.index('"schema"') < text.index('"zeta"')

    def test_foreign_schema_is_rejected(self, tmp_path: Path) -> None:
        (tmp_path / "old.json").write_text(json.dumps({"schema": "other/2"}), encoding="utf-8")
        with pytest.raises(ReportSchemaError):
            JsonReportRepository(tmp_path).load_report("old")

    def test_dump_json_rejects_unknown_objects(self) -> None:
        with pytest.raises(TypeError):
            dump_json({"value": object()})


class TestSnapshotFieldStore:
    """Tests for SnapshotFieldStore."""

    def test_save_field_writes_binary_and_sidecar(self, tmp_path: Path, config4: Configuration) -> None:
        store = SnapshotFieldStore(tmp_path / "fields")
        field = Field(kind="1", grid=config4.grid, values=config4.A)
        store.save_field("solution_A", field, {"seed": 11})
        sidecar = json.loads((tmp_path / "fields" / "solution_A.json").read_text(encoding="utf-8"))
        assert sidecar == {"kind": "1", "N": 4, "L": pytest.approx(2 * np.pi), "seed": 11}
        loaded = store.load_field("solution_A")
        assert loaded.kind == "1"
        assert np.array_equal(loaded.values, config4.A)

    def test_save_matrix(self, tmp_path: Path) -> None:
        store = SnapshotFieldStore(tmp_path)
        store.save_matrix("operator", np.eye(3), {"N": 3})
        assert np.array_equal(np.load(tmp_path / "operator.npy"), np.eye(3))
        sidecar = json.loads((tmp_path / "operator.json").read_text(encoding="utf-8"))
        assert sidecar == {"shape": [3, 3], "N": 3}


class TestMockAdapters:
    """Tests for the in-memory adapters."""

    def test_mock_repository_stamps_schema_and_copies(self, report_repo: MockReportRepository) -> None:
        payload = {"checks": [1]}
        assert report_repo.save_report("r.json", payload) == "r.json"
        payload["checks"].append(2)
        assert report_repo.load_report("r.json") == {"schema": REPORT_SCHEMA, "checks": [1]}

    def test_mock_repository_missing_report(self, report_repo: MockReportRepository) -> None:
        with pytest.raises(KeyError):
            report_repo.load_report("absent.json")

    def test_mock_repository_rejects_foreign_schema(self) -> None:
        repo = MockReportRepository(initial_reports={"x": {"schema": "nope"}})
        with pytest.raises(ReportSchemaError):
            repo.load_report("x")

    def test_mock_field_store(self, field_store: MockFieldStore) -> None:
        grid = Grid(N=3)
        field = Field(kind="0", grid=grid, values=np.zeros((*grid.shape, 3, 1)))
        field_store.save_field("c", field, {"seed": 1})
        field_store.save_matrix("m", [[1, 2], [3, 4]])
        assert field_store.load_field("c") is field
        assert field_store.matrices["m"].dtype == float
        assert field_store.metadata == {"c": {"seed": 1}, "m": {}}
