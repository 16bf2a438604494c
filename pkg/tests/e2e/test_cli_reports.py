"""E2E tests running the CLI against real report files."""

import logging
from collections.abc import Iterator
from pathlib import Path

import numpy as np
import pytest

from vwlab.core.lattice import decode_field
from vwlab.entrypoints.cli import EXIT_OK, load_report, main


@pytest.fixture(autouse=True)
def isolated_env(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:
    """Point reports at tmp_path and drop handlers left by each run."""
    monkeypatch.setenv("VWLAB_OUTPUT_DIR", str(tmp_path / "reports"))
    monkeypatch.delenv("VWLAB_LOG_DIR", raising=False)
    monkeypatch.setenv("LOG_LEVEL", "WARNING")
    yield
    logging.getLogger("vwlab").handlers.clear()


class TestCliReportsE2E:
    """Integration tests using tmp_path (real disk I/O)."""

    def test_verify_lemmas_writes_passing_report(self, tmp_path: Path) -> None:
        assert main(["verify-lemmas", "--samples", "50", "--threads", "2"]) == EXIT_OK
        report = load_report(tmp_path / "reports" / "verify-lemmas.json")
        assert report["passed"] is True
        assert [entry["lemma"] for entry in report["results"]["lemmas"]] == [
            "A1",
            "A2",
            "A2Scaled",
            "A3",
            "Radial",
            "Rank1",
            "Surjectivity",
        ]
        assert report["config"]["samples"] == 50

    def test_reruns_are_byte_identical(self, tmp_path: Path) -> None:
        first = tmp_path / "first.json"
        second = tmp_path / "second.json"
        assert main(["verify-lemmas", "--samples", "20", "--seed", "3", "--out", str(first)]) == EXIT_OK
        assert main(["verify-lemmas", "--samples", "20", "--seed", "3", "--out", str(second)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()

    def test_check_identities_on_small_grid(self, tmp_path: Path) -> None:
        out = tmp_path / "identities.json"
        assert main(["check-identities", "--grid", "4", "--trials", "2", "--out", str(out)]) == EXIT_OK
        report = load_report(out)
        assert report["failed_checks"] == []
        assert {check["name"] for check in report["checks"]} >= {"expansion", "jacobian", "d1_adjoint"}

    def test_config_file_drives_the_run(self, tmp_path: Path) -> None:
        config = tmp_path / "lemmas.cfg"
        config.write_text("# quick run\nsamples = 10\nseed = 2\n", encoding="utf-8")
        out = tmp_path / "from-file.json"
        assert main(["verify-lemmas", "--config", str(config), "--out", str(out)]) == EXIT_OK
        report = load_report(out)
        assert report["config"]["seed"] == 2
        assert report["config"]["samples"] == 10

    @pytest.mark.slow
    def test_trivial_spectrum_has_harmonic_kernel(self, tmp_path: Path) -> None:
        out = tmp_path / "spectrum.json"
        assert main(["spectrum", "--grid", "3", "--trivial", "--dump-matrix", "--out", str(out)]) == EXIT_OK
        report = load_report(out)
        assert report["results"]["spectrum"]["dim_kernel"] == 24
        assert report["results"]["spectrum"]["index_discrete"] == 0
        matrix = np.load(tmp_path / "spectrum_fields" / "combined_operator.npy")
        assert matrix.shape == (1944, 1944)

    @pytest.mark.slow
    def test_trivial_solve_writes_snapshots(self, tmp_path: Path) -> None:
        out = tmp_path / "solve.json"
        code = main(["solve", "--grid", "4", "--trivial", "--out", str(out)])
        report = load_report(out)
        assert code == (EXIT_OK if report["passed"] else 1)
        snapshot = tmp_path / "solve_fields" / "solution_A.vwf"
        assert decode_field(snapshot.read_bytes()).kind == "1"
