"""Unit tests for the CLI: exit codes, report payloads and snapshot output."""

import json
import logging
from collections.abc import Iterator
from pathlib import Path
from unittest.mock import MagicMock, patch

import pytest

from vwlab.config.experiment_config import ExperimentConfig
from vwlab.config.settings import Settings
from vwlab.core.domain.errors import PreconditionError, ReportSchemaError
from vwlab.core.domain.models import REPORT_SCHEMA, CheckResult, Configuration, Grid, SolveReport
from vwlab.entrypoints import cli
from vwlab.infrastructure.testing.adapters import MockFieldStore, MockReportRepository
from vwlab.use_cases.identity_service import IdentityService
from vwlab.use_cases.solver_service import SolverService


@pytest.fixture
def settings(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Iterator[Settings]:
    """Settings writing into a temporary output directory."""
    monkeypatch.setenv("VWLAB_OUTPUT_DIR", str(tmp_path / "reports"))
    monkeypatch.delenv("VWLAB_LOG_DIR", raising=False)
    yield Settings(_env_file=None)
    logging.getLogger("vwlab").handlers.clear()


def _failing_runner(config: ExperimentConfig, settings: Settings, fields: MockFieldStore) -> cli.Outcome:
    check = CheckResult(name="always_fails", value=2.0, threshold=1.0, passed=False)
    return {"answer": 42}, [check]


def _raising_runner(config: ExperimentConfig, settings: Settings, fields: MockFieldStore) -> cli.Outcome:
    raise PreconditionError("sampled pack is degenerate")


class TestMain:
    """Argument parsing and configuration errors."""

    def test_dense_command_on_large_grid_is_invalid(self, settings: Settings, capsys: pytest.CaptureFixture) -> None:
        assert cli.main(["spectrum", "--grid", "5"]) == cli.EXIT_INVALID_CONFIG
        assert "Error:" in capsys.readouterr().err

    def test_malformed_config_file_is_invalid(self, settings: Settings, tmp_path: Path) -> None:
        path = tmp_path / "bad.cfg"
        path.write_text("grid eight\n", encoding="utf-8")
        assert cli.main(["solve", "--config", str(path)]) == cli.EXIT_INVALID_CONFIG

    def test_missing_config_file_is_invalid(self, settings: Settings, tmp_path: Path) -> None:
        assert cli.main(["solve", "--config", str(tmp_path / "absent.cfg")]) == cli.EXIT_INVALID_CONFIG

    def test_subcommand_is_required(self) -> None:
        with pytest.raises(SystemExit):
            cli.main([])

    def test_flags_reach_the_runner(self, settings: Settings, tmp_path: Path) -> None:
        seen: list[ExperimentConfig] = []

        def capture(config: ExperimentConfig, settings: Settings, fields: MockFieldStore) -> cli.Outcome:
            seen.append(config)
            return {}, []

        out = tmp_path / "custom.json"
        with patch.dict(cli.RUNNERS, {"solve": capture}):
            code = cli.main(["solve", "--grid", "6", "--seed", "5", "--trivial", "--out", str(out)])
        assert code == cli.EXIT_OK
        assert seen[0].grid == 6
        assert seen[0].seed == 5
        assert seen[0].trivial is True
        assert json.loads(out.read_text(encoding="utf-8"))["passed"] is True


class TestRun:
    """Report assembly and exit codes."""

    def test_failed_check_gives_exit_one(self, settings: Settings, report_repo: MockReportRepository) -> None:
        config = ExperimentConfig(command="solve", grid=4)
        with patch.dict(cli.RUNNERS, {"solve": _failing_runner}):
            code = cli.run(config, settings, report_repo, MockFieldStore())
        assert code == cli.EXIT_CHECK_FAILED
        payload = report_repo.reports["solve.json"]
        assert payload["schema"] == REPORT_SCHEMA
        assert payload["failed_checks"] == ["always_fails"]
        assert payload["passed"] is False
        assert payload["results"] == {"answer": 42}
        assert payload["config"]["grid"] == 4
        assert "out" not in payload["config"]
        assert payload["thresholds"]["det_tol"] == 1e-10

    def test_runtime_precondition_gives_exit_two(self, settings: Settings, report_repo: MockReportRepository) -> None:
        config = ExperimentConfig(command="solve", grid=4)
        with patch.dict(cli.RUNNERS, {"solve": _raising_runner}):
            code = cli.run(config, settings, report_repo, MockFieldStore())
        assert code == cli.EXIT_INVALID_CONFIG
        assert report_repo.reports == {}

    def test_solve_saves_solution_fields(
        self, settings: Settings, report_repo: MockReportRepository, field_store: MockFieldStore
    ) -> None:
        grid = Grid(N=4)
        solver = MagicMock()
        solver.newton_solve.return_value = SolveReport(
            converged=True,
            iterations=2,
            final_residual=1e-12,
            gauge_residual=0.0,
            config_out=Configuration.zeros(grid),
            status="converged",
        )
        config = ExperimentConfig(command="solve", grid=4)
        with patch("vwlab.entrypoints.cli.SolverService", return_value=solver):
            code = cli.run(config, settings, report_repo, field_store)
        assert code == cli.EXIT_OK
        assert set(field_store.fields) == {"solution_A", "solution_B", "solution_C"}
        assert field_store.fields["solution_B"].kind == "2+"
        assert field_store.metadata["solution_A"]["status"] == "converged"
        results = report_repo.reports["solve.json"]["results"]
        assert results["moduli_part"] == "asd"
        assert "config_out" not in results["solve"]

    @pytest.mark.parametrize("solution_study", [True, False])
    def test_convergence_runs_the_solution_study_on_request(
        self, settings: Settings, report_repo: MockReportRepository, solution_study: bool
    ) -> None:
        def ratio(name: str) -> list[CheckResult]:
            return [CheckResult(name=name, value=3.9, threshold=3.4, passed=True, comparison="within")]

        service = MagicMock(spec=IdentityService)
        service.complex_convergence.return_value = ratio("complex_ratio_8_16")
        service.gauge_convergence.return_value = ratio("gauge_ratio_8_16")
        service.solution_complex_convergence.return_value = ratio("complex_solution_ratio_8_16")
        config = ExperimentConfig(command="convergence", grids=(8, 16), solution_study=solution_study)
        with patch("vwlab.entrypoints.cli.IdentityService", return_value=service):
            code = cli.run(config, settings, report_repo, MockFieldStore())
        assert code == cli.EXIT_OK
        names = [check["name"] for check in report_repo.reports["convergence.json"]["checks"]]
        assert ("complex_solution_ratio_8_16" in names) == solution_study
        if solution_study:
            solver, grids = service.solution_complex_convergence.call_args.args[:2]
            assert isinstance(solver, SolverService)
            assert tuple(grids) == (8, 16)
        else:
            service.solution_complex_convergence.assert_not_called()

    def test_verify_lemmas_passes_rank_threshold(self, settings: Settings, report_repo: MockReportRepository) -> None:
        service = MagicMock()
        service.verify.return_value = []
        config = ExperimentConfig(command="verify-lemmas", samples=10, rank_eps=1e-6)
        with patch("vwlab.entrypoints.cli.LemmaService", return_value=service) as factory:
            code = cli.run(config, settings, report_repo, MockFieldStore())
        assert code == cli.EXIT_OK
        assert factory.call_args.kwargs["rank_eps"] == 1e-6

    def test_default_report_location(self, settings: Settings) -> None:
        config = ExperimentConfig(command="solve", grid=4)
        with patch.dict(cli.RUNNERS, {"solve": lambda *_: ({}, [])}):
            assert cli.run(config, settings) == cli.EXIT_OK
        assert (settings.output_dir / "solve.json").exists()


class TestReports:
    """Schema tagging of reports on disk."""

    def test_schema_version(self) -> None:
        assert cli.report_schema_version() == REPORT_SCHEMA

    def test_load_report_rejects_foreign_schema(self, tmp_path: Path) -> None:
        path = tmp_path / "old.json"
        path.write_text(json.dumps({"schema": "vwlab-report/0"}), encoding="utf-8")
        with pytest.raises(ReportSchemaError):
            cli.load_report(path)

    def test_setup_logging_adds_file_handler(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        monkeypatch.setenv("VWLAB_LOG_DIR", str(tmp_path / "logs"))
        logger = cli._setup_logging(Settings(_env_file=None))
        assert len(logger.handlers) == 2
        assert list((tmp_path / "logs").glob("vwlab_*.log"))
        for handler in logger.handlers:
            handler.close()
        logger.handlers.clear()
