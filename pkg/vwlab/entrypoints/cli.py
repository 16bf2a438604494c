"""CLI entry point: runs one experiment and writes its JSON report."""

import argparse
import logging
import sys
from collections.abc import Callable
from datetime import datetime
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from vwlab.config.experiment_config import ExperimentConfig, build_config, load_experiment_file
from vwlab.config.settings import Settings
from vwlab.core import lattice as lat
from vwlab.core import vw_operator as vwo
from vwlab.core.domain.errors import PreconditionError
from vwlab.core.domain.models import REPORT_SCHEMA, CheckResult, Configuration, Field, Grid, PerturbationPack
from vwlab.core.interfaces.ports import FieldStore, ReportRepository
from vwlab.infrastructure.file_system.adapters import JsonReportRepository, SnapshotFieldStore
from vwlab.use_cases.identity_service import IdentityService
from vwlab.use_cases.lemma_oracles import ALL_LEMMAS, LemmaService
from vwlab.use_cases.solver_service import SolverService
from vwlab.use_cases.spectrum_service import (
    HARMONIC_BLOCK,
    SpectrumService,
    assemble_dense,
    irreducibility_sigma,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID_CONFIG = 2

START_AMPLITUDE = 0.5

Outcome = tuple[dict[str, Any], list[CheckResult]]


def report_schema_version() -> str:
    """Schema tag embedded in every report."""
    return REPORT_SCHEMA


def load_report(path: Path | str) -> dict[str, Any]:
    """Load a report written by this tool; raises ReportSchemaError on a foreign schema."""
    path = Path(path)
    return JsonReportRepository(path.parent).load_report(path.name)


def _setup_logging(settings: Settings) -> logging.Logger:
    """Log to stderr and, when VWLAB_LOG_DIR is set, to a dated file there."""
    formatter = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")
    root = logging.getLogger("vwlab")
    root.handlers.clear()
    root.setLevel(getattr(logging, settings.log_level.upper(), logging.INFO))

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)
    root.addHandler(stream_handler)

    if settings.log_dir is not None:
        settings.log_dir.mkdir(parents=True, exist_ok=True)
        log_file = settings.log_dir / f"vwlab_{datetime.now().strftime('%Y-%m-%d')}.log"
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)
    return root


def _grid(config: ExperimentConfig) -> Grid:
    return Grid(N=config.grid, L=config.length)


def _pack(config: ExperimentConfig, grid: Grid) -> PerturbationPack:
    if config.trivial:
        return PerturbationPack.trivial(grid)
    return lat.sample_pack(grid, config.seed, config.band, config.eps)


def _solver(config: ExperimentConfig) -> SolverService:
    return SolverService(
        tol=config.tol,
        max_newton=config.max_newton,
        max_krylov=config.max_krylov,
        krylov_rtol=config.krylov_rtol,
        tikhonov_shift=config.tikhonov_shift,
        reanchor=config.reanchor,
        certify_c=config.certify_c,
    )


def _identities(config: ExperimentConfig) -> IdentityService:
    return IdentityService(
        expansion_tol=config.expansion_tol,
        jacobian_tol=config.jacobian_tol,
        adjoint_tol=config.adjoint_tol,
        gauge_exact_tol=config.gauge_exact_tol,
        ratio_low=config.ratio_low,
        ratio_high=config.ratio_high,
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _run_verify_lemmas(config: ExperimentConfig, settings: Settings, fields: FieldStore) -> Outcome:
    tolerances = {lemma: config.det_tol for lemma in ALL_LEMMAS if lemma != "Radial"}
    tolerances["A1"] = config.det_tol_a1
    service = LemmaService(threads=settings.threads, tolerances=tolerances, rank_eps=config.rank_eps)
    reports = service.verify(config.seed, config.samples)
    checks = [
        CheckResult(
            name=f"lemma_{report.lemma_id}",
            value=float(report.failures),
            threshold=1.0,
            passed=report.failures == 0,
            details={"max_err": report.max_det_relative_error, "tol": service.tolerances[report.lemma_id]},
        )
        for report in reports
    ]
    return {"lemmas": [report.to_json_dict() for report in reports]}, checks


def _run_check_identities(config: ExperimentConfig, settings: Settings, fields: FieldStore) -> Outcome:
    checks = _identities(config).run_identities(
        _grid(config), config.seed, config.band, config.eps, trials=config.trials, directions=config.trials
    )
    return {}, checks


def _run_solve(config: ExperimentConfig, settings: Settings, fields: FieldStore) -> Outcome:
    grid = _grid(config)
    pack = _pack(config, grid)
    start = lat.sample_config(grid, config.seed, config.band, START_AMPLITUDE)
    report = _solver(config).newton_solve(pack, start)
    solution = report.config_out
    for kind, name in (("1", "A"), ("2+", "B"), ("0", "C")):
        fields.save_field(
            f"solution_{name}",
            Field(kind=kind, grid=grid, values=getattr(solution, name)),
            {"seed": config.seed, "status": report.status},
        )
    checks = [
        CheckResult(
            name="newton_converged",
            value=report.final_residual,
            threshold=config.tol,
            passed=report.converged,
            details={"status": report.status, "gauge_residual": report.gauge_residual},
        )
    ]
    results = {
        "solve": report.to_json_dict(),
        "moduli_part": vwo.classify(solution),
        "closed_split": vwo.closed_split(solution),
    }
    return results, checks


def _run_spectrum(config: ExperimentConfig, settings: Settings, fields: FieldStore) -> Outcome:
    grid = _grid(config)
    pack = _pack(config, grid)
    if config.trivial:
        cfg = Configuration.zeros(grid)
    else:
        cfg = lat.sample_config(grid, config.seed, config.band, START_AMPLITUDE)
    service = SpectrumService(_solver(config), eps=config.spectrum_eps)
    report = service.spectrum(pack, cfg)
    if config.dump_matrix:
        fields.save_matrix("combined_operator", assemble_dense(pack, cfg), {"N": grid.N, "seed": config.seed})

    checks = [
        CheckResult(
            name="index_zero",
            value=float(abs(report.index_discrete)),
            threshold=1.0,
            passed=report.index_discrete == 0,
            details={"dim_kernel": report.dim_kernel, "dim_cokernel": report.dim_cokernel},
        )
    ]
    results: dict[str, Any] = {"spectrum": report.to_json_dict()}
    if config.trivial:
        checks.append(
            CheckResult(
                name="harmonic_count",
                value=report.harmonic_count,
                threshold=float(HARMONIC_BLOCK),
                passed=report.harmonic_count == HARMONIC_BLOCK,
                comparison="within",
                details={"zero_symbol_modes": report.zero_symbol_modes},
            )
        )
    else:
        results["irreducibility_sigma"] = irreducibility_sigma(cfg)
    return results, checks


def _run_convergence(config: ExperimentConfig, settings: Settings, fields: FieldStore) -> Outcome:
    service = _identities(config)
    checks = service.complex_convergence(config.grids, config.seed, config.band)
    checks += service.gauge_convergence(config.grids, config.seed, config.band)
    if config.solution_study:
        checks += service.solution_complex_convergence(
            _solver(config), config.grids, config.seed, config.band, config.eps
        )
    return {}, checks


def _run_transversality(config: ExperimentConfig, settings: Settings, fields: FieldStore) -> Outcome:
    service = SpectrumService(_solver(config), eps=config.spectrum_eps)
    records = service.transversality_sweep(
        _grid(config), config.seeds, config.seed, config.band, config.eps, START_AMPLITUDE
    )
    converged = [record for record in records if record.converged]
    worst = max((record.final_residual for record in converged), default=0.0)
    checks = [
        CheckResult(
            name="converged_residuals",
            value=worst,
            threshold=config.tol,
            passed=worst < config.tol,
            details={"converged": len(converged), "seeds": len(records)},
        )
    ]
    results = {
        "records": [record.model_dump() for record in records],
        "converged": len(converged),
        "certified": sum(1 for record in converged if record.branch == "general"),
    }
    return results, checks


RUNNERS: dict[str, Callable[[ExperimentConfig, Settings, FieldStore], Outcome]] = {
    "verify-lemmas": _run_verify_lemmas,
    "check-identities": _run_check_identities,
    "solve": _run_solve,
    "spectrum": _run_spectrum,
    "convergence": _run_convergence,
    "transversality": _run_transversality,
}


def _report_target(config: ExperimentConfig, settings: Settings) -> tuple[Path, str]:
    if config.out is None:
        return settings.output_dir, f"{config.command}.json"
    return config.out.parent, config.out.name


def run(
    config: ExperimentConfig,
    settings: Settings | None = None,
    repository: ReportRepository | None = None,
    fields: FieldStore | None = None,
) -> int:
    """Execute one validated experiment and persist its report.

    Args:
        config: Validated experiment parameters.
        settings: Environment settings; loaded when omitted.
        repository: Report sink; a JSON file repository when omitted.
        fields: Snapshot sink for solutions and matrices.

    Returns:
        0 if every check passed, 1 if any failed, 2 if a precondition failed at run time.
    """
    settings = settings or Settings()
    root, name = _report_target(config, settings)
    repository = repository or JsonReportRepository(root)
    fields = fields or SnapshotFieldStore(root / f"{Path(name).stem}_fields")
    logger.info("Running %s (N=%s, seed=%d)", config.command, config.grid, config.seed)
    try:
        results, checks = RUNNERS[config.command](config, settings, fields)
    except PreconditionError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID_CONFIG

    failed = [check.name for check in checks if not check.passed]
    payload = {
        "schema": report_schema_version(),
        "command": config.command,
        "config": config.model_dump(mode="json", exclude={"out"}),
        "thresholds": config.thresholds(),
        "checks": [check.model_dump() for check in checks],
        "failed_checks": failed,
        "passed": not failed,
        "results": results,
    }
    location = repository.save_report(name, payload)
    print(f"Report written: {location}")
    if failed:
        print(f"Failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    settings = Settings()
    if args.threads is not None:
        settings = settings.model_copy(update={"threads": args.threads})
    _setup_logging(settings)
    overrides = {
        "command": args.command,
        "grid": args.grid,
        "length": args.length,
        "seed": args.seed,
        "band": args.band,
        "eps": args.eps,
        "tol": args.tol,
        "samples": args.samples,
        "trials": args.trials,
        "seeds": args.seeds,
        "grids": args.grids,
        "out": args.out,
        "trivial": args.trivial,
        "dump_matrix": args.dump_matrix,
    }
    try:
        file_values = load_experiment_file(args.config) if args.config else {}
        config = build_config(file_values, overrides)
    except (ValidationError, PreconditionError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except OSError as e:
        print(f"Error: cannot read config file: {e}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    return run(config, settings)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key = value experiment file; flags override it")
    parser.add_argument("--grid", type=int, help="Sites per axis N")
    parser.add_argument("--length", type=float, help="Torus period L (default 2*pi)")
    parser.add_argument("--seed", type=int, help="Run seed")
    parser.add_argument("--band", type=int, help="Max Fourier frequency of sampled fields")
    parser.add_argument("--eps", type=float, help="Perturbation pack size, at most 0.75")
    parser.add_argument("--tol", type=float, help="Newton residual tolerance")
    parser.add_argument("--samples", type=int, help="Samples per lemma oracle")
    parser.add_argument("--trials", type=int, help="Random instances per identity")
    parser.add_argument("--seeds", type=int, help="Packs in the transversality sweep")
    parser.add_argument("--grids", help="Refinement grids, e.g. 8,16,32")
    parser.add_argument(
        "--solution-study",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Also measure the complex defect at Newton solutions in convergence runs",
    )
    parser.add_argument("--out", type=Path, help="Report path (default VWLAB_OUTPUT_DIR/<command>.json)")
    parser.add_argument("--trivial", action="store_true", default=None, help="Trivial pack and configuration")
    parser.add_argument("--dump-matrix", action="store_true", default=None, help="Save the dense operator")
    parser.add_argument("--threads", type=int, help="Worker threads (overrides VWLAB_THREADS)")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="vwlab", description="Perturbed Vafa-Witten numerical laboratory")
    subparsers = parser.add_subparsers(dest="command", required=True)

    helps = {
        "verify-lemmas": "Randomized oracles for the pointwise algebraic lemmas",
        "check-identities": "Exact discrete identities on one grid",
        "solve": "Newton-Krylov solve under Coulomb gauge",
        "spectrum": "Dense SVD of the combined operator (N <= 4)",
        "convergence": "O(h^2) refinement ratios of the complex and gauge defects",
        "transversality": "sigma_min of the combined operator at computed solutions",
    }
    for command, help_text in helps.items():
        command_parser = subparsers.add_parser(command, help=help_text)
        _add_common_flags(command_parser)
        command_parser.set_defaults(func=_cmd_run)

    args = parser.parse_args(argv)

    if hasattr(args, "func"):
        return args.func(args)

    parser.print_help()
    return 1


if __name__ == "__main__":
    sys.exit(main())
