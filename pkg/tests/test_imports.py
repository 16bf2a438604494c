"""Smoke tests for the package layout."""


def test_domain_models_import():
    """Verify domain models can be imported."""
    from vwlab.core.domain.models import Configuration, Grid, PerturbationPack, SolveReport

    assert Grid is not None
    assert Configuration is not None
    assert PerturbationPack is not None
    assert SolveReport is not None


def test_ports_import():
    """Verify port interfaces can be imported."""
    from vwlab.core.interfaces.ports import FieldStore, ReportRepository

    assert ReportRepository is not None
    assert FieldStore is not None


def test_adapters_implement_ports():
    from vwlab.core.interfaces import FieldStore, ReportRepository
    from vwlab.infrastructure.file_system import JsonReportRepository, SnapshotFieldStore
    from vwlab.infrastructure.testing import MockFieldStore, MockReportRepository

    assert issubclass(JsonReportRepository, ReportRepository)
    assert issubclass(MockReportRepository, ReportRepository)
    assert issubclass(SnapshotFieldStore, FieldStore)
    assert issubclass(MockFieldStore, FieldStore)


def test_cli_entry_point_import():
    from vwlab.entrypoints.cli import main, report_schema_version

    assert callable(main)
    assert report_schema_version() == "vwlab-report/1"


def test_use_case_services_import():
    from vwlab.use_cases import IdentityService, LemmaService, SolverService, SpectrumService

    assert SpectrumService(SolverService()).solver is not None
    assert LemmaService(threads=0).threads == 1
    assert IdentityService().ratio_low < IdentityService().ratio_high
