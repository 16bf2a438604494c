"""Domain values and errors."""

from vwlab.core.domain.errors import (
    DegreeError,
    PreconditionError,
    RankError,
    ReportSchemaError,
    ShapeError,
    VwlabError,
)
from vwlab.core.domain.models import (
    CheckResult,
    Configuration,
    Field,
    FiberForm,
    GaugeField,
    Grid,
    LemmaReport,
    PerturbationPack,
    REPORT_SCHEMA,
    SolveReport,
    SpectrumReport,
    Su2Element,
    Su2Form,
    TangentTriple,
    TransversalityRecord,
    VwResidual,
)

__all__ = [
    "CheckResult",
    "Configuration",
    "DegreeError",
    "Field",
    "FiberForm",
    "GaugeField",
    "Grid",
    "LemmaReport",
    "PerturbationPack",
    "PreconditionError",
    "REPORT_SCHEMA",
    "RankError",
    "ReportSchemaError",
    "ShapeError",
    "SolveReport",
    "SpectrumReport",
    "Su2Element",
    "Su2Form",
    "TangentTriple",
    "TransversalityRecord",
    "VwResidual",
    "VwlabError",
]
