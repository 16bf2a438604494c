"""Domain errors raised by the numerical kernels and loaders."""


class VwlabError(Exception):
    """Base class for all vwlab errors."""


class DegreeError(VwlabError, ValueError):
    """A form has the wrong degree for the requested operation."""


class RankError(VwlabError, ValueError):
    """A section has higher rank than the operation allows."""


class PreconditionError(VwlabError, ValueError):
    """Inputs violate a documented precondition."""


class ShapeError(VwlabError, ValueError):
    """Field arrays do not have matching shapes."""


class ReportSchemaError(VwlabError, ValueError):
    """A report on disk does not carry the expected schema version."""
