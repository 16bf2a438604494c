"""Domain values for the Vafa-Witten laboratory.

Pointwise algebra values (forms, su(2) elements) and lattice values
(grids, configurations, perturbation packs) are pydantic models wrapping
numpy arrays. Lattice arrays have the layout ``(*batch, N, N, N, N, 3, n)``:
four periodic grid axes, the su(2) index, then the form index. Self-dual
2-forms are stored by their three coordinates in the basis
``omega_1, omega_2, omega_3``; 0-forms keep a trailing axis of length 1.
"""

import math
from typing import Annotated, Any, Literal

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field as PydanticField, model_validator

FieldKind = Literal["0", "1", "2", "2+", "3", "4"]

# Form components per site for each field kind.
FIBER_SIZE: dict[str, int] = {"0": 1, "1": 4, "2": 6, "2+": 3, "3": 4, "4": 1}

REPORT_SCHEMA = "vwlab-report/1"

LemmaId = Literal["A1", "A2", "A2Scaled", "A3", "Radial", "Rank1", "Surjectivity"]


def _as_float_array(value: Any) -> np.ndarray:
    return np.asarray(value, dtype=float)


FloatArray = Annotated[np.ndarray, BeforeValidator(_as_float_array)]


class _ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class FiberForm(_ArrayModel):
    """A real p-form at one point, in the lexicographic basis e^I of R^4."""

    degree: int = PydanticField(ge=0, le=4)
    coeffs: FloatArray

    @model_validator(mode="after")
    def _check_length(self) -> "FiberForm":
        expected = math.comb(4, self.degree)
        if self.coeffs.shape != (expected,):
            raise ValueError(f"degree {self.degree} form needs {expected} coefficients, got shape {self.coeffs.shape}")
        return self


class Su2Element(_ArrayModel):
    """An element of su(2) in the basis eta_1, eta_2, eta_3."""

    coords: FloatArray

    @model_validator(mode="after")
    def _check_shape(self) -> "Su2Element":
        if self.coords.shape != (3,):
            raise ValueError(f"su(2) element needs 3 coordinates, got shape {self.coords.shape}")
        return self


class Su2Form(_ArrayModel):
    """An su(2)-valued p-form at one point: Lie index x form index."""

    degree: int = PydanticField(ge=0, le=4)
    coords: FloatArray

    @model_validator(mode="after")
    def _check_shape(self) -> "Su2Form":
        expected = (3, math.comb(4, self.degree))
        if self.coords.shape != expected:
            raise ValueError(f"degree {self.degree} su(2) form needs shape {expected}, got {self.coords.shape}")
        return self


class Grid(BaseModel):
    """Periodic cubic lattice on the flat torus of period L."""

    model_config = ConfigDict(frozen=True)

    N: int = PydanticField(ge=3, description="Sites per axis")
    L: float = PydanticField(default=2 * math.pi, gt=0, description="Torus period")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.N, self.N, self.N, self.N)

    @property
    def volume_element(self) -> float:
        """h^4, the weight of one site in discrete integrals."""
        return self.h**4

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Site coordinates x_1..x_4 as broadcastable ``(N, N, N, N)`` arrays."""
        axis = np.arange(self.N) * self.h
        return tuple(np.meshgrid(axis, axis, axis, axis, indexing="ij"))


def _check_field(values: np.ndarray, kind: str, grid: Grid, label: str) -> None:
    trailing = (*grid.shape, 3, FIBER_SIZE[kind])
    if values.shape[-6:] != trailing:
        raise ValueError(f"{label} must end with shape {trailing}, got {values.shape}")


class Field(_ArrayModel):
    """A lattice field of one kind, e.g. an su(2)-valued 1-form."""

    kind: FieldKind
    grid: Grid
    values: FloatArray

    @model_validator(mode="after")
    def _check_values(self) -> "Field":
        _check_field(self.values, self.kind, self.grid, "values")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")
        return self


class TangentTriple(_ArrayModel):
    """A tangent vector (a, b, c) to the configuration space."""

    a: FloatArray
    b: FloatArray
    c: FloatArray

    @classmethod
    def zeros(cls, grid: Grid) -> "TangentTriple":
        return cls(
            a=np.zeros((*grid.shape, 3, 4)),
            b=np.zeros((*grid.shape, 3, 3)),
            c=np.zeros((*grid.shape, 3, 1)),
        )

    def scaled(self, s: float) -> "TangentTriple":
        return TangentTriple(a=s * self.a, b=s * self.b, c=s * self.c)

    def plus(self, other: "TangentTriple") -> "TangentTriple":
        return TangentTriple(a=self.a + other.a, b=self.b + other.b, c=self.c + other.c)


class Configuration(_ArrayModel):
    """The triple (A, B, C): connection 1-form, self-dual 2-form, 0-form."""

    grid: Grid
    A: FloatArray
    B: FloatArray
    C: FloatArray

    @model_validator(mode="after")
    def _check_shapes(self) -> "Configuration":
        _check_field(self.A, "1", self.grid, "A")
        _check_field(self.B, "2+", self.grid, "B")
        _check_field(self.C, "0", self.grid, "C")
        return self

    @classmethod
    def zeros(cls, grid: Grid) -> "Configuration":
        zero = TangentTriple.zeros(grid)
        return cls(grid=grid, A=zero.a, B=zero.b, C=zero.c)

    def shifted(self, t: TangentTriple, s: float = 1.0) -> "Configuration":
        """Return cfg + s * t."""
        return Configuration(grid=self.grid, A=self.A + s * t.a, B=self.B + s * t.b, C=self.C + s * t.c)

    def minus(self, other: "Configuration") -> TangentTriple:
        """Return cfg - other as a tangent triple."""
        return TangentTriple(a=self.A - other.A, b=self.B - other.B, c=self.C - other.C)

    def as_tangent(self) -> TangentTriple:
        return TangentTriple(a=self.A, b=self.B, c=self.C)


class VwResidual(_ArrayModel):
    """Value of the two Vafa-Witten equations: r1 a 1-form, r2 self-dual."""

    r1: FloatArray
    r2: FloatArray

    def plus(self, other: "VwResidual") -> "VwResidual":
        return VwResidual(r1=self.r1 + other.r1, r2=self.r2 + other.r2)

    def minus(self, other: "VwResidual") -> "VwResidual":
        return VwResidual(r1=self.r1 - other.r1, r2=self.r2 - other.r2)

    def scaled(self, s: float) -> "VwResidual":
        return VwResidual(r1=s * self.r1, r2=s * self.r2)


class GaugeField(_ArrayModel):
    """Per-site unit quaternion (w, x, y, z) representing zeta(x) in SU(2)."""

    grid: Grid
    q: FloatArray

    @model_validator(mode="after")
    def _check_unit(self) -> "GaugeField":
        if self.q.shape != (*self.grid.shape, 4):
            raise ValueError(f"gauge field must have shape {(*self.grid.shape, 4)}, got {self.q.shape}")
        if np.max(np.abs(np.linalg.norm(self.q, axis=-1) - 1.0)) > 1e-12:
            raise ValueError("gauge field quaternions must have unit norm")
        return self

    @classmethod
    def identity(cls, grid: Grid) -> "GaugeField":
        q = np.zeros((*grid.shape, 4))
        q[..., 0] = 1.0
        return cls(grid=grid, q=q)


class PerturbationPack(_ArrayModel):
    """Perturbation parameters (tau1, tau2, tau3, theta, gamma) as lattice fields.

    tau1 acts on the 1-form index, tau2 and tau3 on the omega index of
    self-dual forms; theta is a real 1-form and gamma a real self-dual
    2-form in omega coordinates.
    """

    grid: Grid
    tau1: FloatArray
    tau2: FloatArray
    tau3: FloatArray
    theta: FloatArray
    gamma: FloatArray
    seed: int | None = None

    @model_validator(mode="after")
    def _check_shapes(self) -> "PerturbationPack":
        site = self.grid.shape
        expected = {
            "tau1": (*site, 4, 4),
            "tau2": (*site, 3, 3),
            "tau3": (*site, 3, 3),
            "theta": (*site, 4),
            "gamma": (*site, 3),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {getattr(self, name).shape}")
        return self

    @classmethod
    def trivial(cls, grid: Grid) -> "PerturbationPack":
        """tau1 = tau2 = id, tau3 = 0, theta = 0, gamma = 0: the unperturbed map."""
        site = grid.shape
        return cls(
            grid=grid,
            tau1=np.broadcast_to(np.eye(4), (*site, 4, 4)).copy(),
            tau2=np.broadcast_to(np.eye(3), (*site, 3, 3)).copy(),
            tau3=np.zeros((*site, 3, 3)),
            theta=np.zeros((*site, 4)),
            gamma=np.zeros((*site, 3)),
        )


class CheckResult(BaseModel):
    """One named numerical check against its threshold."""

    name: str
    value: float
    threshold: float
    passed: bool
    comparison: Literal["below", "within"] = "below"
    details: dict[str, Any] = PydanticField(default_factory=dict)


class LemmaReport(BaseModel):
    """Outcome of one randomized lemma oracle run."""

    lemma_id: LemmaId
    samples: int
    failures: int
    max_det_relative_error: float
    seed: int
    rejected: int = 0
    frame_change_failures: int = 0
    rank_deficient: int = 0
    counterexamples: list[dict[str, Any]] = PydanticField(default_factory=list)

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "lemma": self.lemma_id,
            "samples": self.samples,
            "failures": self.failures,
            "max_err": self.max_det_relative_error,
            "seed": self.seed,
            "rejected": self.rejected,
            "frame_change_failures": self.frame_change_failures,
            "rank_deficient": self.rank_deficient,
            "counterexamples": self.counterexamples,
        }


class SolveReport(_ArrayModel):
    """Result of a Newton-Krylov solve under Coulomb gauge."""

    converged: bool
    iterations: int
    final_residual: float
    gauge_residual: float
    config_out: Configuration
    pack_seed: int | None = None
    status: Literal["converged", "max_iterations", "diverged", "krylov_stagnation"] = "max_iterations"
    branch: Literal["general", "reduced-branch"] = "reduced-branch"
    max_abs_c: float = 0.0
    residual_history: list[float] = PydanticField(default_factory=list)
    linear_residuals: list[float] = PydanticField(default_factory=list)
    tol: float = PydanticField(default=1e-10, gt=0)

    @model_validator(mode="after")
    def _check_converged(self) -> "SolveReport":
        if not self.converged:
            return self
        if self.status != "converged":
            raise ValueError("converged report must have status 'converged'")
        if not (self.final_residual < self.tol and self.gauge_residual < self.tol):
            raise ValueError(
                f"converged report needs residuals below tol {self.tol:g}, "
                f"got {self.final_residual:.3e} and gauge {self.gauge_residual:.3e}"
            )
        return self

    def to_json_dict(self) -> dict[str, Any]:
        return self.model_dump(exclude={"config_out"})


class SpectrumReport(_ArrayModel):
    """Singular-value bookkeeping of the assembled combined operator."""

    singular_values: list[float]
    dim_kernel: int
    dim_cokernel: int
    index_discrete: int
    sigma_min: float
    rank_eps: float
    zero_symbol_modes: int = 1
    harmonic_count: float = 0.0
    cokernel_vectors: np.ndarray | None = None

    def to_json_dict(self) -> dict[str, Any]:
        return self.model_dump(exclude={"cokernel_vectors"})


class TransversalityRecord(BaseModel):
    """Per-seed outcome of the transversality sweep."""

    seed: int
    converged: bool
    status: str
    iterations: int
    final_residual: float
    gauge_residual: float
    branch: str
    max_abs_c: float
    sigma_min: float | None = None
    rank3_fraction: float | None = None
