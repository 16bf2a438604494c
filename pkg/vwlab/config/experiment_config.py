"""Experiment configuration: validated run parameters and the key = value file loader."""

import math
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, Field, field_validator, model_validator

from vwlab.core.domain.errors import PreconditionError
from vwlab.core.lattice import MAX_PACK_EPS, default_band, max_band

Command = Literal["verify-lemmas", "check-identities", "solve", "spectrum", "convergence", "transversality"]

DENSE_COMMANDS = frozenset({"spectrum", "transversality"})
MAX_DENSE_GRID = 4
DEFAULT_GRID = 8
DEFAULT_DENSE_GRID = 3
DEFAULT_GRIDS = (8, 16, 32)


class ExperimentConfig(BaseModel):
    """Every parameter of one run, echoed verbatim into its report.

    ``grid`` and ``band`` default per command: dense commands run on N = 3,
    the others on N = 8, and the band is 1 or the largest the grid
    supports, whichever is smaller.
    """

    command: Command
    grid: int | None = Field(default=None, ge=3, description="Sites per axis N")
    length: float = Field(default=2 * math.pi, gt=0, description="Torus period L")
    seed: int = Field(default=1, ge=0)
    band: int | None = Field(default=None, ge=0, description="Max Fourier frequency of sampled fields")
    eps: float = Field(default=0.2, ge=0.0, le=MAX_PACK_EPS, description="Pack perturbation size")
    tol: float = Field(default=1e-10, gt=0, description="Newton residual tolerance")
    samples: int = Field(default=10_000, ge=1, description="Samples per lemma oracle")
    trials: int = Field(default=20, ge=1, description="Random instances per identity")
    out: Path | None = None
    trivial: bool = False
    dump_matrix: bool = False
    max_newton: int = Field(default=30, ge=1)
    max_krylov: int = Field(default=400, ge=1)
    krylov_rtol: float = Field(default=1e-3, gt=0)
    tikhonov_shift: float = Field(default=1e-10, gt=0)
    reanchor: bool = False
    seeds: int = Field(default=20, ge=1, description="Packs in the transversality sweep")
    grids: tuple[int, ...] = DEFAULT_GRIDS
    solution_study: bool = Field(default=True, description="Measure the complex defect at Newton solutions")

    expansion_tol: float = Field(default=1e-12, gt=0)
    jacobian_tol: float = Field(default=1e-10, gt=0)
    adjoint_tol: float = Field(default=1e-12, gt=0)
    det_tol_a1: float = Field(default=1e-12, gt=0)
    det_tol: float = Field(default=1e-10, gt=0)
    ratio_low: float = Field(default=3.4, gt=0)
    ratio_high: float = Field(default=4.6, gt=0)
    rank_eps: float = Field(default=1e-10, gt=0)
    spectrum_eps: float = Field(default=1e-8, gt=0)
    certify_c: float = Field(default=1e-6, gt=0)
    gauge_exact_tol: float = Field(default=1e-12, gt=0)

    @field_validator("grids", mode="before")
    @classmethod
    def _parse_grids(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(int(part) for part in value.replace(",", " ").split())
        return value

    @field_validator("grids")
    @classmethod
    def _check_grids(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if len(value) < 2:
            raise ValueError("a refinement study needs at least two grids")
        if any(n < 4 for n in value):
            raise ValueError("refinement grids must have N >= 4")
        if list(value) != sorted(set(value)):
            raise ValueError("refinement grids must be strictly increasing")
        return value

    @model_validator(mode="after")
    def _resolve_defaults(self) -> "ExperimentConfig":
        dense = self.command in DENSE_COMMANDS
        if self.grid is None:
            self.grid = DEFAULT_DENSE_GRID if dense else DEFAULT_GRID
        if dense and self.grid > MAX_DENSE_GRID:
            raise ValueError(f"{self.command} assembles a dense matrix; grid must be <= {MAX_DENSE_GRID}")
        if self.band is None:
            self.band = default_band(self.grid)
        smallest = min(self.grids) if self.command == "convergence" else self.grid
        if self.band > max_band(smallest):
            raise ValueError(f"band {self.band} exceeds N/2 - 1 = {max_band(smallest)} for N = {smallest}")
        if self.ratio_low >= self.ratio_high:
            raise ValueError("ratio_low must be below ratio_high")
        return self

    def thresholds(self) -> dict[str, float]:
        """The acceptance thresholds, for echoing into reports."""
        names = (
            "expansion_tol",
            "jacobian_tol",
            "adjoint_tol",
            "det_tol_a1",
            "det_tol",
            "ratio_low",
            "ratio_high",
            "rank_eps",
            "spectrum_eps",
            "certify_c",
            "gauge_exact_tol",
        )
        return {name: getattr(self, name) for name in names}


_TRUE = frozenset({"1", "true", "yes", "on"})
_FALSE = frozenset({"0", "false", "no", "off"})


def _coerce(raw: str) -> Any:
    lowered = raw.lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    return raw


def parse_experiment_text(text: str) -> dict[str, Any]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment.

    Dashes in keys are normalized to underscores so ``max-newton`` and
    ``max_newton`` name the same field. Values stay strings (booleans
    excepted) and are coerced by ExperimentConfig.
    """
    values: dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise PreconditionError(f"line {number}: expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in content.split("=", 1))
        if not key:
            raise PreconditionError(f"line {number}: empty key")
        values[key.replace("-", "_")] = _coerce(raw)
    return values


def load_experiment_file(path: Path | str) -> dict[str, Any]:
    """Read a key = value experiment file into raw field values."""
    return parse_experiment_text(Path(path).read_text(encoding="utf-8"))


def build_config(file_values: dict[str, Any], overrides: dict[str, Any]) -> ExperimentConfig:
    """Merge file values with flag overrides (flags win; None means unset) and validate."""
    merged = {**file_values, **{key: value for key, value in overrides.items() if value is not None}}
    return ExperimentConfig.model_validate(merged)
