"""Dense assembly and singular values of the combined operator on small grids."""

import logging

import numpy as np
import scipy.linalg

from vwlab.core import lattice as lat
from vwlab.core import vw_operator as vwo
from vwlab.core.domain.errors import PreconditionError
from vwlab.core.domain.models import (
    Configuration,
    Grid,
    PerturbationPack,
    SpectrumReport,
    TangentTriple,
    TransversalityRecord,
)
from vwlab.use_cases.lemma_oracles import rank3_fraction
from vwlab.use_cases.solver_service import SolverService

logger = logging.getLogger(__name__)

MAX_DENSE_N = 4
SPECTRUM_EPS = 1e-8
HARMONIC_BLOCK = 24
_COLUMN_BATCH = 256


def _check_dense(grid: Grid) -> None:
    if grid.N > MAX_DENSE_N:
        raise PreconditionError(f"dense assembly is limited to N <= {MAX_DENSE_N}, got N = {grid.N}")


def operator_size(grid: Grid) -> int:
    return vwo.TANGENT_SITE_SIZE * grid.N**4


def zero_symbol_modes(N: int) -> int:
    """Fourier modes killed by every centered difference: frequencies in {0, N/2}."""
    return 1 if N % 2 else 16


def assemble_dense(pack: PerturbationPack, cfg: Configuration, anchor: Configuration | None = None) -> np.ndarray:
    """Matrix of t -> (d1 t, d0^* t) in orthonormal coordinates.

    Rows are ordered Lambda^1, Lambda^2+, Lambda^0 blocks, each site-major.
    """
    grid = cfg.grid
    _check_dense(grid)
    operator = vwo.CombinedOperator(pack, cfg, anchor)
    size = operator_size(grid)
    matrix = np.empty((size, size))
    for start in range(0, size, _COLUMN_BATCH):
        stop = min(start + _COLUMN_BATCH, size)
        basis = np.zeros((stop - start, size))
        basis[np.arange(stop - start), np.arange(start, stop)] = 1.0
        value, gauge = operator.apply(lat.from_vector(basis, grid))
        matrix[:, start:stop] = lat.residual_to_vector(value, gauge, grid).T
    return matrix


def assemble_d0_dense(cfg: Configuration) -> np.ndarray:
    """Matrix of xi -> d0 xi from orthonormal 0-form coordinates to tangent coordinates."""
    grid = cfg.grid
    _check_dense(grid)
    count = 3 * grid.N**4
    columns = np.eye(count).reshape(count, *grid.shape, 3, 1) / np.sqrt(grid.volume_element)
    return lat.to_vector(vwo.d0(cfg, columns), grid).T


def irreducibility_sigma(cfg: Configuration) -> float:
    """Smallest singular value of d0; zero signals a reducible configuration."""
    return float(np.min(scipy.linalg.svdvals(assemble_d0_dense(cfg))))


def svd_spectrum(matrix: np.ndarray, eps: float = SPECTRUM_EPS, modes: int = 1) -> SpectrumReport:
    """Kernel and cokernel counts with threshold eps * sigma_max.

    Args:
        matrix: Square operator matrix.
        eps: Relative rank threshold.
        modes: Zero-symbol modes of the grid; the harmonic count is the
            kernel dimension per mode.

    Returns:
        SpectrumReport with the left singular vectors of the cokernel.
    """
    rows, cols = matrix.shape
    if rows != cols:
        raise PreconditionError(f"spectrum needs a square matrix, got {matrix.shape}")
    u, sigma, vt = scipy.linalg.svd(matrix)
    threshold = eps * sigma[0] if sigma.size else 0.0
    small = sigma < threshold if sigma[0] > 0 else np.ones_like(sigma, dtype=bool)
    dim_kernel = int(np.sum(small))
    dim_cokernel = rows - (cols - dim_kernel)
    return SpectrumReport(
        singular_values=sorted(float(s) for s in sigma),
        dim_kernel=dim_kernel,
        dim_cokernel=dim_cokernel,
        index_discrete=dim_kernel - dim_cokernel,
        sigma_min=float(sigma[-1]),
        rank_eps=eps,
        zero_symbol_modes=modes,
        harmonic_count=dim_kernel / modes,
        cokernel_vectors=u[:, small],
    )


def cokernel_fields(report: SpectrumReport, grid: Grid) -> list[TangentTriple]:
    """Cokernel vectors as (phi, psi, gauge) fields packed in tangent triples."""
    if report.cokernel_vectors is None:
        return []
    return [lat.from_vector(column, grid) for column in report.cokernel_vectors.T]


class SpectrumService:
    """Spectrum of the combined operator and the transversality sweep."""

    def __init__(self, solver: SolverService, eps: float = SPECTRUM_EPS) -> None:
        self.solver = solver
        self.eps = eps

    def spectrum(self, pack: PerturbationPack, cfg: Configuration) -> SpectrumReport:
        matrix = assemble_dense(pack, cfg)
        report = svd_spectrum(matrix, self.eps, zero_symbol_modes(cfg.grid.N))
        logger.info(
            "Spectrum at N=%d: kernel %d, cokernel %d, sigma_min %.3e",
            cfg.grid.N,
            report.dim_kernel,
            report.dim_cokernel,
            report.sigma_min,
        )
        return report

    def transversality_sweep(
        self, grid: Grid, seeds: int, seed: int, band: int, eps: float, amplitude: float = 0.5
    ) -> list[TransversalityRecord]:
        """Solve from random starts for ``seeds`` random packs and record sigma_min at each solution.

        Args:
            grid: Lattice, N <= 4.
            seeds: Number of packs.
            seed: Base seed; pack k uses seed + k.
            band: Frequency band of packs and starts.
            eps: Pack perturbation size.
            amplitude: Amplitude of the starting configuration.

        Returns:
            One record per pack, converged or not.
        """
        _check_dense(grid)
        records = []
        for k in range(seeds):
            run_seed = seed + k
            pack = lat.sample_pack(grid, run_seed, band, eps)
            start = lat.sample_config(grid, run_seed, band, amplitude)
            solve = self.solver.newton_solve(pack, start)
            sigma_min = None
            if solve.converged:
                sigma_min = float(np.min(scipy.linalg.svdvals(assemble_dense(pack, solve.config_out))))
            records.append(
                TransversalityRecord(
                    seed=run_seed,
                    converged=solve.converged,
                    status=solve.status,
                    iterations=solve.iterations,
                    final_residual=solve.final_residual,
                    gauge_residual=solve.gauge_residual,
                    branch=solve.branch,
                    max_abs_c=solve.max_abs_c,
                    sigma_min=sigma_min,
                    rank3_fraction=rank3_fraction(solve.config_out, pack),
                )
            )
            logger.info("Sweep seed %d: %s, sigma_min %s", run_seed, solve.status, sigma_min)
        return records
