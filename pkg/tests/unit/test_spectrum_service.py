"""Unit tests for dense assembly, singular values and the transversality sweep."""

from unittest.mock import MagicMock

import numpy as np
import pytest

from vwlab.core import lattice as lat
from vwlab.core import vw_operator as vwo
from vwlab.core.domain.errors import PreconditionError
from vwlab.core.domain.models import Configuration, Grid, PerturbationPack, SolveReport, SpectrumReport
from vwlab.use_cases import spectrum_service as ss
from vwlab.use_cases.solver_service import SolverService


class TestSvdSpectrum:
    """Kernel and cokernel bookkeeping."""

    def test_zero_symbol_modes(self) -> None:
        assert ss.zero_symbol_modes(3) == 1
        assert ss.zero_symbol_modes(4) == 16

    def test_diagonal_matrix(self) -> None:
        report = ss.svd_spectrum(np.diag([3.0, 2.0, 0.0]))
        assert report.dim_kernel == 1
        assert report.dim_cokernel == 1
        assert report.index_discrete == 0
        assert report.singular_values == pytest.approx([0.0, 2.0, 3.0])
        assert report.sigma_min == 0.0
        assert np.allclose(np.abs(report.cokernel_vectors[:, 0]), [0.0, 0.0, 1.0])

    def test_harmonic_count_divides_by_modes(self) -> None:
        report = ss.svd_spectrum(np.diag([1.0, 0.0, 0.0, 0.0]), modes=3)
        assert report.dim_kernel == 3
        assert report.harmonic_count == 1.0

    def test_non_square_matrix_raises(self) -> None:
        with pytest.raises(PreconditionError):
            ss.svd_spectrum(np.ones((2, 3)))

    def test_report_json_drops_vectors(self) -> None:
        payload = ss.svd_spectrum(np.eye(2)).to_json_dict()
        assert "cokernel_vectors" not in payload
        assert payload["dim_kernel"] == 0


class TestDenseAssembly:
    """Dense matrices agree with the matrix-free operators."""

    def test_large_grid_is_refused(self) -> None:
        grid = Grid(N=5)
        with pytest.raises(PreconditionError):
            ss.assemble_dense(PerturbationPack.trivial(grid), Configuration.zeros(grid))

    def test_dense_matrix_matches_operator_and_adjoint(self, grid3: Grid) -> None:
        pack = lat.sample_pack(grid3, 2, 0, 0.2)
        cfg = lat.sample_config(grid3, 2, 0)
        matrix = ss.assemble_dense(pack, cfg)
        assert matrix.shape == (ss.operator_size(grid3), ss.operator_size(grid3))

        operator = vwo.CombinedOperator(pack, cfg)
        rng = np.random.default_rng(0)
        v = rng.normal(size=matrix.shape[1])
        w = rng.normal(size=matrix.shape[0])
        value, gauge = operator.apply(lat.from_vector(v, grid3))
        assert np.allclose(matrix @ v, lat.residual_to_vector(value, gauge, grid3), atol=1e-10)
        r, g = lat.vector_to_residual(w, grid3)
        assert np.allclose(matrix.T @ w, lat.to_vector(operator.adjoint(r, g), grid3), atol=1e-10)

    def test_zero_configuration_is_reducible(self, grid3: Grid) -> None:
        assert ss.irreducibility_sigma(Configuration.zeros(grid3)) < 1e-8

    def test_cokernel_fields_unpack_vectors(self, grid3: Grid) -> None:
        size = ss.operator_size(grid3)
        column = np.zeros((size, 1))
        column[0, 0] = 1.0
        report = SpectrumReport(
            singular_values=[0.0],
            dim_kernel=1,
            dim_cokernel=1,
            index_discrete=0,
            sigma_min=0.0,
            rank_eps=1e-8,
            cokernel_vectors=column,
        )
        fields = ss.cokernel_fields(report, grid3)
        assert len(fields) == 1
        assert fields[0].a.shape == (*grid3.shape, 3, 4)

    @pytest.mark.slow
    def test_trivial_operator_at_zero_has_harmonic_kernel(self, grid3: Grid) -> None:
        service = ss.SpectrumService(SolverService())
        report = service.spectrum(PerturbationPack.trivial(grid3), Configuration.zeros(grid3))
        assert report.dim_kernel == ss.HARMONIC_BLOCK
        assert report.index_discrete == 0
        assert report.harmonic_count == ss.HARMONIC_BLOCK

    @pytest.mark.slow
    def test_trivial_operator_on_even_grid_counts_every_zero_symbol_mode(self, grid4: Grid) -> None:
        """On N = 4 the centered symbol vanishes at 16 modes, each carrying a full harmonic block."""
        service = ss.SpectrumService(SolverService())
        report = service.spectrum(PerturbationPack.trivial(grid4), Configuration.zeros(grid4))
        assert report.zero_symbol_modes == 16
        assert report.dim_kernel == 16 * ss.HARMONIC_BLOCK == 384
        assert report.dim_cokernel == 384
        assert report.index_discrete == 0
        assert report.harmonic_count == ss.HARMONIC_BLOCK


class TestTransversalitySweep:
    """Sweep records for converged and failed solves."""

    def test_unconverged_solves_have_no_sigma(self, grid3: Grid) -> None:
        solver = MagicMock(spec=SolverService)
        solver.newton_solve.return_value = SolveReport(
            converged=False,
            iterations=3,
            final_residual=0.5,
            gauge_residual=0.0,
            config_out=Configuration.zeros(grid3),
            status="diverged",
        )
        records = ss.SpectrumService(solver).transversality_sweep(grid3, seeds=2, seed=10, band=0, eps=0.2)
        assert [r.seed for r in records] == [10, 11]
        assert all(r.sigma_min is None for r in records)
        assert all(r.status == "diverged" for r in records)
        assert records[0].rank3_fraction == 0.0
        assert solver.newton_solve.call_count == 2

    def test_sweep_refuses_large_grid(self) -> None:
        with pytest.raises(PreconditionError):
            ss.SpectrumService(SolverService()).transversality_sweep(Grid(N=5), seeds=1, seed=0, band=1, eps=0.2)

    @pytest.mark.slow
    def test_converged_solve_gets_sigma(self, grid3: Grid) -> None:
        solver = MagicMock(spec=SolverService)
        solver.newton_solve.return_value = SolveReport(
            converged=True,
            iterations=0,
            final_residual=0.0,
            gauge_residual=0.0,
            config_out=Configuration.zeros(grid3),
            status="converged",
        )
        records = ss.SpectrumService(solver).transversality_sweep(grid3, seeds=1, seed=0, band=0, eps=0.2)
        assert records[0].converged
        assert records[0].sigma_min is not None
        assert records[0].sigma_min >= 0.0
