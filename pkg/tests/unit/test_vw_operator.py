"""Unit tests for the Vafa-Witten map and its deformation complex."""

import numpy as np
import pytest

from vwlab.core import fiber_algebra as fa
from vwlab.core import lattice as lat
from vwlab.core import vw_operator as vwo
from vwlab.core.domain.errors import PreconditionError
from vwlab.core.domain.models import (
    Configuration,
    Grid,
    PerturbationPack,
    TangentTriple,
    VwResidual,
)


def _constant_config(grid: Grid, *, B: tuple[int, int] | None = None, C: int | None = None) -> Configuration:
    cfg = Configuration.zeros(grid)
    b = cfg.B.copy()
    c = cfg.C.copy()
    if B is not None:
        b[..., B[0], B[1]] = 1.0
    if C is not None:
        c[..., C, 0] = 1.0
    return Configuration(grid=grid, A=cfg.A, B=b, C=c)


def _residual_gap(x: VwResidual, y: VwResidual, grid: Grid) -> float:
    return lat.residual_norm(x.minus(y), grid) / max(1.0, lat.residual_norm(y, grid))


def _shifted_pack(pack: PerturbationPack, delta: PerturbationPack, s: float) -> PerturbationPack:
    return PerturbationPack(
        grid=pack.grid,
        tau1=pack.tau1 + s * delta.tau1,
        tau2=pack.tau2 + s * delta.tau2,
        tau3=pack.tau3 + s * delta.tau3,
        theta=pack.theta + s * delta.theta,
        gamma=pack.gamma + s * delta.gamma,
    )


class TestVwMap:
    """The unperturbed and perturbed equations."""

    def test_zero_configuration_solves(self, grid4: Grid) -> None:
        value = vwo.vw(Configuration.zeros(grid4))
        assert not np.any(value.r1)
        assert not np.any(value.r2)

    def test_constant_rank_one_b_solves(self, grid4: Grid) -> None:
        value = vwo.vw(_constant_config(grid4, B=(0, 0)))
        assert np.allclose(value.r1, 0.0)
        assert np.allclose(value.r2, 0.0)

    def test_reduced_map_matches_full_map_at_c_zero(self, grid4: Grid, config4: Configuration) -> None:
        reduced = vwo.vw_reduced(config4.A, config4.B, grid4)
        full = vwo.vw(Configuration(grid=grid4, A=config4.A, B=config4.B, C=np.zeros_like(config4.C)))
        assert np.array_equal(reduced.r1, full.r1)
        assert np.array_equal(reduced.r2, full.r2)

    def test_trivial_pack_reproduces_vw(self, grid4: Grid, config4: Configuration) -> None:
        perturbed = vwo.vw_perturbed(PerturbationPack.trivial(grid4), config4)
        assert _residual_gap(perturbed, vwo.vw(config4), grid4) < 1e-14

    def test_gamma_term_for_constant_c(self, grid4: Grid) -> None:
        pack = PerturbationPack.trivial(grid4)
        gamma = pack.gamma.copy()
        gamma[..., 1] = 1.0
        pack = pack.model_copy(update={"gamma": gamma})
        value = vwo.vw_perturbed(pack, _constant_config(grid4, C=0))
        expected = np.zeros((*grid4.shape, 3, 3))
        expected[..., 0, 1] = 1.0
        assert np.allclose(value.r2, expected)
        assert np.allclose(value.r1, 0.0)

    def test_grid_mismatch_raises(self, config4: Configuration) -> None:
        with pytest.raises(PreconditionError):
            vwo.vw_perturbed(PerturbationPack.trivial(Grid(N=3)), config4)
        with pytest.raises(PreconditionError):
            vwo.d1(PerturbationPack.trivial(Grid(N=3)), config4, TangentTriple.zeros(config4.grid))


class TestClassification:
    """Moduli decomposition of solutions."""

    def test_classify(self, grid4: Grid, config4: Configuration) -> None:
        assert vwo.classify(Configuration.zeros(grid4)) == "asd"
        assert vwo.classify(_constant_config(grid4, B=(1, 2))) == "reduced"
        assert vwo.classify(config4) == "general"

    def test_closed_split_of_zero_configuration(self, grid4: Grid) -> None:
        split = vwo.closed_split(Configuration.zeros(grid4))
        assert set(split) == {"d_cov_c", "d_cov_star_b", "curvature_term", "bracket_bc"}
        assert all(value == 0.0 for value in split.values())

    def test_closed_split_detects_bracket(self, grid4: Grid) -> None:
        cfg = _constant_config(grid4, B=(1, 0), C=0)
        assert vwo.closed_split(cfg)["bracket_bc"] > 0


class TestDeformationComplex:
    """Linearization, quadratic remainder and adjoints."""

    def test_expansion_is_exact(self, pack4: PerturbationPack, config4: Configuration, tangent4: TangentTriple) -> None:
        assert vwo.expansion_check(pack4, config4, tangent4) < 1e-12

    def test_coulomb_gauge_equation(
        self, pack4: PerturbationPack, config4: Configuration, tangent4: TangentTriple
    ) -> None:
        lhs, gauge = vwo.coulomb_gauge_equation(pack4, config4, tangent4)
        rhs = vwo.vw_perturbed(pack4, config4.shifted(tangent4)).minus(vwo.vw_perturbed(pack4, config4))
        assert _residual_gap(lhs, rhs, config4.grid) < 1e-12
        assert np.array_equal(gauge, vwo.d0_star(config4, tangent4))

    def test_tabulated_linearization_matches_d1(
        self, pack4: PerturbationPack, config4: Configuration, tangent4: TangentTriple
    ) -> None:
        linearized = vwo.LinearizedVw(pack4, config4)
        direct = vwo.d1(pack4, config4, tangent4)
        assert _residual_gap(linearized.apply(tangent4), direct, config4.grid) < 1e-12

    def test_linearized_adjoint(
        self, pack4: PerturbationPack, config4: Configuration, tangent4: TangentTriple
    ) -> None:
        grid = config4.grid
        linearized = vwo.LinearizedVw(pack4, config4)
        r = vwo.vw_perturbed(pack4, config4.shifted(tangent4))
        left = lat.residual_inner(linearized.apply(tangent4), r, grid)
        right = lat.triple_inner(tangent4, linearized.adjoint(r), grid)
        assert left == pytest.approx(right, rel=1e-11)

    def test_combined_adjoint(
        self, pack4: PerturbationPack, config4: Configuration, tangent4: TangentTriple
    ) -> None:
        grid = config4.grid
        operator = vwo.CombinedOperator(pack4, config4)
        r = vwo.vw_perturbed(pack4, config4)
        g = lat.sample_xi(grid, 4, 1)
        forward_r, forward_g = operator.apply(tangent4)
        left = lat.residual_inner(forward_r, r, grid) + lat.l2_inner(forward_g, g, grid, "0")
        right = lat.triple_inner(tangent4, operator.adjoint(r, g), grid)
        assert left == pytest.approx(right, rel=1e-11)

    def test_d1_at_trivial_point_is_the_flat_complex(self, grid4: Grid, tangent4: TangentTriple) -> None:
        """At cfg = 0 with the trivial pack, d1 t = (d^* b + d c, d^+ a)."""
        zero = np.zeros_like(tangent4.a)
        result = vwo.d1(PerturbationPack.trivial(grid4), Configuration.zeros(grid4), tangent4)
        r1 = lat.d_cov_star(zero, fa.from_omega(tangent4.b), grid4, 2) + lat.d_cov(zero, tangent4.c, grid4, 0)
        r2 = lat.d_cov_plus(zero, tangent4.a, grid4)
        assert np.allclose(result.r1, r1, atol=1e-12)
        assert np.allclose(result.r2, r2, atol=1e-12)
        plain = lat.codifferential(fa.from_omega(tangent4.b), grid4, 2) + lat.d_plain(tangent4.c, grid4, 0)
        assert np.allclose(r1, plain)

    def test_d0_adjoint_and_formula(self, config4: Configuration, tangent4: TangentTriple) -> None:
        grid = config4.grid
        xi = lat.sample_xi(grid, 7, 1)
        left = lat.triple_inner(vwo.d0(config4, xi), tangent4, grid)
        right = lat.l2_inner(xi, vwo.d0_star(config4, tangent4), grid, "0")
        assert left == pytest.approx(right, rel=1e-11)
        assert np.allclose(vwo.d0_star_formula(config4, tangent4), vwo.d0_star(config4, tangent4), atol=1e-10)

    def test_pack_derivative_matches_central_difference(
        self, pack4: PerturbationPack, config4: Configuration
    ) -> None:
        grid = config4.grid
        delta = lat.sample_pack(grid, 5, 1, 0.2)
        s = 1e-3
        plus = vwo.vw_perturbed(_shifted_pack(pack4, delta, s), config4)
        minus = vwo.vw_perturbed(_shifted_pack(pack4, delta, -s), config4)
        difference = plus.minus(minus).scaled(1.0 / (2.0 * s))
        assert _residual_gap(difference, vwo.d_vw_pack(pack4, config4, delta), grid) < 1e-8

    def test_linearized_full_combines_both_directions(
        self, pack4: PerturbationPack, config4: Configuration, tangent4: TangentTriple
    ) -> None:
        delta = lat.sample_pack(config4.grid, 5, 1, 0.2)
        combined = vwo.linearized_full(pack4, config4, delta, tangent4)
        expected = vwo.d1(pack4, config4, tangent4).plus(vwo.d_vw_pack(pack4, config4, delta))
        assert np.array_equal(combined.r1, expected.r1)


class TestGaugeStructure:
    """Exact identities in the constant-gauge sector."""

    def test_complex_closes_for_constant_fields(self, grid4: Grid) -> None:
        pack = lat.sample_pack(grid4, 3, 0, 0.2)
        cfg = lat.sample_config(grid4, 3, 0)
        xi = lat.sample_xi(grid4, 3, 0)
        assert vwo.complex_check(pack, cfg, xi, relative=True) < 1e-12

    @pytest.mark.parametrize("perturbed", [False, True])
    def test_constant_gauge_equivariance(
        self, pack4: PerturbationPack, config4: Configuration, perturbed: bool
    ) -> None:
        zeta = lat.constant_gauge(config4.grid, 9)
        defect = vwo.gauge_equivariance_check(pack4, config4, zeta, perturbed=perturbed, relative=True)
        assert defect < 1e-12
