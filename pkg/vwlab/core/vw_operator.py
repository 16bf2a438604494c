"""The Vafa-Witten map, its perturbation and its deformation complex.

All maps act on lattice configurations from ``vwlab.core.lattice``. Self-dual
slots (B, b, r2) are in omega coordinates; ``fa.from_omega`` embeds them in
Lambda^2 wherever a full 2-form is needed.
"""

import logging
from typing import Literal

import numpy as np

from vwlab.core import fiber_algebra as fa
from vwlab.core import lattice as lat
from vwlab.core.domain.errors import PreconditionError
from vwlab.core.domain.models import (
    Configuration,
    GaugeField,
    Grid,
    PerturbationPack,
    TangentTriple,
    VwResidual,
)

logger = logging.getLogger(__name__)

TANGENT_SITE_SIZE = 24
RESIDUAL_SITE_SIZE = 21
_TANGENT_WEIGHTS = np.array([1.0] * 12 + [2.0] * 9 + [1.0] * 3)
_RESIDUAL_WEIGHTS = np.array([1.0] * 12 + [2.0] * 9)


# ---------------------------------------------------------------------------
# pointwise actions of the perturbation pack
# ---------------------------------------------------------------------------


def _tau_forms(tau1: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("...mn,...an->...am", tau1, x)


def _tau_omega(tau: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("...jk,...ak->...aj", tau, x)


def _outer_theta(c: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """c (x) theta for an su(2) 0-form c and a real 1-form theta."""
    return c * theta[..., None, :]


def _selfdual_dot_theta(x: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """X . theta for X in omega coordinates, a Lie-valued 1-form."""
    return fa.form_dot_coeffs(fa.from_omega(x), theta, 2, 1)


def _ad_transpose(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Transpose of xi -> [X, xi] under the Euclidean fiber product."""
    return 2.0 * np.einsum("abc,...aj,...cj->...b", fa.EPS, x, y, optimize=True)[..., None]


def _check_grid(*grids: Grid) -> None:
    if any(g != grids[0] for g in grids[1:]):
        raise PreconditionError("fields live on different grids")


# ---------------------------------------------------------------------------
# the map
# ---------------------------------------------------------------------------


def _first_equation(cfg: Configuration) -> np.ndarray:
    grid = cfg.grid
    return lat.d_cov_star(cfg.A, fa.from_omega(cfg.B), grid, 2) + lat.d_cov(cfg.A, cfg.C, grid, 0)


def _curvature_term(cfg: Configuration) -> np.ndarray:
    return lat.curvature_plus(cfg.A, cfg.grid) + 0.125 * fa.omega_bracket_dot(cfg.B, cfg.B)


def vw(cfg: Configuration) -> VwResidual:
    """(d_A^* B + d_A C, F_A^+ + 1/8 [B . B] + 1/2 [B, C])."""
    return VwResidual(
        r1=_first_equation(cfg),
        r2=_curvature_term(cfg) + 0.5 * fa.bracket_zero_coeffs(cfg.B, cfg.C),
    )


def vw_reduced(A: np.ndarray, B: np.ndarray, grid: Grid) -> VwResidual:
    """The map with C = 0: (d_A^* B, F_A^+ + 1/8 [B . B])."""
    C = np.zeros((*grid.shape, 3, 1))
    return vw(Configuration(grid=grid, A=A, B=B, C=C))


def vw_perturbed(pack: PerturbationPack, cfg: Configuration) -> VwResidual:
    """The perturbed map.

    r1 = d_A^* B + d_A C + tau1((B + [B, C]) . theta + C (x) theta)
    r2 = F_A^+ + 1/8 [B . B] + 1/2 tau2 [B, C] + tau3 B + C (x) gamma
    """
    _check_grid(pack.grid, cfg.grid)
    bc = fa.bracket_zero_coeffs(cfg.B, cfg.C)
    theta_term = _selfdual_dot_theta(cfg.B + bc, pack.theta) + _outer_theta(cfg.C, pack.theta)
    return VwResidual(
        r1=_first_equation(cfg) + _tau_forms(pack.tau1, theta_term),
        r2=(
            _curvature_term(cfg)
            + 0.5 * _tau_omega(pack.tau2, bc)
            + _tau_omega(pack.tau3, cfg.B)
            + _outer_theta(cfg.C, pack.gamma)
        ),
    )


def classify(cfg: Configuration, tol: float = 1e-12) -> Literal["asd", "reduced", "general"]:
    """Which part of the moduli decomposition a configuration belongs to."""
    if np.max(np.abs(cfg.C)) > tol:
        return "general"
    if np.max(np.abs(cfg.B)) > tol:
        return "reduced"
    return "asd"


def closed_split(cfg: Configuration) -> dict[str, float]:
    """Norms of the four equations a solution satisfies on a closed manifold."""
    grid = cfg.grid
    return {
        "d_cov_c": lat.field_norm(lat.d_cov(cfg.A, cfg.C, grid, 0), grid, "1"),
        "d_cov_star_b": lat.field_norm(lat.d_cov_star(cfg.A, fa.from_omega(cfg.B), grid, 2), grid, "0"),
        "curvature_term": lat.field_norm(_curvature_term(cfg), grid, "2+"),
        "bracket_bc": lat.field_norm(fa.bracket_zero_coeffs(cfg.B, cfg.C), grid, "2+"),
    }


# ---------------------------------------------------------------------------
# deformation complex
# ---------------------------------------------------------------------------


def d0(cfg: Configuration, xi: np.ndarray) -> TangentTriple:
    """Infinitesimal gauge action (d_A xi, [B, xi], [C, xi])."""
    return TangentTriple(
        a=lat.d_cov(cfg.A, xi, cfg.grid, 0),
        b=fa.bracket_zero_coeffs(cfg.B, xi),
        c=fa.bracket_zero_coeffs(cfg.C, xi),
    )


def d0_star(cfg: Configuration, t: TangentTriple) -> np.ndarray:
    """Exact L^2 transpose of d0; the omega slot carries its Gram weight 2."""
    return (
        lat.d_cov_star(cfg.A, t.a, cfg.grid, 1)
        + 2.0 * _ad_transpose(cfg.B, t.b)
        + _ad_transpose(cfg.C, t.c)
    )


def d0_star_formula(cfg: Configuration, t: TangentTriple) -> np.ndarray:
    """d_A^* a + [b . B] + [c, C] written out term by term."""
    grid = cfg.grid
    return (
        -lat.divergence(t.a, grid)
        - fa.bracket_dot_coeffs(cfg.A, t.a, 1, 1)
        + fa.bracket_inner_coeffs(fa.from_omega(t.b), fa.from_omega(cfg.B))
        + fa.bracket_inner_coeffs(t.c, cfg.C)
    )


def _d1_differential(cfg: Configuration, t: TangentTriple) -> VwResidual:
    grid = cfg.grid
    return VwResidual(
        r1=lat.d_cov_star(cfg.A, fa.from_omega(t.b), grid, 2) + lat.d_cov(cfg.A, t.c, grid, 0),
        r2=lat.d_cov_plus(cfg.A, t.a, grid),
    )


def _d1_pointwise(pack: PerturbationPack, cfg: Configuration, t: TangentTriple) -> VwResidual:
    b_c = fa.bracket_zero_coeffs(t.b, cfg.C)
    big_b_c = fa.bracket_zero_coeffs(cfg.B, t.c)
    theta_term = _selfdual_dot_theta(t.b + b_c + big_b_c, pack.theta) + _outer_theta(t.c, pack.theta)
    r1 = (
        -fa.bracket_dot_coeffs(fa.from_omega(cfg.B), t.a, 2, 1)
        + fa.bracket_zero_coeffs(t.a, cfg.C)
        + _tau_forms(pack.tau1, theta_term)
    )
    r2 = (
        0.25 * fa.omega_bracket_dot(t.b, cfg.B)
        + 0.5 * _tau_omega(pack.tau2, b_c + big_b_c)
        + _tau_omega(pack.tau3, t.b)
        + _outer_theta(t.c, pack.gamma)
    )
    return VwResidual(r1=r1, r2=r2)


def d1(pack: PerturbationPack, cfg: Configuration, t: TangentTriple) -> VwResidual:
    """Linearization of vw_perturbed at cfg.

    r1 = d_A^* b + d_A c - [B . a] - [C, a] + tau1((b + [b, C] + [B, c]) . theta + c (x) theta)
    r2 = d_A^+ a + 1/4 [b . B] + 1/2 tau2([b, C] + [B, c]) + tau3 b + c (x) gamma
    """
    _check_grid(pack.grid, cfg.grid)
    return _d1_differential(cfg, t).plus(_d1_pointwise(pack, cfg, t))


def quadratic_term(pack: PerturbationPack, t: TangentTriple) -> VwResidual:
    """{t, t}: the part of vw_perturbed(cfg + t) quadratic in t."""
    b_c = fa.bracket_zero_coeffs(t.b, t.c)
    r1 = (
        -fa.bracket_dot_coeffs(t.a, fa.from_omega(t.b), 1, 2)
        + fa.bracket_zero_coeffs(t.a, t.c)
        + _tau_forms(pack.tau1, _selfdual_dot_theta(b_c, pack.theta))
    )
    r2 = (
        0.5 * fa.to_omega(fa.bracket_wedge_coeffs(t.a, t.a, 1, 1))
        + 0.125 * fa.omega_bracket_dot(t.b, t.b)
        + 0.5 * _tau_omega(pack.tau2, b_c)
    )
    return VwResidual(r1=r1, r2=r2)


def d_vw_pack(pack: PerturbationPack, cfg: Configuration, delta: PerturbationPack) -> VwResidual:
    """Derivative of vw_perturbed in the perturbation directions ``delta``."""
    _check_grid(pack.grid, cfg.grid, delta.grid)
    bc = fa.bracket_zero_coeffs(cfg.B, cfg.C)
    selfdual = cfg.B + bc
    r1 = _tau_forms(
        delta.tau1, _selfdual_dot_theta(selfdual, pack.theta) + _outer_theta(cfg.C, pack.theta)
    ) + _tau_forms(pack.tau1, _selfdual_dot_theta(selfdual, delta.theta) + _outer_theta(cfg.C, delta.theta))
    r2 = 0.5 * _tau_omega(delta.tau2, bc) + _tau_omega(delta.tau3, cfg.B) + _outer_theta(cfg.C, delta.gamma)
    return VwResidual(r1=r1, r2=r2)


def linearized_full(
    pack: PerturbationPack, cfg: Configuration, delta: PerturbationPack, t: TangentTriple
) -> VwResidual:
    """Derivative in configuration and perturbation together: d1 t + d_vw_pack delta."""
    return d1(pack, cfg, t).plus(d_vw_pack(pack, cfg, delta))


# ---------------------------------------------------------------------------
# matrix-free linear operators
# ---------------------------------------------------------------------------


def tangent_site_vector(t: TangentTriple) -> np.ndarray:
    lead = t.a.shape[:-2]
    return np.concatenate([t.a.reshape(*lead, 12), t.b.reshape(*lead, 9), t.c.reshape(*lead, 3)], axis=-1)


def tangent_from_site_vector(v: np.ndarray) -> TangentTriple:
    lead = v.shape[:-1]
    return TangentTriple(
        a=v[..., :12].reshape(*lead, 3, 4),
        b=v[..., 12:21].reshape(*lead, 3, 3),
        c=v[..., 21:].reshape(*lead, 3, 1),
    )


def residual_site_vector(r: VwResidual) -> np.ndarray:
    lead = r.r1.shape[:-2]
    return np.concatenate([r.r1.reshape(*lead, 12), r.r2.reshape(*lead, 9)], axis=-1)


class LinearizedVw:
    """d1 at a fixed (pack, cfg) with its exact L^2 adjoint.

    The zeroth-order part of d1 is tabulated once as a 21 x 24 matrix per
    site; the differential part is applied matrix-free.
    """

    def __init__(self, pack: PerturbationPack, cfg: Configuration) -> None:
        _check_grid(pack.grid, cfg.grid)
        self.pack = pack
        self.cfg = cfg
        self.grid = cfg.grid
        site = self.grid.shape
        columns = []
        for k in range(TANGENT_SITE_SIZE):
            basis = np.zeros((*site, TANGENT_SITE_SIZE))
            basis[..., k] = 1.0
            columns.append(residual_site_vector(_d1_pointwise(pack, cfg, tangent_from_site_vector(basis))))
        self.site_matrix = np.stack(columns, axis=-1)
        self._site_adjoint = np.swapaxes(
            self.site_matrix * _RESIDUAL_WEIGHTS[:, None], -1, -2
        ) / _TANGENT_WEIGHTS[:, None]

    def apply(self, t: TangentTriple) -> VwResidual:
        pointwise = np.einsum("...oi,...i->...o", self.site_matrix, tangent_site_vector(t))
        return _d1_differential(self.cfg, t).plus(
            VwResidual(r1=pointwise[..., :12].reshape(*pointwise.shape[:-1], 3, 4),
                       r2=pointwise[..., 12:].reshape(*pointwise.shape[:-1], 3, 3))
        )

    def adjoint(self, r: VwResidual) -> TangentTriple:
        A, grid = self.cfg.A, self.grid
        differential = TangentTriple(
            a=lat.d_cov_star(A, fa.from_omega(r.r2), grid, 2),
            b=lat.d_cov_plus(A, r.r1, grid),
            c=lat.d_cov_star(A, r.r1, grid, 1),
        )
        pointwise = np.einsum("...io,...o->...i", self._site_adjoint, residual_site_vector(r))
        return differential.plus(tangent_from_site_vector(pointwise))


def d1_adjoint(pack: PerturbationPack, cfg: Configuration, r: VwResidual) -> TangentTriple:
    return LinearizedVw(pack, cfg).adjoint(r)


class CombinedOperator:
    """The square operator t -> (d1 t, d0^* t) with the Coulomb slice anchored at ``anchor``."""

    def __init__(self, pack: PerturbationPack, cfg: Configuration, anchor: Configuration | None = None) -> None:
        self.linearized = LinearizedVw(pack, cfg)
        self.anchor = anchor if anchor is not None else cfg
        _check_grid(cfg.grid, self.anchor.grid)

    def apply(self, t: TangentTriple) -> tuple[VwResidual, np.ndarray]:
        return self.linearized.apply(t), d0_star(self.anchor, t)

    def adjoint(self, r: VwResidual, gauge: np.ndarray) -> TangentTriple:
        return self.linearized.adjoint(r).plus(d0(self.anchor, gauge))


def coulomb_gauge_equation(
    pack: PerturbationPack, cfg0: Configuration, t: TangentTriple
) -> tuple[VwResidual, np.ndarray]:
    """Left side of the gauge-fixed equation: (d1 t + {t, t}, d0^* t) at cfg0."""
    return d1(pack, cfg0, t).plus(quadratic_term(pack, t)), d0_star(cfg0, t)


# ---------------------------------------------------------------------------
# identity checks
# ---------------------------------------------------------------------------


def expansion_check(pack: PerturbationPack, cfg: Configuration, t: TangentTriple) -> float:
    """Relative defect of vw(x + t) = vw(x) + d1 t + {t, t}."""
    grid = cfg.grid
    shifted = vw_perturbed(pack, cfg.shifted(t))
    base = vw_perturbed(pack, cfg)
    linear = d1(pack, cfg, t)
    quadratic = quadratic_term(pack, t)
    defect = shifted.minus(base).minus(linear).minus(quadratic)
    scale = max(
        1.0,
        *(lat.residual_norm(r, grid) for r in (shifted, base, linear, quadratic)),
    )
    return lat.residual_norm(defect, grid) / scale


def complex_check(pack: PerturbationPack, cfg: Configuration, xi: np.ndarray, relative: bool = False) -> float:
    """|| d1(d0 xi) - ([r1, xi], [r2, xi]) || with (r1, r2) = vw_perturbed(cfg)."""
    grid = cfg.grid
    lhs = d1(pack, cfg, d0(cfg, xi))
    value = vw_perturbed(pack, cfg)
    rhs = VwResidual(r1=fa.bracket_zero_coeffs(value.r1, xi), r2=fa.bracket_zero_coeffs(value.r2, xi))
    defect = lat.residual_norm(lhs.minus(rhs), grid)
    if relative:
        return defect / max(1.0, lat.residual_norm(lhs, grid), lat.residual_norm(rhs, grid))
    return defect


def gauge_equivariance_check(
    pack: PerturbationPack,
    cfg: Configuration,
    zeta: GaugeField,
    perturbed: bool = False,
    relative: bool = False,
) -> float:
    """|| vw(zeta . cfg) - zeta^{-1} vw(cfg) zeta ||, unperturbed unless asked."""
    grid = cfg.grid

    def evaluate(x: Configuration) -> VwResidual:
        return vw_perturbed(pack, x) if perturbed else vw(x)

    moved = evaluate(lat.gauge_apply(zeta, cfg))
    value = evaluate(cfg)
    rotated = VwResidual(r1=lat.ad_field(zeta, value.r1), r2=lat.ad_field(zeta, value.r2))
    defect = lat.residual_norm(moved.minus(rotated), grid)
    if relative:
        return defect / max(1.0, lat.residual_norm(value, grid))
    return defect
