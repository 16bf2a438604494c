"""su(2)-valued forms on the flat 4-torus.

Derivatives are periodic centered differences; every adjoint is the exact
transpose of its forward operator under the discrete L^2 product, so the
adjointness identities hold to rounding. Field arrays use the layout
``(*batch, N, N, N, N, 3, n)`` with full form coefficients unless a
function says it takes omega coordinates.
"""

import itertools
import logging

import numpy as np

from vwlab.core import fiber_algebra as fa
from vwlab.core.domain.errors import PreconditionError, ShapeError
from vwlab.core.domain.models import (
    FIBER_SIZE,
    Configuration,
    Field,
    GaugeField,
    Grid,
    PerturbationPack,
    TangentTriple,
    VwResidual,
)
from vwlab.core.rng import stream

logger = logging.getLogger(__name__)

MIN_PACK_SIGMA = 0.25
MAX_PACK_EPS = 1.0 - MIN_PACK_SIGMA
GAUGE_MAX_NORM = 0.1

_Modes = list[tuple[tuple[int, ...], np.ndarray]]


def _grid_axis(mu: int, trailing: int) -> int:
    return mu - 4 - trailing


def shift_derivative(values: np.ndarray, mu: int, grid: Grid, trailing: int = 2) -> np.ndarray:
    """Centered difference (f(x + h e_mu) - f(x - h e_mu)) / 2h along grid axis mu."""
    axis = _grid_axis(mu, trailing)
    return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2.0 * grid.h)


def d_plain(s: np.ndarray, grid: Grid, degree: int) -> np.ndarray:
    """Discrete d of an su(2)-valued form of the given degree."""
    out = 0.0
    for mu in range(4):
        out = out + np.einsum("...ai,ik->...ak", shift_derivative(s, mu, grid), fa.WEDGE[(1, degree)][mu])
    return out


def codifferential(t: np.ndarray, grid: Grid, degree: int) -> np.ndarray:
    """Transpose of d acting on (degree - 1)-forms; t has the given degree."""
    out = 0.0
    for mu in range(4):
        # the centered difference is antisymmetric
        out = out - np.einsum("...ak,ik->...ai", shift_derivative(t, mu, grid), fa.WEDGE[(1, degree - 1)][mu])
    return out


def divergence(a: np.ndarray, grid: Grid) -> np.ndarray:
    """sum_mu D_mu a_mu as a 0-form."""
    return sum(shift_derivative(a[..., mu : mu + 1], mu, grid) for mu in range(4))


def d_cov(A: np.ndarray, s: np.ndarray, grid: Grid, degree: int = 0) -> np.ndarray:
    """d_A s = ds + [A ^ s]."""
    if degree > 3:
        raise PreconditionError("d_A needs a form of degree <= 3")
    return d_plain(s, grid, degree) + fa.bracket_wedge_coeffs(A, s, 1, degree)


def d_cov_star(A: np.ndarray, t: np.ndarray, grid: Grid, degree: int = 1) -> np.ndarray:
    """Exact transpose of d_A from (degree - 1)-forms; t has the given degree."""
    if degree < 1:
        raise PreconditionError("d_A^* needs a form of degree >= 1")
    bracket_t = 2.0 * np.einsum(
        "abc,...am,mik,...ck->...bi", fa.EPS, A, fa.WEDGE[(1, degree - 1)], t, optimize=True
    )
    return codifferential(t, grid, degree) + bracket_t


def selfdual_field(values: np.ndarray) -> np.ndarray:
    """Omega coordinates of the self-dual part of a 2-form field."""
    if values.shape[-1] != FIBER_SIZE["2"]:
        raise ShapeError(f"expected full 2-form coefficients, got {values.shape[-1]} components")
    return fa.to_omega(values)


def d_cov_plus(A: np.ndarray, a: np.ndarray, grid: Grid) -> np.ndarray:
    """Self-dual part of d_A a, in omega coordinates."""
    return selfdual_field(d_cov(A, a, grid, 1))


def curvature(A: np.ndarray, grid: Grid) -> np.ndarray:
    """F_A = dA + 1/2 [A ^ A] as full 2-form coefficients."""
    return d_plain(A, grid, 1) + 0.5 * fa.bracket_wedge_coeffs(A, A, 1, 1)


def curvature_plus(A: np.ndarray, grid: Grid) -> np.ndarray:
    """F_A^+ in omega coordinates."""
    return selfdual_field(curvature(A, grid))


# ---------------------------------------------------------------------------
# L^2 structure
# ---------------------------------------------------------------------------


def l2_inner(u: np.ndarray, v: np.ndarray, grid: Grid, kind: str = "1") -> float:
    """h^4 sum over sites of the fiber product; omega coordinates carry weight 2."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ShapeError(f"cannot pair fields of shapes {u.shape} and {v.shape}")
    weight = 2.0 if kind == "2+" else 1.0
    return float(weight * grid.volume_element * np.vdot(u, v))


def field_norm(u: np.ndarray, grid: Grid, kind: str = "1") -> float:
    return float(np.sqrt(max(l2_inner(u, u, grid, kind), 0.0)))


def triple_inner(s: TangentTriple, t: TangentTriple, grid: Grid) -> float:
    return l2_inner(s.a, t.a, grid, "1") + l2_inner(s.b, t.b, grid, "2+") + l2_inner(s.c, t.c, grid, "0")


def triple_norm(t: TangentTriple, grid: Grid) -> float:
    return float(np.sqrt(max(triple_inner(t, t, grid), 0.0)))


def residual_inner(r: VwResidual, s: VwResidual, grid: Grid) -> float:
    return l2_inner(r.r1, s.r1, grid, "1") + l2_inner(r.r2, s.r2, grid, "2+")


def residual_norm(r: VwResidual, grid: Grid) -> float:
    return float(np.sqrt(max(residual_inner(r, r, grid), 0.0)))


def config_norm(cfg: Configuration) -> float:
    return triple_norm(cfg.as_tangent(), cfg.grid)


# ---------------------------------------------------------------------------
# Gauge action
# ---------------------------------------------------------------------------


def ad_field(zeta: GaugeField, values: np.ndarray) -> np.ndarray:
    """zeta^{-1} X zeta applied to the Lie index of any field."""
    rotation = fa.quat_rotation(zeta.q)
    return np.einsum("...ba,...bi->...ai", rotation, values)


def gauge_apply(zeta: GaugeField, cfg: Configuration) -> Configuration:
    """(A, B, C) -> (zeta^{-1} A zeta + zeta^{-1} d zeta, zeta^{-1} B zeta, zeta^{-1} C zeta)."""
    grid = cfg.grid
    q_inv = fa.quat_conj(zeta.q)
    maurer_cartan = np.stack(
        [fa.quat_mul(q_inv, shift_derivative(zeta.q, mu, grid, trailing=1))[..., 1:] for mu in range(4)],
        axis=-1,
    )
    return Configuration(
        grid=grid,
        A=ad_field(zeta, cfg.A) + maurer_cartan,
        B=ad_field(zeta, cfg.B),
        C=ad_field(zeta, cfg.C),
    )


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def max_band(N: int) -> int:
    """Highest frequency a grid of side N resolves without aliasing: 2 (band + 1) <= N."""
    return N // 2 - 1


def default_band(N: int) -> int:
    return min(1, max_band(N))


def _check_band(grid: Grid, band: int) -> None:
    if band < 0 or band > max_band(grid.N):
        raise PreconditionError(f"band {band} exceeds N/2 - 1 for N = {grid.N}")


def _trig_coefficients(rng: np.random.Generator, band: int, count: int) -> _Modes:
    modes = []
    for k in itertools.product(range(-band, band + 1), repeat=4):
        coeff = rng.uniform(-1.0, 1.0, count) + 1j * rng.uniform(-1.0, 1.0, count)
        modes.append((k, coeff))
    return modes


def _evaluate_modes(grid: Grid, modes: _Modes, count: int) -> np.ndarray:
    n = grid.N
    spectrum = np.zeros((count, n, n, n, n), dtype=complex)
    for k, coeff in modes:
        spectrum[(slice(None), *(ki % n for ki in k))] += coeff
    values = np.fft.ifftn(spectrum, axes=(1, 2, 3, 4)).real * n**4
    return np.moveaxis(values, 0, -1)


def trig_polynomial(rng: np.random.Generator, grid: Grid, band: int, count: int) -> np.ndarray:
    """``count`` real trigonometric polynomials of max frequency ``band``.

    Each mode k with |k_mu| <= band gets an independent coefficient a + ib
    with a, b ~ Uniform[-1, 1]; returns shape ``(N, N, N, N, count)``.
    """
    _check_band(grid, band)
    return _evaluate_modes(grid, _trig_coefficients(rng, band, count), count)


def sample_config(grid: Grid, seed: int, band: int, amplitude: float = 1.0) -> Configuration:
    """Band-limited random configuration, deterministic in seed."""
    site = grid.shape
    return Configuration(
        grid=grid,
        A=amplitude * trig_polynomial(stream(seed, "config", "A"), grid, band, 12).reshape(*site, 3, 4),
        B=amplitude * trig_polynomial(stream(seed, "config", "B"), grid, band, 9).reshape(*site, 3, 3),
        C=amplitude * trig_polynomial(stream(seed, "config", "C"), grid, band, 3).reshape(*site, 3, 1),
    )


def sample_tangent(grid: Grid, seed: int, band: int, amplitude: float = 1.0, tag: int | str = 0) -> TangentTriple:
    site = grid.shape
    return TangentTriple(
        a=amplitude * trig_polynomial(stream(seed, "tangent", tag, "a"), grid, band, 12).reshape(*site, 3, 4),
        b=amplitude * trig_polynomial(stream(seed, "tangent", tag, "b"), grid, band, 9).reshape(*site, 3, 3),
        c=amplitude * trig_polynomial(stream(seed, "tangent", tag, "c"), grid, band, 3).reshape(*site, 3, 1),
    )


def sample_xi(grid: Grid, seed: int, band: int, amplitude: float = 1.0, tag: int | str = 0) -> np.ndarray:
    """Band-limited su(2)-valued 0-form."""
    return amplitude * trig_polynomial(stream(seed, "xi", tag), grid, band, 3).reshape(*grid.shape, 3, 1)


def gauge_generator(grid: Grid, seed: int, band: int, max_norm: float = GAUGE_MAX_NORM) -> np.ndarray:
    """Band-limited su(2) 0-form with pointwise norm at most ``max_norm``.

    The scale divides by the sum of the coefficient moduli, a bound on the
    continuum polynomial that does not depend on N, so refined grids sample
    one and the same smooth field.
    """
    _check_band(grid, band)
    modes = _trig_coefficients(stream(seed, "gauge"), band, 3)
    bound = float(np.linalg.norm(sum(np.abs(coeff) for _, coeff in modes)))
    return max_norm / bound * _evaluate_modes(grid, modes, 3)


def sample_gauge(grid: Grid, seed: int, band: int, max_norm: float = GAUGE_MAX_NORM) -> GaugeField:
    """exp of a band-limited su(2) field of pointwise norm at most ``max_norm``."""
    return GaugeField(grid=grid, q=fa.quat_exp(gauge_generator(grid, seed, band, max_norm)))


def constant_gauge(grid: Grid, seed: int) -> GaugeField:
    rng = stream(seed, "gauge", "constant")
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    return GaugeField(grid=grid, q=np.broadcast_to(q, (*grid.shape, 4)).copy())


def _unit_spectral(rng: np.random.Generator, grid: Grid, band: int, dim: int) -> np.ndarray:
    field = trig_polynomial(rng, grid, band, dim * dim).reshape(*grid.shape, dim, dim)
    largest = float(np.max(np.linalg.norm(field, ord=2, axis=(-2, -1))))
    return field / largest if largest > 0 else field


def sample_pack(grid: Grid, seed: int, band: int, eps: float) -> PerturbationPack:
    """Perturbation pack with tau_i = I + eps * P_i, |P_i| <= 1 pointwise.

    The spectral normalization of P_i keeps sigma_min(tau_i) >= 1 - eps,
    so eps <= 0.75 guarantees the 0.25 invertibility margin.
    """
    if not 0.0 <= eps <= MAX_PACK_EPS:
        raise PreconditionError(f"pack eps must lie in [0, {MAX_PACK_EPS}], got {eps}")
    site = grid.shape
    pack = PerturbationPack(
        grid=grid,
        tau1=np.eye(4) + eps * _unit_spectral(stream(seed, "pack", "tau1"), grid, band, 4),
        tau2=np.eye(3) + eps * _unit_spectral(stream(seed, "pack", "tau2"), grid, band, 3),
        tau3=np.eye(3) + eps * _unit_spectral(stream(seed, "pack", "tau3"), grid, band, 3),
        theta=trig_polynomial(stream(seed, "pack", "theta"), grid, band, 4).reshape(*site, 4),
        gamma=trig_polynomial(stream(seed, "pack", "gamma"), grid, band, 3).reshape(*site, 3),
        seed=seed,
    )
    check_pack(pack)
    logger.debug("Sampled pack seed=%s eps=%s", seed, eps)
    return pack


def pack_min_singular_value(pack: PerturbationPack) -> float:
    """Smallest singular value of tau1, tau2, tau3 over all sites."""
    return float(
        min(np.min(np.linalg.svd(tau, compute_uv=False)) for tau in (pack.tau1, pack.tau2, pack.tau3))
    )


def check_pack(pack: PerturbationPack) -> None:
    sigma = pack_min_singular_value(pack)
    if sigma < MIN_PACK_SIGMA:
        raise PreconditionError(f"pack tau matrices have sigma_min {sigma:.3g} < {MIN_PACK_SIGMA}")


# ---------------------------------------------------------------------------
# Flattening in orthonormal fiber coordinates
# ---------------------------------------------------------------------------

_SQRT2 = np.sqrt(2.0)


def to_vector(t: TangentTriple, grid: Grid) -> np.ndarray:
    """Flatten so that the Euclidean product equals triple_inner."""
    scale = np.sqrt(grid.volume_element)
    lead = t.a.shape[:-6]
    return scale * np.concatenate(
        [
            t.a.reshape(*lead, -1),
            _SQRT2 * t.b.reshape(*lead, -1),
            t.c.reshape(*lead, -1),
        ],
        axis=-1,
    )


def from_vector(v: np.ndarray, grid: Grid) -> TangentTriple:
    scale = np.sqrt(grid.volume_element)
    site = grid.shape
    n = grid.N**4
    lead = v.shape[:-1]
    a, b, c = np.split(v / scale, [12 * n, 21 * n], axis=-1)
    return TangentTriple(
        a=a.reshape(*lead, *site, 3, 4),
        b=(b / _SQRT2).reshape(*lead, *site, 3, 3),
        c=c.reshape(*lead, *site, 3, 1),
    )


def residual_to_vector(r: VwResidual, gauge: np.ndarray, grid: Grid) -> np.ndarray:
    """Flatten (r1, r2, gauge) in the row order Lambda^1, Lambda^2+, Lambda^0."""
    return to_vector(TangentTriple(a=r.r1, b=r.r2, c=gauge), grid)


def vector_to_residual(v: np.ndarray, grid: Grid) -> tuple[VwResidual, np.ndarray]:
    t = from_vector(v, grid)
    return VwResidual(r1=t.a, r2=t.b), t.c


# ---------------------------------------------------------------------------
# VWF1 snapshots
# ---------------------------------------------------------------------------

SNAPSHOT_MAGIC = b"VWF1"
SNAPSHOT_HEADER = np.dtype(
    [("magic", "S4"), ("N", "<u4"), ("L", "<f8"), ("degree", "<i4"), ("components", "<u4")]
)


def encode_field(field: Field) -> bytes:
    """Header followed by little-endian float64 values, site-major, component-minor."""
    grid = field.grid
    degree = 2 if field.kind == "2+" else int(field.kind)
    components = 3 * FIBER_SIZE[field.kind]
    header = np.array([(SNAPSHOT_MAGIC, grid.N, grid.L, degree, components)], dtype=SNAPSHOT_HEADER)
    data = np.ascontiguousarray(field.values.reshape(grid.N**4, components), dtype="<f8")
    return header.tobytes() + data.tobytes()


def decode_field(payload: bytes) -> Field:
    if len(payload) < SNAPSHOT_HEADER.itemsize:
        raise ShapeError("snapshot shorter than its header")
    header = np.frombuffer(payload, dtype=SNAPSHOT_HEADER, count=1)[0]
    if bytes(header["magic"]) != SNAPSHOT_MAGIC:
        raise ShapeError(f"bad snapshot magic {bytes(header['magic'])!r}")
    grid = Grid(N=int(header["N"]), L=float(header["L"]))
    degree = int(header["degree"])
    components = int(header["components"])
    kind = "2+" if degree == 2 and components == 9 else str(degree)
    if kind not in FIBER_SIZE or 3 * FIBER_SIZE[kind] != components:
        raise ShapeError(f"snapshot degree {degree} does not match {components} components")
    data = np.frombuffer(payload, dtype="<f8", offset=SNAPSHOT_HEADER.itemsize)
    if data.size != grid.N**4 * components:
        raise ShapeError(f"snapshot holds {data.size} values, expected {grid.N**4 * components}")
    values = data.astype(float).reshape(*grid.shape, 3, FIBER_SIZE[kind])
    return Field(kind=kind, grid=grid, values=values)
