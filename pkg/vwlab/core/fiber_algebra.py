"""Pointwise algebra of Lambda^* R^4 and su(2).

Forms are coefficient vectors in the lexicographic basis e^I (I increasing
multi-indices over 0..3, so Lambda^2 is ordered e12, e13, e14, e23, e24, e34
in 1-based labels). su(2)-valued forms are ``(..., 3, C(4, p))`` arrays with
the Lie index first. Every product is a contraction against a structure
tensor built once at import; the array kernels (``*_coeffs``) broadcast over
leading axes so the lattice layer can reuse them site-wise.

su(2) uses the basis eta_k = -i sigma_k, so [eta_1, eta_2] = 2 eta_3 cyclically
and <xi, eta> = -1/2 tr(xi eta) is the Euclidean product of coordinates.
Unit quaternions represent SU(2) with eta_1, eta_2, eta_3 <-> i, j, k.
"""

import itertools
import math

import numpy as np
from scipy.spatial.transform import Rotation
from scipy.stats import special_ortho_group

from vwlab.core.domain.errors import DegreeError, PreconditionError, RankError
from vwlab.core.domain.models import FiberForm, Su2Element, Su2Form

RANK_EPS = 1e-10

BASIS: tuple[tuple[tuple[int, ...], ...], ...] = tuple(
    tuple(itertools.combinations(range(4), p)) for p in range(5)
)
_POSITION = [{multi: k for k, multi in enumerate(BASIS[p])} for p in range(5)]


def _permutation_sign(seq: tuple[int, ...]) -> int:
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inversions % 2 else 1


def _build_wedge(p: int, q: int) -> np.ndarray:
    table = np.zeros((len(BASIS[p]), len(BASIS[q]), len(BASIS[p + q])))
    for i, left in enumerate(BASIS[p]):
        for j, right in enumerate(BASIS[q]):
            if set(left) & set(right):
                continue
            merged = left + right
            table[i, j, _POSITION[p + q][tuple(sorted(merged))]] = _permutation_sign(merged)
    return table


def _build_interior(p: int) -> np.ndarray:
    table = np.zeros((4, len(BASIS[p]), len(BASIS[p - 1])))
    for k, multi in enumerate(BASIS[p]):
        for slot, i in enumerate(multi):
            rest = multi[:slot] + multi[slot + 1 :]
            table[i, k, _POSITION[p - 1][rest]] = (-1) ** slot
    return table


def _build_star(p: int) -> np.ndarray:
    table = np.zeros((len(BASIS[4 - p]), len(BASIS[p])))
    for k, multi in enumerate(BASIS[p]):
        complement = tuple(i for i in range(4) if i not in multi)
        table[_POSITION[4 - p][complement], k] = _permutation_sign(multi + complement)
    return table


WEDGE: dict[tuple[int, int], np.ndarray] = {
    (p, q): _build_wedge(p, q) for p in range(5) for q in range(5) if p + q <= 4
}
INTERIOR: dict[int, np.ndarray] = {p: _build_interior(p) for p in range(1, 5)}
STAR: dict[int, np.ndarray] = {p: _build_star(p) for p in range(5)}


def _build_contraction(p: int, q: int) -> np.ndarray:
    # alpha . beta = (-1)^(p-1) sum_i (i_{e_i} alpha) ^ (i_{e_i} beta)
    return (-1) ** (p - 1) * np.einsum(
        "iab,icd,bde->ace", INTERIOR[p], INTERIOR[q], WEDGE[(p - 1, q - 1)]
    )


DOT: dict[tuple[int, int], np.ndarray] = {
    (p, q): _build_contraction(p, q) for p in range(1, 5) for q in range(1, 5) if p + q - 2 <= 4
}

# Rows are omega_1 = e12 + e34, omega_2 = e13 + e42, omega_3 = e14 + e23.
OMEGA = np.array(
    [
        [1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
    ]
)

EPS = np.zeros((3, 3, 3))
for _a, _b, _c in itertools.permutations(range(3)):
    EPS[_a, _b, _c] = _permutation_sign((_a, _b, _c))

# omega_j . omega_k in omega coordinates; equals -2 eps_jkl.
OMEGA_DOT = 0.5 * np.einsum("ji,kl,ilm,nm->jkn", OMEGA, OMEGA, DOT[(2, 2)], OMEGA)

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


# ---------------------------------------------------------------------------
# Array kernels
# ---------------------------------------------------------------------------


def _require_sum(p: int, q: int, offset: int = 0) -> None:
    if p + q - offset > 4:
        raise DegreeError(f"degree {p} and {q} forms give degree {p + q - offset} > 4")


def wedge_coeffs(alpha: np.ndarray, beta: np.ndarray, p: int, q: int) -> np.ndarray:
    _require_sum(p, q)
    return np.einsum("...i,...j,ijk->...k", alpha, beta, WEDGE[(p, q)], optimize=True)


def contract_coeffs(alpha: np.ndarray, beta: np.ndarray, p: int, q: int) -> np.ndarray:
    if p < 1 or q < 1:
        raise DegreeError("contraction product needs degrees >= 1")
    _require_sum(p, q, offset=2)
    return np.einsum("...i,...j,ijk->...k", alpha, beta, DOT[(p, q)], optimize=True)


def star_coeffs(alpha: np.ndarray, p: int) -> np.ndarray:
    return np.einsum("...i,ji->...j", alpha, STAR[p])


def to_omega(two_form: np.ndarray) -> np.ndarray:
    """Omega coordinates of the self-dual part of full Lambda^2 coefficients."""
    return 0.5 * two_form @ OMEGA.T


def from_omega(coords: np.ndarray) -> np.ndarray:
    """Full Lambda^2 coefficients of sum_j coords_j omega_j."""
    return coords @ OMEGA


def lie_bracket_coeffs(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return 2.0 * np.cross(x, y)


def bracket_zero_coeffs(x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """[X, xi] for X of shape (..., 3, n) and a 0-form xi of shape (..., 3, 1)."""
    return 2.0 * np.einsum("abc,...ai,...b->...ci", EPS, x, xi[..., 0], optimize=True)


def bracket_wedge_coeffs(x: np.ndarray, y: np.ndarray, p: int, q: int) -> np.ndarray:
    """[X ^ Y] = sum [xi_a, xi_b] (x) alpha ^ beta for Lie-valued forms."""
    _require_sum(p, q)
    return 2.0 * np.einsum("abc,...ai,...bj,ijk->...ck", EPS, x, y, WEDGE[(p, q)], optimize=True)


def bracket_dot_coeffs(x: np.ndarray, y: np.ndarray, p: int, q: int) -> np.ndarray:
    """[X . Y] with the contraction product on the form factor."""
    if p < 1 or q < 1:
        raise DegreeError("contraction product needs degrees >= 1")
    _require_sum(p, q, offset=2)
    return 2.0 * np.einsum("abc,...ai,...bj,ijk->...ck", EPS, x, y, DOT[(p, q)], optimize=True)


def bracket_inner_coeffs(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """[X . Y] with the orthonormal inner product of forms; returns a 0-form."""
    return 2.0 * np.einsum("abc,...ai,...bi->...c", EPS, x, y)[..., None]


def omega_bracket_dot(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """[X . Y] for two self-dual forms given and returned in omega coordinates."""
    return 2.0 * np.einsum("abc,...aj,...bk,jkl->...cl", EPS, x, y, OMEGA_DOT, optimize=True)


def form_dot_coeffs(x: np.ndarray, alpha: np.ndarray, p: int, q: int) -> np.ndarray:
    """X . alpha for a Lie-valued p-form X and a real q-form alpha."""
    if p < 1 or q < 1:
        raise DegreeError("contraction product needs degrees >= 1")
    _require_sum(p, q, offset=2)
    return np.einsum("...ai,...j,ijk->...ak", x, alpha, DOT[(p, q)], optimize=True)


def numerical_rank(matrix: np.ndarray, eps: float = RANK_EPS) -> np.ndarray:
    """Rank of the trailing two axes with threshold eps * sigma_max."""
    sigma = np.linalg.svd(matrix, compute_uv=False)
    top = sigma[..., :1]
    return np.sum((sigma > eps * top) & (top > 0), axis=-1)


# ---------------------------------------------------------------------------
# Quaternions
# ---------------------------------------------------------------------------


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product of quaternions (w, x, y, z) along the last axis."""
    a0, a1, a2, a3 = np.moveaxis(a, -1, 0)
    b0, b1, b2, b3 = np.moveaxis(b, -1, 0)
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def quat_exp(v: np.ndarray) -> np.ndarray:
    """exp of the pure quaternion with vector part v (an su(2) element)."""
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(norm > 1e-300, norm, 1.0)
    return np.concatenate([np.cos(norm), np.sin(norm) * v / safe], axis=-1)


def quat_rotation(q: np.ndarray) -> np.ndarray:
    """Matrix R(q) of v -> q v q^{-1} acting on su(2) coordinates."""
    w, x, y, z = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], axis=-1),
            np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], axis=-1),
            np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], axis=-1),
        ],
        axis=-2,
    )


def compound_matrix(q: np.ndarray, p: int) -> np.ndarray:
    """Matrix of Lambda^p Q on coefficient vectors, entries are p x p minors.

    Broadcasts over leading axes of q.
    """
    q = np.asarray(q)
    lead = q.shape[:-2]
    size = len(BASIS[p])
    if p == 0:
        return np.ones((*lead, 1, 1))
    out = np.zeros((*lead, size, size))
    for i, rows in enumerate(BASIS[p]):
        for j, cols in enumerate(BASIS[p]):
            out[..., i, j] = np.linalg.det(q[..., list(rows), :][..., list(cols)])
    return out


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random element of SO(3)."""
    return Rotation.random(None, rng).as_matrix()


def random_frame(rng: np.random.Generator) -> np.ndarray:
    """Uniform random element of SO(4)."""
    return special_ortho_group.rvs(4, 1, rng).reshape(4, 4)


# ---------------------------------------------------------------------------
# Operations on domain values
# ---------------------------------------------------------------------------


def basis_form(degree: int, *indices: int) -> FiberForm:
    """e^{i1} ^ ... ^ e^{ip} for 1-based increasing indices."""
    coeffs = np.zeros(math.comb(4, degree))
    coeffs[_POSITION[degree][tuple(i - 1 for i in indices)]] = 1.0
    return FiberForm(degree=degree, coeffs=coeffs)


def omega(j: int) -> FiberForm:
    """omega_j for j = 1, 2, 3."""
    return FiberForm(degree=2, coeffs=OMEGA[j - 1])


def eta(k: int) -> Su2Element:
    """eta_k for k = 1, 2, 3."""
    return Su2Element(coords=np.eye(3)[k - 1])


def tensor(xi: Su2Element, alpha: FiberForm) -> Su2Form:
    """xi (x) alpha."""
    return Su2Form(degree=alpha.degree, coords=np.outer(xi.coords, alpha.coeffs))


def selfdual_su2(coords: np.ndarray) -> Su2Form:
    """Su2Form sum_{a,j} coords[a, j] eta_a (x) omega_j."""
    return Su2Form(degree=2, coords=from_omega(np.asarray(coords, dtype=float)))


def omega_coords(form: Su2Form | FiberForm) -> np.ndarray:
    """Omega coordinates of the self-dual part of a degree 2 value."""
    if form.degree != 2:
        raise DegreeError(f"omega coordinates need a 2-form, got degree {form.degree}")
    values = form.coords if isinstance(form, Su2Form) else form.coeffs
    return to_omega(values)


def wedge(alpha: FiberForm, beta: FiberForm) -> FiberForm:
    _require_sum(alpha.degree, beta.degree)
    return FiberForm(
        degree=alpha.degree + beta.degree,
        coeffs=wedge_coeffs(alpha.coeffs, beta.coeffs, alpha.degree, beta.degree),
    )


def interior(i: int, alpha: FiberForm) -> FiberForm:
    """Contraction with the 1-based frame vector e_i."""
    if alpha.degree == 0:
        raise DegreeError("cannot contract a 0-form")
    return FiberForm(degree=alpha.degree - 1, coeffs=alpha.coeffs @ INTERIOR[alpha.degree][i - 1])


def contract_dot(alpha: FiberForm, beta: FiberForm) -> FiberForm:
    """alpha . beta = (-1)^(p-1) sum_i (i_{e_i} alpha) ^ (i_{e_i} beta)."""
    coeffs = contract_coeffs(alpha.coeffs, beta.coeffs, alpha.degree, beta.degree)
    return FiberForm(degree=alpha.degree + beta.degree - 2, coeffs=coeffs)


def inner_dot(alpha: FiberForm, beta: FiberForm) -> float:
    """Induced inner product of forms; the basis e^I is orthonormal."""
    if alpha.degree != beta.degree:
        raise DegreeError("inner product needs forms of equal degree")
    return float(alpha.coeffs @ beta.coeffs)


def hodge_star(alpha: FiberForm) -> FiberForm:
    return FiberForm(degree=4 - alpha.degree, coeffs=star_coeffs(alpha.coeffs, alpha.degree))


def selfdual_project(form: FiberForm) -> FiberForm:
    """(1 + *) / 2 on 2-forms."""
    if form.degree != 2:
        raise DegreeError(f"self-dual projection needs a 2-form, got degree {form.degree}")
    return FiberForm(degree=2, coeffs=from_omega(to_omega(form.coeffs)))


def is_selfdual(form: FiberForm, tol: float = 1e-12) -> bool:
    if form.degree != 2:
        return False
    star = star_coeffs(form.coeffs, 2)
    return bool(np.max(np.abs(star - form.coeffs), initial=0.0) <= tol * max(1.0, np.max(np.abs(form.coeffs))))


def lie_bracket(xi: Su2Element, eta_: Su2Element) -> Su2Element:
    return Su2Element(coords=lie_bracket_coeffs(xi.coords, eta_.coords))


def lie_inner(xi: Su2Element, eta_: Su2Element) -> float:
    return float(xi.coords @ eta_.coords)


def su2_matrix(xi: Su2Element) -> np.ndarray:
    """2x2 anti-hermitian matrix sum_k xi_k (-i sigma_k)."""
    return np.einsum("k,kij->ij", xi.coords, -1j * PAULI)


def bracket_dot(x: Su2Form, y: Su2Form) -> Su2Form:
    """[X . Y] = [xi_1, xi_2] (x) alpha_1 . alpha_2, extended bilinearly."""
    coords = bracket_dot_coeffs(x.coords, y.coords, x.degree, y.degree)
    return Su2Form(degree=x.degree + y.degree - 2, coords=coords)


def bracket_wedge(x: Su2Form, y: Su2Form) -> Su2Form:
    """[X ^ Y] = sum_{mu, nu} [x_mu, y_nu] e^mu ^ e^nu for 1-forms, and its general analogue."""
    coords = bracket_wedge_coeffs(x.coords, y.coords, x.degree, y.degree)
    return Su2Form(degree=x.degree + y.degree, coords=coords)


def bracket_wedge_plus(a: Su2Form, b: Su2Form) -> Su2Form:
    """Self-dual part of [a ^ b] for su(2)-valued 1-forms."""
    if a.degree != 1 or b.degree != 1:
        raise DegreeError("bracket_wedge_plus needs two 1-forms")
    full = bracket_wedge_coeffs(a.coords, b.coords, 1, 1)
    return Su2Form(degree=2, coords=from_omega(to_omega(full)))


def bracket(x: Su2Form, xi: Su2Element) -> Su2Form:
    """[X, xi] of a Lie-valued form with a Lie algebra element."""
    return Su2Form(degree=x.degree, coords=bracket_zero_coeffs(x.coords, xi.coords[:, None]))


def bracket_inner(x: Su2Form, y: Su2Form) -> Su2Element:
    """[X . Y] with the inner product of forms, e.g. [b . B] for self-dual b, B."""
    if x.degree != y.degree:
        raise DegreeError("inner bracket needs forms of equal degree")
    return Su2Element(coords=bracket_inner_coeffs(x.coords, y.coords)[..., 0])


def rank(b: Su2Form, eps: float = RANK_EPS) -> int:
    """Rank of the 3x3 matrix of B in the frames eta and omega."""
    return int(numerical_rank(omega_coords(b), eps))


def normal_form(b: Su2Form) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factor the omega matrix of B as R^T diag S with R, S in SO(3).

    Diagonal entries are sorted by decreasing magnitude and carry the signs
    needed to keep both rotations orientation preserving. A matrix that is
    already diagonal and sorted is returned with identity rotations.
    """
    matrix = omega_coords(b)
    diagonal = np.diag(matrix)
    off_diagonal = matrix - np.diag(diagonal)
    magnitude = np.abs(diagonal)
    if not np.any(off_diagonal) and np.all(magnitude[:-1] >= magnitude[1:]):
        return np.eye(3), np.eye(3), diagonal.copy()

    u, sigma, vt = np.linalg.svd(matrix)
    diag = sigma.copy()
    if np.linalg.det(u) < 0:
        u[:, -1] *= -1
        diag[-1] *= -1
    if np.linalg.det(vt) < 0:
        vt[-1, :] *= -1
        diag[-1] *= -1
    return u.T, vt, diag


def rank1_factor(b: Su2Form, eps: float = RANK_EPS) -> tuple[Su2Element, FiberForm]:
    """Write a rank <= 1 section as B = xi (x) omega with |xi| = 1.

    The sign ambiguity is fixed by making the first nonzero coordinate of xi
    positive. B = 0 factors as (eta_1, 0).
    """
    matrix = omega_coords(b)
    r = int(numerical_rank(matrix, eps))
    if r >= 2:
        raise RankError(f"rank1_factor needs rank <= 1, got rank {r}")
    if r == 0:
        return eta(1), FiberForm(degree=2, coeffs=np.zeros(6))

    u, sigma, vt = np.linalg.svd(matrix)
    xi = u[:, 0]
    lead = xi[np.flatnonzero(np.abs(xi) > eps)[0]]
    if lead < 0:
        xi = -xi
    # omega coordinates of the form factor
    form_coords = xi @ matrix
    return Su2Element(coords=xi), FiberForm(degree=2, coeffs=from_omega(form_coords))


def radial_decompose(form: FiberForm) -> tuple[np.ndarray, np.ndarray]:
    """Split a self-dual 2-form along the radial frame e0 = dr, e1, e2, e3.

    With F = 1/2 e0 ^ (sum_j r_j e^j) + 1/2 (t_1 e23 + t_2 e31 + t_3 e12),
    returns (r, t); for self-dual F they agree componentwise.
    """
    if form.degree != 2:
        raise DegreeError(f"radial decomposition needs a 2-form, got degree {form.degree}")
    if not is_selfdual(form):
        raise PreconditionError("radial decomposition needs a self-dual 2-form")
    radial, tangential = radial_parts(form.coeffs)
    return 2.0 * radial, 2.0 * tangential


def radial_parts(coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Raw split F = e0 ^ a + (f_1 e23 + f_2 e31 + f_3 e12) of any 2-form."""
    f01, f02, f03, f12, f13, f23 = np.moveaxis(np.asarray(coeffs), -1, 0)
    return np.stack([f01, f02, f03], axis=-1), np.stack([f23, -f13, f12], axis=-1)


def radial_assemble(radial: np.ndarray, tangential: np.ndarray) -> np.ndarray:
    """Inverse of radial_parts: e0 ^ radial + tangential as Lambda^2 coefficients."""
    r1, r2, r3 = np.moveaxis(np.asarray(radial), -1, 0)
    t1, t2, t3 = np.moveaxis(np.asarray(tangential), -1, 0)
    return np.stack([r1, r2, r3, t3, -t2, t1], axis=-1)
