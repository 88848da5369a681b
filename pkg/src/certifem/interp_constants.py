"""Guaranteed per-element interpolation-constant bounds and mesh-wide strategies.

Two families of certified upper bounds for the H1 interpolation constant of
a P1 element are provided: an angle-based formula (Liu) evaluated at every
interior angle, and an edge/area formula (Kobayashi) that stays sharp on
thin triangles.  A tetrahedral bound covers 3D.  Mesh-wide constants come
either from element-wise evaluation (sharpest) or from closed forms in the
global quality metrics.  A dense generalized-eigenvalue probe yields certified
*lower* bounds used to sanity-check the upper bounds in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from . import mesh as meshmod
from .errors import (
    ConstraintRankError,
    NegativeRadicandError,
    StrategyInapplicableError,
)
from .geometry import Simplex, angles, edge_lengths, inradius, measure
from .quadrature import reference_monomial_integral

LIU_COEFF = 0.49293
MIN_ANGLE_COEFF = 0.69711  # rounds 0.49293 * sqrt(2) upward
NONBLUNT_COEFF = math.sqrt(11.0 / 60.0)
TET_COEFF = 2.19
L2_COEFF_2D = math.sqrt(3.0 / 83.0)
L2_COEFF_3D = 8.0

RADICAND_TOL = 1e-12

STRATEGIES = ("elementwise", "circumradius", "minangle", "nonblunt", "regularity")


@dataclass(frozen=True)
class ElementConstants:
    """Per-element upper bounds; `h1_best` is the minimum of the available ones."""

    h1_liu: float | None
    h1_kobayashi: float
    h1_best: float
    l2_bound: float


@dataclass(frozen=True)
class GlobalConstants:
    """Mesh-wide H1 constant by several strategies plus the global L2 bound.

    `elementwise` is always at least as sharp as any applicable closed form.
    Closed-form fields are None when their hypothesis fails (e.g. `nonblunt`
    on a mesh with an obtuse triangle) or the dimension does not match.
    """

    dim: int
    elementwise: float
    circumradius: float | None
    minangle: float | None
    nonblunt: float | None
    regularity: float | None
    l2_global: float
    rho_convention: str = "radius"

    def value(self, strategy: str) -> float:
        if strategy not in STRATEGIES:
            raise StrategyInapplicableError(f"unknown strategy {strategy!r}")
        val = getattr(self, strategy)
        if val is None:
            raise StrategyInapplicableError(f"strategy {strategy!r} not applicable to this mesh")
        return float(val)

    def available(self) -> dict[str, float]:
        return {s: getattr(self, s) for s in STRATEGIES if getattr(self, s) is not None}


def _liu_single(alpha: float, beta: float, theta: float) -> float:
    inner = alpha**4 + 2.0 * alpha**2 * beta**2 * math.cos(2.0 * theta) + beta**4
    inner = math.sqrt(max(inner, 0.0))
    radical = math.sqrt((alpha**2 + beta**2 + inner) / 2.0)
    return LIU_COEFF * (1.0 + abs(math.cos(theta))) / math.sin(theta) * radical


def liu_bound(t: Simplex) -> float:
    """Angle-based H1 constant bound, minimized over the three interior angles.

    The formula is valid at any interior angle with its two adjacent edges,
    so the minimum is still a certified upper bound.
    """
    if t.dim != 2:
        raise ValueError("liu_bound applies to triangles")
    ang = angles(t)
    v = t.vertices
    best = math.inf
    for i in range(3):
        alpha = float(np.linalg.norm(v[(i + 1) % 3] - v[i]))
        beta = float(np.linalg.norm(v[(i + 2) % 3] - v[i]))
        best = min(best, _liu_single(alpha, beta, ang[i]))
    return best


def _kobayashi_radicand(a2: float, b2: float, c2: float, s: float) -> float:
    return (
        a2 * b2 * c2 / (16.0 * s * s)
        - (a2 + b2 + c2) / 30.0
        - (s * s / 5.0) * (1.0 / a2 + 1.0 / b2 + 1.0 / c2)
    )


def _clamp_radicand(rad: float, scale: float) -> float:
    if rad < -RADICAND_TOL * max(1.0, scale):
        raise NegativeRadicandError(f"radicand {rad:.3e} negative beyond tolerance")
    return max(rad, 0.0)


def kobayashi_bound_2d(t: Simplex) -> float:
    """Edge/area H1 constant bound; never exceeds the circumradius."""
    if t.dim != 2:
        raise ValueError("kobayashi_bound_2d applies to triangles")
    s = measure(t)
    lengths = edge_lengths(t)
    a2, b2, c2 = (ell**2 for ell in lengths)
    rad = _kobayashi_radicand(a2, b2, c2, s)
    return math.sqrt(_clamp_radicand(rad, a2))


def kobayashi_bound_3d(t: Simplex, rho_convention: str = "radius") -> float:
    """Tetrahedral H1 constant bound 2.19 * h_T^2 / rho(T).

    `rho_convention` selects the inscribed-ball quantity used for rho(T):
    "radius" (default, conservative: the larger bound) or "diameter".
    """
    if t.dim != 3:
        raise ValueError("kobayashi_bound_3d applies to tetrahedra")
    rho = _rho(inradius(t), rho_convention)
    h = edge_lengths(t)[0]
    return TET_COEFF * h * h / rho


def _rho(inr: float, convention: str) -> float:
    if convention == "radius":
        return inr
    if convention == "diameter":
        return 2.0 * inr
    raise ValueError(f"unknown rho convention {convention!r}")


def element_constants(t: Simplex, rho_convention: str = "radius") -> ElementConstants:
    h = edge_lengths(t)[0]
    if t.dim == 2:
        liu = liu_bound(t)
        kob = kobayashi_bound_2d(t)
        return ElementConstants(liu, kob, min(liu, kob), L2_COEFF_2D * h * h)
    kob = kobayashi_bound_3d(t, rho_convention)
    return ElementConstants(None, kob, kob, L2_COEFF_3D * h * h)


def global_l2_bound(dim: int, h: float) -> float:
    """Mesh-wide L2 interpolation constant: sqrt(3/83) h^2 (2D) or 8 h^2 (3D)."""
    if dim == 2:
        return L2_COEFF_2D * h * h
    if dim == 3:
        return L2_COEFF_3D * h * h
    raise ValueError(f"unsupported dimension {dim}")


def min_angle_global(theta0: float, h: float) -> float:
    """Closed-form H1 constant from the mesh size and the minimal angle."""
    half = 0.5 * theta0
    return MIN_ANGLE_COEFF * math.cos(half) ** 2 / math.sin(half) * h


def nonblunt_profile_bound(a: float, b: float) -> float:
    """Intermediate bound for the normalized non-obtuse triangle with apex (a, b).

    Valid for the triangle with base from (-1/2,0) to (1/2,0) and apex (a, b)
    inside the constraint region of non-obtuse triangles with unit longest
    edge; its supremum over that region equals sqrt(11/60).
    """
    return math.sqrt(b * b / 30.0 + 11.0 * a * a / 60.0 + 11.0 / 80.0)


# ---------------------------------------------------------------------------
# vectorized element-wise evaluation over a whole mesh


def _liu_batch(edge_sq: np.ndarray) -> np.ndarray:
    """Min-over-angles Liu bound per element from squared edge lengths.

    Column j of edge_sq is the squared length opposite vertex j, so the
    angle at vertex j has adjacent squared lengths in the other columns.
    """
    lengths = np.sqrt(edge_sq)
    best = np.full(edge_sq.shape[0], np.inf)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        a2, b2 = edge_sq[:, j], edge_sq[:, k]
        cos_t = (a2 + b2 - edge_sq[:, i]) / (2.0 * lengths[:, j] * lengths[:, k])
        cos_t = np.clip(cos_t, -1.0, 1.0)
        sin_t = np.sqrt(1.0 - cos_t**2)
        cos_2t = 2.0 * cos_t**2 - 1.0
        inner = np.sqrt(np.maximum(a2 * a2 + 2.0 * a2 * b2 * cos_2t + b2 * b2, 0.0))
        radical = np.sqrt((a2 + b2 + inner) / 2.0)
        val = LIU_COEFF * (1.0 + np.abs(cos_t)) / sin_t * radical
        best = np.minimum(best, val)
    return best


def _kobayashi_batch_2d(edge_sq: np.ndarray, area: np.ndarray) -> np.ndarray:
    a2, b2, c2 = edge_sq[:, 0], edge_sq[:, 1], edge_sq[:, 2]
    rad = (
        a2 * b2 * c2 / (16.0 * area * area)
        - (a2 + b2 + c2) / 30.0
        - (area * area / 5.0) * (1.0 / a2 + 1.0 / b2 + 1.0 / c2)
    )
    scale = np.maximum(1.0, edge_sq.max(axis=1))
    if np.any(rad < -RADICAND_TOL * scale):
        worst = int(np.argmin(rad))
        raise NegativeRadicandError(f"element {worst}: radicand {rad[worst]:.3e} negative beyond tolerance")
    return np.sqrt(np.maximum(rad, 0.0))


def mesh_constants(
    mesh: meshmod.SimplicialMesh,
    qual: meshmod.MeshQuality | None = None,
    rho_convention: str = "radius",
) -> GlobalConstants:
    """Mesh-wide constants: element-wise maximum plus all closed forms."""
    if qual is None:
        qual = meshmod.quality(mesh)
    em = meshmod.element_metrics(mesh)
    if mesh.dim == 2:
        liu = _liu_batch(em.edge_sq)
        kob = _kobayashi_batch_2d(em.edge_sq, em.measures)
        elementwise = float(np.minimum(liu, kob).max())
        return GlobalConstants(
            dim=2,
            elementwise=elementwise,
            circumradius=qual.max_circumradius,
            minangle=min_angle_global(qual.min_angle, qual.h),
            nonblunt=NONBLUNT_COEFF * qual.h if qual.nonblunt else None,
            regularity=None,
            l2_global=global_l2_bound(2, qual.h),
            rho_convention=rho_convention,
        )
    rho = _rho(em.inradius, rho_convention)
    kob = TET_COEFF * em.h**2 / rho
    sigma_conv = float((em.h / rho).max())
    return GlobalConstants(
        dim=3,
        elementwise=float(kob.max()),
        circumradius=None,
        minangle=None,
        nonblunt=None,
        regularity=TET_COEFF * sigma_conv * qual.h,
        l2_global=global_l2_bound(3, qual.h),
        rho_convention=rho_convention,
    )


# ---------------------------------------------------------------------------
# spectral lower-bound probe


def _monomial_exponents(degree: int) -> list[tuple[int, int]]:
    return [(i, j) for total in range(degree + 1) for i in range(total + 1) for j in [total - i]]


def _grad_monomial(i: int, j: int) -> list[tuple[float, int, int]]:
    out = []
    out.append((float(i), i - 1, j) if i > 0 else (0.0, 0, 0))
    out.append((float(j), i, j - 1) if j > 0 else (0.0, 0, 0))
    return out


def _hess_monomial(i: int, j: int) -> list[list[tuple[float, int, int]]]:
    def d(coef, a, b, var):
        if coef == 0.0:
            return (0.0, 0, 0)
        if var == 0:
            return (coef * a, a - 1, b) if a > 0 else (0.0, 0, 0)
        return (coef * b, a, b - 1) if b > 0 else (0.0, 0, 0)

    gx = d(1.0, i, j, 0)
    gy = d(1.0, i, j, 1)
    return [
        [d(*gx, 0), d(*gx, 1)],
        [d(*gy, 0), d(*gy, 1)],
    ]


def _pair_integral(m1: tuple[float, int, int], m2: tuple[float, int, int]) -> float:
    c = m1[0] * m2[0]
    if c == 0.0:
        return 0.0
    return c * reference_monomial_integral((m1[1] + m2[1], m1[2] + m2[2]))


def _power_iteration(s_matvec, n: int, tol: float = 1e-10, maxiter: int = 10000, shift: float = 0.0):
    """Largest eigenvalue of a symmetric PSD operator by (shifted) power iteration.

    Returns the final Rayleigh quotient, which for a PSD operator is always a
    lower bound of the true largest eigenvalue regardless of convergence.
    """
    w = np.ones(n) + 1e-3 * np.arange(n)  # deterministic start
    w /= np.linalg.norm(w)
    lam = 0.0
    for _ in range(maxiter):
        z = s_matvec(w) + shift * w
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        w = z / nz
        lam_new = float(w @ (s_matvec(w) + shift * w))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new - shift
        lam = lam_new
    return lam - shift


def rayleigh_lower_bound(t: Simplex, degree: int = 4) -> float:
    """Certified lower bound for the element H1 interpolation constant.

    Maximizes |v|_1 / |v|_2 over polynomials of total degree <= `degree`
    vanishing at the vertices.  Quadratic forms are assembled exactly from
    closed-form monomial integrals on the reference triangle; the largest
    generalized eigenvalue is found by power iteration on the Cholesky-
    transformed system.  Any Rayleigh quotient of an admissible polynomial
    bounds the true supremum from below, so the result is certified even
    if the iteration stops early.
    """
    if t.dim != 2:
        raise ValueError("rayleigh_lower_bound applies to triangles")
    if not 2 <= degree <= 6:
        raise ValueError("degree must be between 2 and 6")
    v = t.vertices
    b_map = v[1:] - v[0]  # rows are edge vectors; x = v0 + B^T xi
    det = float(np.linalg.det(b_map))
    h2 = max(float(((v[i] - v[j]) ** 2).sum()) for i in range(3) for j in range(i))
    if abs(det) <= 1e-13 * h2:
        raise ConstraintRankError("degenerate vertex placement")
    c_mat = np.linalg.inv(b_map @ b_map.T)

    exps = _monomial_exponents(degree)
    n = len(exps)
    grads = [_grad_monomial(i, j) for i, j in exps]
    hesses = [_hess_monomial(i, j) for i, j in exps]

    g1 = np.zeros((n, n))
    g2 = np.zeros((n, n))
    for p in range(n):
        for q in range(p, n):
            acc1 = 0.0
            for k in range(2):
                for l in range(2):
                    acc1 += c_mat[k, l] * _pair_integral(grads[p][k], grads[q][l])
            acc2 = 0.0
            for i in range(2):
                for j in range(2):
                    for k in range(2):
                        for l in range(2):
                            acc2 += c_mat[i, j] * c_mat[k, l] * _pair_integral(
                                hesses[p][j][k], hesses[q][l][i]
                            )
            g1[p, q] = g1[q, p] = abs(det) * acc1
            g2[p, q] = g2[q, p] = abs(det) * acc2

    # Constraints: vanish at reference vertices (0,0), (1,0), (0,1).
    rows = np.zeros((3, n))
    for idx, (i, j) in enumerate(exps):
        rows[0, idx] = 1.0 if (i, j) == (0, 0) else 0.0
        rows[1, idx] = 1.0 if j == 0 else 0.0
        rows[2, idx] = 1.0 if i == 0 else 0.0
    u_svd, sing, vt = np.linalg.svd(rows)
    if np.min(sing) <= 1e-12 * np.max(sing):
        raise ConstraintRankError("vertex constraints are rank deficient")
    z_basis = vt[3:].T  # orthonormal nullspace basis

    a_proj = z_basis.T @ g1 @ z_basis
    m_proj = z_basis.T @ g2 @ z_basis
    try:
        chol = np.linalg.cholesky(m_proj)
    except np.linalg.LinAlgError as exc:
        raise ConstraintRankError(f"H2 form singular on constrained space: {exc}") from exc

    def s_matvec(w):
        y = solve_triangular(chol, a_proj @ solve_triangular(chol, w, lower=True, trans="T"), lower=True)
        return y

    lam = _power_iteration(s_matvec, a_proj.shape[0])
    return math.sqrt(max(lam, 0.0))
