"""Measured errors against exact solutions and end-to-end bound validation.

The flagship pipeline approximates the unit disk by regular m-gons, solves
with f = 1, and compares the measured L2 error (including the exact gap-
region contribution) against the certified bound.  A measured error above
a certified bound is the one fatal scientific failure and raises.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import estimator as estmod
from . import fem as femmod
from . import interp_constants as icmod
from . import mesh as meshmod
from .domain import (
    Ball,
    ConvexDomain,
    ConvexPolygon,
    Disk,
    PolyApprox,
    inscribed_regular_polygon,
    poly_approx_of_polygon,
)
from .errors import BoundViolationError, CertifemError
from .quadrature import adaptive_simpson

# First zero of the Bessel function J0; the reciprocal is the exact Poincare
# constant of the unit disk, documented against the sqrt(2)/pi bound.
BESSEL_J0_FIRST_ZERO = 2.404825557695773


@dataclass(frozen=True)
class ExactSolution:
    name: str
    domain: ConvexDomain
    u: Callable
    f: femmod.SourceTerm
    u_l2_norm: float
    minus_laplacian: Callable  # closed form, for validation against f


def _disk2d() -> ExactSolution:
    dom = Disk(1.0)

    def u(pts):
        pts = np.asarray(pts, dtype=float)
        return 0.25 * (1.0 - (pts**2).sum(axis=-1))

    return ExactSolution(
        name="disk2d",
        domain=dom,
        u=u,
        f=femmod.SourceTerm.constant(1.0, dim=2),
        u_l2_norm=math.sqrt(math.pi / 48.0),
        minus_laplacian=lambda pts: np.ones(np.asarray(pts).shape[:-1]),
    )


def _ball3d() -> ExactSolution:
    dom = Ball(1.0)

    def u(pts):
        pts = np.asarray(pts, dtype=float)
        return (1.0 - (pts**2).sum(axis=-1)) / 6.0

    return ExactSolution(
        name="ball3d",
        domain=dom,
        u=u,
        f=femmod.SourceTerm.constant(1.0, dim=3),
        u_l2_norm=math.sqrt(8.0 * math.pi / 945.0),
        minus_laplacian=lambda pts: np.ones(np.asarray(pts).shape[:-1]),
    )


def _square2d() -> ExactSolution:
    dom = ConvexPolygon([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    f = femmod.SourceTerm.sin_product()

    def u(pts):
        pts = np.asarray(pts, dtype=float)
        return np.sin(math.pi * pts[..., 0]) * np.sin(math.pi * pts[..., 1])

    return ExactSolution(
        name="square2d",
        domain=dom,
        u=u,
        f=f,
        u_l2_norm=0.5,
        minus_laplacian=f.evaluate,
    )


def registry() -> dict[str, ExactSolution]:
    """Built-in problems with known closed-form solutions."""
    entries = [_disk2d(), _ball3d(), _square2d()]
    return {e.name: e for e in entries}


# ---------------------------------------------------------------------------
# gap-region error integral for the disk


def gap_error_term(m: int, tol: float = 1e-14) -> float:
    """Squared L2 norm of the exact solution over the gap between the unit
    disk and the inscribed regular m-gon.

    The radial integral has the closed form (1 - c^2/cos^2 t)^3 / 96 with
    c = cos(pi/m); the angular integral uses adaptive Simpson quadrature.
    """
    if m < 3:
        raise ValueError("need m >= 3")
    c = math.cos(math.pi / m)
    c2 = c * c

    def g(theta: float) -> float:
        val = 1.0 - c2 / math.cos(theta) ** 2
        return val**3

    integral = adaptive_simpson(g, -math.pi / m, math.pi / m, tol=tol)
    return m * integral / 96.0


def actual_l2_error(
    exact: ExactSolution,
    poly: PolyApprox,
    mesh: meshmod.SimplicialMesh,
    sol: femmod.FemSolution,
) -> float:
    """Measured || u - u_h || over the full domain: interior quadrature plus
    the gap contribution (closed form for the disk, zero for exact polygons)."""
    interior = femmod.l2_error_interior(mesh, sol, exact.u)
    if poly.gap <= 0.0:
        gap_sq = 0.0
    elif exact.name == "disk2d" and poly.meta.get("kind") == "regular_polygon":
        gap_sq = gap_error_term(int(poly.meta["m"]))
    else:
        raise CertifemError(
            f"no gap-region integral available for exact={exact.name!r} with this polytope"
        )
    return math.sqrt(interior * interior + gap_sq)


# ---------------------------------------------------------------------------
# barrier check


@dataclass(frozen=True)
class BarrierReport:
    max_abs_u: float
    bound: float
    passed: bool
    samples: int
    worst_point: np.ndarray | None


def barrier_check(exact: ExactSolution, poly: PolyApprox, n_samples: int = 10000, seed: int = 0) -> BarrierReport:
    """Check max |u| over the gap region against (1/2) D delta ||f||_inf.

    Uses seeded rejection sampling (inside the domain, outside the polytope)
    plus deterministic probes along each facet normal; the probe at the facet
    barycenter captures the gap maximum for the built-in domains, which pure
    uniform sampling would miss at any realistic sample count.
    """
    dom = exact.domain
    delta = poly.gap
    bound = 0.5 * dom.diameter * delta * exact.f.sup_norm
    if delta <= 0.0:
        return BarrierReport(0.0, bound, True, 0, None)

    pts = []
    for facet, gap_f in zip(poly.facets, poly.gap_per_facet):
        for t in (0.0, 0.25, 0.5, 0.75, 0.999):
            pts.append(facet.barycenter + t * max(gap_f, 0.0) * facet.normal)
    probes = np.array(pts)

    rng = np.random.default_rng(seed)
    center = getattr(dom, "center", np.zeros(dom.dim))
    radius = getattr(dom, "radius", None)
    kept = []
    kept_count = 0
    attempts = 0
    while kept_count < n_samples and attempts < 200:
        attempts += 1
        want = n_samples - kept_count
        if radius is not None:
            # thin annulus proposal: everything closer than the nearest facet
            # plane is inside the polytope anyway
            r_min = min(float(np.dot(f.normal, f.barycenter - center)) for f in poly.facets)
            r_min = max(0.0, r_min)
            u01 = rng.random(4 * want)
            rr = np.sqrt(u01 * (radius**2 - r_min**2) + r_min**2)
            if dom.dim == 2:
                ang = rng.random(4 * want) * 2.0 * math.pi
                cand = center + np.stack([rr * np.cos(ang), rr * np.sin(ang)], axis=1)
            else:
                zz = rng.random(4 * want) * 2.0 - 1.0
                ang = rng.random(4 * want) * 2.0 * math.pi
                s = np.sqrt(1.0 - zz**2)
                cand = center + rr[:, None] * np.stack([s * np.cos(ang), s * np.sin(ang), zz], axis=1)
        else:
            lo = poly.vertices.min(axis=0)
            hi = poly.vertices.max(axis=0)
            cand = lo + rng.random((4 * want, dom.dim)) * (hi - lo)
        inside = np.asarray(dom.contains(cand))
        outside_poly = poly.signed_facet_distances(cand) >= 0.0
        good = cand[inside & outside_poly]
        if good.size:
            kept.append(good[:want])
            kept_count += min(want, good.shape[0])

    sample_pts = np.vstack([probes] + kept) if kept else probes
    inside = np.asarray(dom.contains(sample_pts, tol=1e-12))
    near_gap = poly.signed_facet_distances(sample_pts) >= -1e-12
    sample_pts = sample_pts[inside & near_gap]
    vals = np.abs(np.asarray(exact.u(sample_pts), dtype=float))
    worst = int(np.argmax(vals))
    max_abs = float(vals[worst])
    return BarrierReport(max_abs, bound, max_abs <= bound + 1e-12, sample_pts.shape[0], sample_pts[worst])


# ---------------------------------------------------------------------------
# disk study (regular m-gon sweep)


def default_refine_rule(m: int) -> int:
    """Refinement levels so the interior mesh size tracks the polygon edge scale."""
    return max(0, math.ceil(math.log2(m / 6.0)))


# Reference results measured with an external Delaunay-mesh pipeline at the
# same polygon resolutions; printed alongside reports as a plausibility
# cross-check, never asserted against the built-in mesher.
REFERENCE_DELAUNAY = {
    10: (4.768e-2, 2.397e-1),
    20: (1.303e-2, 7.688e-2),
    30: (5.910e-3, 4.368e-2),
    40: (3.248e-3, 2.531e-2),
    50: (2.127e-3, 1.672e-2),
}


@dataclass(frozen=True)
class DiskStudyRow:
    m: int
    h: float
    a_m: float
    actual: float
    predicted: float
    ratio: float
    certified: estmod.CertifiedBound
    refine_levels: int
    iterations: int


def disk_study_row(
    m: int,
    refine_levels: int | None = None,
    fh_mode: str = "exact",
    strategy: str = "elementwise",
    mesh: meshmod.SimplicialMesh | None = None,
) -> DiskStudyRow:
    """One pipeline run: m-gon in the unit disk, f = 1, measured vs certified.

    `mesh` overrides the built-in generator (externally meshed m-gon); it is
    validated against the polytope before use.
    """
    exact = _disk2d()
    dom = exact.domain
    poly = inscribed_regular_polygon(dom, m)
    if refine_levels is None:
        refine_levels = default_refine_rule(m)
    if mesh is None:
        mesh = meshmod.generate_fan_refined(poly, refine_levels)
    meshmod.check_boundary_on_poly(mesh, poly)
    sol, _ = femmod.solve_poisson(mesh, exact.f, fh_mode)
    if not sol.converged:
        raise CertifemError(f"solver failed to converge at m={m}")

    # discrete Poincare inequality must hold for every computed solution
    lhs, rhs = femmod.poincare_residual(mesh, sol, dom.diameter)
    if lhs > rhs * (1.0 + 1e-10):
        raise BoundViolationError(f"discrete Poincare inequality violated at m={m}: {lhs} > {rhs}")

    qual = meshmod.quality(mesh)
    em = meshmod.element_metrics(mesh)
    a_m = float(icmod._kobayashi_batch_2d(em.edge_sq, em.measures).max())
    predicted = math.sqrt(math.pi) * (a_m * a_m + 2.0 * math.sin(math.pi / (2.0 * m)) ** 2)
    certified = estmod.certify(dom, poly, mesh, exact.f, fh_mode, strategy, validate=False)
    actual = actual_l2_error(exact, poly, mesh, sol)
    if actual > predicted:
        raise BoundViolationError(f"m={m}: measured error {actual} exceeds predicted bound {predicted}")
    if actual > certified.total:
        raise BoundViolationError(f"m={m}: measured error {actual} exceeds certified bound {certified.total}")
    return DiskStudyRow(
        m=m,
        h=qual.h,
        a_m=a_m,
        actual=actual,
        predicted=predicted,
        ratio=predicted / actual,
        certified=certified,
        refine_levels=refine_levels,
        iterations=sol.iterations,
    )


def run_disk_study(
    m_list: Sequence[int],
    refine_rule: Callable[[int], int] | None = None,
    fh_mode: str = "exact",
    strategy: str = "elementwise",
    threads: int = 1,
) -> list[DiskStudyRow]:
    """Sweep the polygon resolution; rows are independent and may run in
    parallel (capped by `threads`)."""
    if not m_list:
        raise ValueError("m_list must be nonempty")
    rule = refine_rule or default_refine_rule
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda m: disk_study_row(m, rule(m), fh_mode, strategy), m_list))
    else:
        rows = [disk_study_row(m, rule(m), fh_mode, strategy) for m in m_list]
    return rows


def disk_study_csv(rows: Sequence[DiskStudyRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["m", "h", "A_m", "actual", "predicted", "ratio"])
    for r in rows:
        writer.writerow(
            [r.m] + ["%.10g" % v for v in (r.h, r.a_m, r.actual, r.predicted, r.ratio)]
        )
    return buf.getvalue()


def disk_study_json(rows: Sequence[DiskStudyRow]) -> str:
    out = []
    for r in rows:
        ref = REFERENCE_DELAUNAY.get(r.m)
        out.append(
            {
                "m": r.m,
                "h": r.h,
                "A_m": r.a_m,
                "actual": r.actual,
                "predicted": r.predicted,
                "ratio": r.ratio,
                "refine_levels": r.refine_levels,
                "certified": r.certified.to_json_dict(),
                "reference_delaunay": {"actual": ref[0], "predicted": ref[1]} if ref else None,
            }
        )
    return json.dumps(out, sort_keys=True)


# ---------------------------------------------------------------------------
# structured-square convergence study


def structured_square_mesh(n: int) -> meshmod.SimplicialMesh:
    """Unit square split into an n x n grid of squares, each cut along the
    main diagonal; all triangles are right isoceles (non-obtuse)."""
    if n < 1:
        raise ValueError("need n >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    nodes = np.stack([xx.ravel(), yy.ravel()], axis=1)

    def nid(i, j):
        return i * (n + 1) + j

    elements = []
    for i in range(n):
        for j in range(n):
            a, b, c, d = nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)
            elements.append([a, b, c])
            elements.append([a, c, d])
    return meshmod.build_mesh(2, nodes, elements)


@dataclass(frozen=True)
class ConvergenceLevel:
    n: int
    h: float
    error: float
    closed_form_bound: float
    iterations: int


@dataclass(frozen=True)
class ConvergenceReport:
    exact: str
    levels: list[ConvergenceLevel]
    slope: float


def convergence_study(grid_sizes: Sequence[int] = (8, 16, 32), fh_mode: str = "nodal") -> ConvergenceReport:
    """Structured-mesh refinement sweep for the unit-square problem.

    Checks the closed-form bound at every level and fits the L2 convergence
    slope; a bound violation raises.
    """
    exact = _square2d()
    poly = poly_approx_of_polygon(exact.domain)
    levels = []
    for n in grid_sizes:
        mesh = structured_square_mesh(n)
        sol, _ = femmod.solve_poisson(mesh, exact.f, fh_mode)
        if not sol.converged:
            raise CertifemError(f"solver failed to converge at n={n}")
        lhs, rhs = femmod.poincare_residual(mesh, sol, exact.domain.diameter)
        if lhs > rhs * (1.0 + 1e-10):
            raise BoundViolationError(f"discrete Poincare inequality violated at n={n}")
        err = actual_l2_error(exact, poly, mesh, sol)
        bound = estmod.certify_closed_form_2d(exact.domain, poly, mesh, exact.f)
        if err > bound:
            raise BoundViolationError(f"n={n}: measured error {err} exceeds closed-form bound {bound}")
        qual = meshmod.quality(mesh)
        levels.append(ConvergenceLevel(n, qual.h, err, bound, sol.iterations))
    log_h = np.log([lv.h for lv in levels])
    log_e = np.log([lv.error for lv in levels])
    slope = float(np.polyfit(log_h, log_e, 1)[0])
    return ConvergenceReport("square2d", levels, slope)
