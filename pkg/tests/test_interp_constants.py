import math

import numpy as np
import pytest

from certifem import (
    ConstraintRankError,
    Disk,
    NegativeRadicandError,
    Simplex,
    build_mesh,
    element_constants,
    generate_fan_refined,
    global_l2_bound,
    inscribed_regular_polygon,
    kobayashi_bound_2d,
    kobayashi_bound_3d,
    liu_bound,
    mesh_constants,
    min_angle_global,
    nonblunt_profile_bound,
    rayleigh_lower_bound,
    triangle,
)
from certifem.interp_constants import _clamp_radicand, _kobayashi_batch_2d, _liu_batch
from certifem.mesh import element_metrics
from conftest import (
    nonblunt_corner_apexes,
    nonblunt_triangle,
    random_rotation,
    sample_nonblunt_apex,
    sample_triangle,
    triangle_from_angles,
)

EQUILATERAL = triangle([0, 0], [1, 0], [0.5, math.sqrt(3) / 2])
RIGHT_ISO = triangle([0, 0], [1, 0], [0, 1])
REGULAR_TET = Simplex(np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]) / (2 * math.sqrt(2)))


def test_liu_hand_values():
    # equilateral: (1 + cos60)/sin60 = sqrt(3); inner radical collapses to 1
    assert liu_bound(EQUILATERAL) == pytest.approx(0.49293 * math.sqrt(4.5), rel=1e-13)
    assert liu_bound(EQUILATERAL) == pytest.approx(1.0456624, abs=1e-6)
    # right isoceles: evaluation at the right angle wins and reduces to the coefficient
    assert liu_bound(RIGHT_ISO) == pytest.approx(0.49293, rel=1e-13)


def test_liu_scaling():
    doubled = triangle([0, 0], [2, 0], [1, math.sqrt(3)])
    assert liu_bound(doubled) == pytest.approx(2 * liu_bound(EQUILATERAL), rel=1e-12)


def test_kobayashi_hand_values():
    assert kobayashi_bound_2d(EQUILATERAL) == pytest.approx(math.sqrt(29.0 / 240.0), rel=1e-13)
    assert kobayashi_bound_2d(EQUILATERAL) == pytest.approx(0.3476108, abs=1e-6)
    assert kobayashi_bound_2d(RIGHT_ISO) == pytest.approx(math.sqrt(29.0 / 120.0), rel=1e-13)
    assert kobayashi_bound_2d(RIGHT_ISO) == pytest.approx(0.4915960, abs=1e-6)


def test_kobayashi_3d_conventions():
    # regular tetrahedron edge 1: inradius = 1/(2 sqrt(6))
    assert kobayashi_bound_3d(REGULAR_TET, "diameter") == pytest.approx(2.19 * math.sqrt(6), rel=1e-12)
    assert kobayashi_bound_3d(REGULAR_TET, "radius") == pytest.approx(2.19 * 2 * math.sqrt(6), rel=1e-12)
    assert kobayashi_bound_3d(REGULAR_TET) == kobayashi_bound_3d(REGULAR_TET, "radius")


def test_kobayashi_3d_scaling_and_flattening():
    lam = 2.5
    scaled = Simplex(np.asarray(REGULAR_TET.vertices) * lam)
    assert kobayashi_bound_3d(scaled) == pytest.approx(lam * kobayashi_bound_3d(REGULAR_TET), rel=1e-12)
    prev = 0.0
    for height in (1.0, 0.1, 0.01):
        tet = Simplex([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0.3, 0.3, height]])
        val = kobayashi_bound_3d(tet)
        assert val > prev
        prev = val


def test_global_l2_bound_values():
    assert global_l2_bound(2, 0.1) == pytest.approx(math.sqrt(3.0 / 83.0) * 0.01, rel=1e-13)
    assert global_l2_bound(2, 0.1) == pytest.approx(0.0019012, abs=1e-7)
    assert global_l2_bound(3, 0.5) == pytest.approx(2.0, rel=1e-15)
    assert global_l2_bound(2, 0.0) == 0.0


def test_element_constants_best_is_min():
    ec = element_constants(EQUILATERAL)
    assert ec.h1_best == min(ec.h1_liu, ec.h1_kobayashi)
    assert ec.h1_best == pytest.approx(0.3476108, abs=1e-6)
    assert ec.l2_bound == pytest.approx(math.sqrt(3.0 / 83.0), rel=1e-13)
    ec3 = element_constants(REGULAR_TET)
    assert ec3.h1_liu is None
    assert ec3.h1_best == ec3.h1_kobayashi


def test_mesh_constants_single_equilateral():
    mesh = build_mesh(2, EQUILATERAL.vertices, [[0, 1, 2]])
    gc = mesh_constants(mesh)
    assert gc.elementwise == pytest.approx(0.3476108, abs=1e-6)
    assert gc.circumradius == pytest.approx(1 / math.sqrt(3), rel=1e-12)
    assert gc.nonblunt == pytest.approx(math.sqrt(11.0 / 60.0), rel=1e-12)
    assert gc.value("elementwise") <= min(gc.circumradius, gc.minangle, gc.nonblunt)


def test_mesh_constants_scaling():
    mesh = build_mesh(2, EQUILATERAL.vertices, [[0, 1, 2]])
    big = build_mesh(2, 2.0 * np.asarray(EQUILATERAL.vertices), [[0, 1, 2]])
    gc, gb = mesh_constants(mesh), mesh_constants(big)
    for name in ("elementwise", "circumradius", "minangle", "nonblunt"):
        assert gb.value(name) == pytest.approx(2 * gc.value(name), rel=1e-12)
    assert gb.l2_global == pytest.approx(4 * gc.l2_global, rel=1e-12)


def test_mesh_constants_minangle_right_isoceles():
    mesh = build_mesh(2, RIGHT_ISO.vertices, [[0, 1, 2]])
    gc = mesh_constants(mesh)
    expect = 0.69711 * math.cos(math.pi / 8) ** 2 / math.sin(math.pi / 8) * math.sqrt(2)
    assert gc.minangle == pytest.approx(expect, rel=1e-12)
    assert gc.minangle == pytest.approx(2.1989, abs=2e-4)
    assert min_angle_global(math.pi / 4, math.sqrt(2)) == pytest.approx(expect, rel=1e-15)


def test_mesh_constants_blunt_mesh_has_no_nonblunt_value():
    poly3 = inscribed_regular_polygon(Disk(1.0), 3)
    mesh = generate_fan_refined(poly3, 0)  # 120-degree apex angles
    gc = mesh_constants(mesh)
    assert gc.nonblunt is None
    from certifem import StrategyInapplicableError

    with pytest.raises(StrategyInapplicableError):
        gc.value("nonblunt")
    with pytest.raises(StrategyInapplicableError):
        gc.value("regularity")


def test_mesh_constants_3d_consistency():
    verts = [[0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]]
    els = [
        [0, 1, 3, 5], [0, 3, 2, 5], [0, 2, 4, 5], [0, 4, 1, 5],
        [0, 3, 1, 6], [0, 2, 3, 6], [0, 4, 2, 6], [0, 1, 4, 6],
    ]
    mesh = build_mesh(3, verts, els)
    for conv in ("radius", "diameter"):
        gc = mesh_constants(mesh, rho_convention=conv)
        assert gc.circumradius is None and gc.minangle is None and gc.nonblunt is None
        assert gc.elementwise <= gc.regularity * (1 + 1e-12)
    assert mesh_constants(mesh, rho_convention="radius").elementwise == pytest.approx(
        2 * mesh_constants(mesh, rho_convention="diameter").elementwise, rel=1e-12
    )


def test_batch_matches_scalar(rng):
    tris = [sample_triangle(rng) for _ in range(10)]
    nodes = np.vstack([t.vertices for t in tris])
    elements = np.arange(30).reshape(-1, 3)
    mesh = build_mesh(2, nodes, elements)
    em = element_metrics(mesh)
    liu = _liu_batch(em.edge_sq)
    kob = _kobayashi_batch_2d(em.edge_sq, em.measures)
    for i in range(mesh.element_count):
        t = Simplex(mesh.nodes[mesh.elements[i]])
        assert liu[i] == pytest.approx(liu_bound(t), rel=1e-10)
        assert kob[i] == pytest.approx(kobayashi_bound_2d(t), rel=1e-10)


def test_radicand_clamp():
    assert _clamp_radicand(-1e-13, 1.0) == 0.0
    assert _clamp_radicand(0.25, 1.0) == 0.25
    with pytest.raises(NegativeRadicandError):
        _clamp_radicand(-1e-6, 1.0)


def test_rigid_motion_invariance(rng):
    for _ in range(100):
        t = sample_triangle(rng)
        q = random_rotation(rng, 2)
        t2 = Simplex(t.vertices @ q.T + rng.normal(size=2))
        assert liu_bound(t2) == pytest.approx(liu_bound(t), rel=1e-10)
        assert kobayashi_bound_2d(t2) == pytest.approx(kobayashi_bound_2d(t), rel=1e-10)


def test_degree_one_homogeneity(rng):
    for _ in range(100):
        t = sample_triangle(rng)
        lam = rng.uniform(0.2, 5.0)
        t2 = Simplex(np.asarray(t.vertices) * lam)
        assert liu_bound(t2) == pytest.approx(lam * liu_bound(t), rel=1e-10)
        assert kobayashi_bound_2d(t2) == pytest.approx(lam * kobayashi_bound_2d(t), rel=1e-10)


def test_circumradius_domination_spot(rng):
    from certifem import circumradius

    for _ in range(500):
        t = sample_triangle(rng)
        assert kobayashi_bound_2d(t) <= circumradius(t) * (1 + 1e-12)


def test_min_angle_domination_spot(rng):
    from certifem import edge_lengths, min_angle

    for _ in range(500):
        t = sample_triangle(rng)
        theta0 = min_angle(t)
        h_t = edge_lengths(t)[0]
        assert liu_bound(t) <= min_angle_global(theta0, h_t) * (1 + 1e-12)


def test_nonblunt_profile_dominates_kobayashi(rng):
    for _ in range(2000):
        a, b = sample_nonblunt_apex(rng)
        t = nonblunt_triangle(a, b)
        prof = nonblunt_profile_bound(a, b)
        assert kobayashi_bound_2d(t) <= prof * (1 + 1e-10)
        assert prof <= math.sqrt(11.0 / 60.0) * (1 + 1e-12)


def test_rayleigh_nested_degrees():
    v2 = rayleigh_lower_bound(EQUILATERAL, 2)
    v4 = rayleigh_lower_bound(EQUILATERAL, 4)
    v6 = rayleigh_lower_bound(EQUILATERAL, 6)
    assert v2 <= v4 * (1 + 1e-9)
    assert v4 <= v6 * (1 + 1e-9)


def test_rayleigh_equilateral_bracket():
    v = rayleigh_lower_bound(EQUILATERAL, 4)
    assert 0.25 < v <= 0.3476108 + 1e-7
    assert v == pytest.approx(0.3182923, abs=5e-6)


def test_rayleigh_below_upper_bounds(rng):
    for _ in range(20):
        t = sample_triangle(rng, min_area=1e-3)
        lo = rayleigh_lower_bound(t, 4)
        assert lo <= element_constants(t).h1_best * (1 + 1e-9)
    sharp = triangle_from_angles(5.0, 87.5)
    lo = rayleigh_lower_bound(sharp, 4)
    assert lo <= element_constants(sharp).h1_best * (1 + 1e-9)


def test_rayleigh_degenerate_raises():
    with pytest.raises(ConstraintRankError):
        rayleigh_lower_bound(Simplex([[0, 0], [1, 0], [2, 1e-15]]), 4)
    with pytest.raises(ValueError):
        rayleigh_lower_bound(EQUILATERAL, 7)


def test_corner_apexes_stay_in_region():
    for a, b in nonblunt_corner_apexes():
        assert (a + 0.5) ** 2 + b * b <= 1.0 + 1e-12
        assert a * a + b * b >= 0.25 - 1e-12
