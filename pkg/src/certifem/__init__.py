"""Certified a-priori L2 error bounds for P1 finite elements on convex domains.

The pipeline: model an exact convex domain through its support function,
inscribe a polytope with an exactly computed boundary gap, mesh it, bound
the mesh-wide interpolation constants, and assemble a fully explicit error
bound that provably dominates the measured error of the P1 solve.
"""

from .domain import (
    Ball,
    ConvexDomain,
    ConvexPolygon,
    Disk,
    PolyApprox,
    gap_delta,
    inscribed_regular_polygon,
    load_poly_approx,
    make_poly_approx,
    poly_approx_of_polygon,
)
from .errors import (
    BoundViolationError,
    CertifemError,
    ConstraintRankError,
    DegenerateSimplexError,
    InvalidDirectionError,
    InvalidPolygonError,
    InvertedElementError,
    MeshParseError,
    MissingNormMetadata,
    NegativeRadicandError,
    NonConformingMeshError,
    NotInscribedError,
    NotNonBluntError,
    StrategyInapplicableError,
    SupNormViolationError,
)
from .estimator import CertifiedBound, certify, certify_closed_form_2d, poincare_bound
from .fem import (
    FemSolution,
    LinearSystem,
    SourceTerm,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    build_fh,
    dirichlet_system,
    fem_h1_seminorm,
    fem_l2_norm,
    fh_error_measured,
    fh_perturbation_bound,
    l2_error_interior,
    poincare_residual,
    solve_cg,
    solve_poisson,
)
from .geometry import (
    Simplex,
    angles,
    barycenter,
    circumcenter,
    circumradius,
    edge_lengths,
    inradius,
    is_nonblunt,
    measure,
    min_angle,
    signed_measure,
    tetrahedron,
    triangle,
)
from .interp_constants import (
    ElementConstants,
    GlobalConstants,
    element_constants,
    global_l2_bound,
    kobayashi_bound_2d,
    kobayashi_bound_3d,
    liu_bound,
    mesh_constants,
    min_angle_global,
    nonblunt_profile_bound,
    rayleigh_lower_bound,
)
from .mesh import (
    MeshQuality,
    SimplicialMesh,
    build_mesh,
    check_boundary_on_poly,
    edge_count,
    element_metrics,
    generate_fan_refined,
    load,
    measure_sum,
    quality,
    refine_uniform,
    save,
)
from .verify import (
    BarrierReport,
    ConvergenceReport,
    DiskStudyRow,
    ExactSolution,
    actual_l2_error,
    barrier_check,
    convergence_study,
    default_refine_rule,
    disk_study_csv,
    disk_study_json,
    disk_study_row,
    gap_error_term,
    registry,
    run_disk_study,
    structured_square_mesh,
)

__version__ = "0.1.0"
