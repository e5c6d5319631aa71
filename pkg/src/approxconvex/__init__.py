"""Finite-dimensional certificates for approximate convexity and its stability."""
from .errors import (
    ApproxConvexError, DomainError, DomainMismatchError, EvaluationError, OffRayError,
    OracleError, ParameterError, SizeLimitError, SolverError, StructuralError,
)
from .grids import (
    GridDomain, SampledFunction, TripleSet, MidpointSet, enumerate_convex_triples,
    enumerate_midpoint_pairs, make_ball_grid, make_cube_grid, make_grid,
    make_positive_section_grid, make_simplex_grid, sample_function,
)
from .defects import (
    DefectReport, affinity_defect, chain_inequality_check, convexity_defect, jensen_defect,
    quasi_additivity_constant, random_sparse_pairs, sampled_convexity_defect,
)
from .lp import LinearProgram, LpSolution, solve_lp
from .distances import (
    best_affine_fit, best_jensen_fit, convex_minorant, direct_convex_distance,
    distance_to_convex, grid_convexity_constraints,
)
from .polyhedra import enumerate_vertices
from .gallery import (
    FStarConfig, SparseVector, cholewa_kominek_omega, entropy_simplex, f_star, growth_report,
    kalton_map, neg_log_norm, ribe, simplex_max_counterexample,
)
from .homogenization import (
    RadialLift, StabilityBudget, affine_recovery_experiment, lift_quasilinearity,
    radial_affine_lift, radial_jensen_lift, stability_bound_report,
)
from .envelope import (
    CoveringSystem, dual_norm, envelope_gap_report, envelope_norm, iterative_preimage,
    make_covering_system, pthetakappa_check, quasi_norm, verify_small_union,
)
from .kernels import BACKEND
