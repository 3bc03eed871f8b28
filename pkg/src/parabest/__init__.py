"""Backward Euler finite elements for parabolic problems, with a posteriori
error estimators built from elliptic reconstruction.

The package solves u_t + div(-A grad u) = f on a square with homogeneous
Dirichlet data, on conforming triangle meshes refined by newest-vertex
bisection, and computes estimator families that bound the error in
L-inf(L2), L2(H1), L-inf(H1) and H1(L2) norms, together with benchmark
drivers that reproduce convergence and effectivity studies.
"""

from .mesh import (
    BisectionForest,
    Triangulation,
    MeshError,
    IncompatibleMeshesError,
    square_macro,
    uniform_refine,
    bisect_marked,
    is_refinement_of,
    finest_common_coarsening,
    coarsest_common_refinement,
    coarsest_common_refinement_many,
    generation_distance,
    edge_sets,
    meshsize,
    check_conformity,
    dump_mesh,
    dumps_mesh,
    load_mesh,
    loads_mesh,
)
from .fespace import (
    FeSpace,
    FeFunction,
    NonNestedTransferError,
    interpolate,
    transfer,
    quad_triangle,
    quad_edge,
    dump_fefunction,
    load_fefunction,
)
from .assembly import (
    CoefficientMatrix,
    MeshEmbedding,
    mass_matrix,
    stiffness_matrix,
    load_vector,
    domain_integral,
)
from .evolution import (
    Evolution,
    ParabolicProblem,
    SeparableSource,
    TimeSlabState,
    discrete_elliptic,
    l2_project,
    dump_state,
    load_state,
)
from .estimators import (
    ConstantsTable,
    EstimatorWorkspace,
    EstimatorTotals,
    StepIndicators,
)
from .benchmark import (
    PRESETS,
    slow_problem,
    fast_problem,
    run_single,
    run_series,
    eoc,
    write_steps_csv,
    write_summary_csv,
)

__version__ = "0.1.0"
