"""C0 interior penalty finite elements for the gradient-elastic Kirchhoff plate.

Solves Delta^2 w - iota^2 Delta^3 w = f on polygonal domains with clamped
boundary conditions (w = dw/dn = d2w/dn2 = 0) using cubic Hermite triangles
and penalized jumps of normal derivatives across edges, with error norms that
stay robust as the size parameter iota tends to zero.
"""

from .mesh import (
    Edge,
    Mesh,
    MeshError,
    build_structured_mesh,
    delaunay_mesh,
    from_arrays,
    read_mesh,
    write_mesh,
)
from .quadrature import QuadratureRule, edge_rule, triangle_rule
from .element import HermiteBasis, directional_derivatives
from .assembly import (
    AssembledSystem,
    DofMap,
    FormParts,
    assemble,
    assemble_forms,
    assemble_load,
    build_system,
    dump_system,
    form_action,
    local_edge_matrices,
    local_volume_matrices,
)
from .solver import SolveReport, SolverError, smallest_eigenvalue, solve
from .function import DiscreteFunction
from .analysis import (
    ErrorReport,
    error_norms,
    oscillation,
    quasi_interpolate,
    rate,
)
from .problems import (
    ManufacturedProblem,
    example1,
    example2,
    make_problem,
)
from .study import StudyConfig, StudyResult, run_study, write_csv, write_json

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem",
    "DiscreteFunction",
    "DofMap",
    "Edge",
    "ErrorReport",
    "FormParts",
    "HermiteBasis",
    "ManufacturedProblem",
    "Mesh",
    "MeshError",
    "QuadratureRule",
    "SolveReport",
    "SolverError",
    "StudyConfig",
    "StudyResult",
    "assemble",
    "assemble_forms",
    "assemble_load",
    "build_structured_mesh",
    "build_system",
    "delaunay_mesh",
    "directional_derivatives",
    "dump_system",
    "edge_rule",
    "error_norms",
    "example1",
    "example2",
    "form_action",
    "from_arrays",
    "local_edge_matrices",
    "local_volume_matrices",
    "make_problem",
    "oscillation",
    "quasi_interpolate",
    "rate",
    "read_mesh",
    "run_study",
    "smallest_eigenvalue",
    "solve",
    "triangle_rule",
    "write_csv",
    "write_json",
    "write_mesh",
]
