"""Hybridizable DG solver for the mixed Poisson problem with projected-jump stabilization."""
from .analysis import ErrorReport, ManufacturedProblem, convergence_study, convergence_table, manufactured
from .hdg import (
    Discretization,
    SolutionFields,
    apply_bilinear_B,
    assemble_global,
    local_assemble,
    local_condense,
    recover_fields,
    solve_poisson,
)
from .mesh import Mesh, build_ladder_mesh, build_unit_cube_simplex, build_unit_square_simplex, face_topology

__version__ = "0.1.0"
