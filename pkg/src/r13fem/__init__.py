"""Mixed finite element solver for the steady linearized R13 moment equations.

The package solves the dimensionless, linearized R13 system of rarefied gas
dynamics on 2D triangle meshes with a mixed Galerkin method.  All nine scalar
unknowns (heat flux s_x, s_y, temperature theta, deviatoric stress sigma_xx,
sigma_xy, sigma_yy, velocity u_x, u_y, pressure p) live in one coupled system.
Equal-order Lagrange elements are stabilized with continuous interior penalty
(CIP) terms on interior edges; Maxwell-type wall conditions and an inflow
model enter weakly through boundary integrals, so no Dirichlet rows are ever
imposed.
"""

from .mesh import Mesh2D, generate_rectangle, generate_annulus, read_gmsh, write_gmsh
from .fespace import MixedSpace, make_space, triangle_quadrature, edge_quadrature
from .forms import (
    PhysicalParams,
    StabilizationParams,
    BoundaryData,
    SourceData,
    LocalForms,
)
from .system import AssembledSystem, assemble, solve, extract_block, SolveError
from .cases import (
    ProblemSpec,
    case_ring_flow,
    case_channel,
    case_knudsen_pump,
    case_thermal_edge,
    validate,
)
from .run import solve_problem
from .postproc import Solution

__version__ = "0.1.0"
