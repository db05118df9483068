"""Circle patterns with prescribed intersection and cone angles.

Solvers for the convex variational construction of circle patterns on
Euclidean, hyperbolic and spherical surfaces, with existence checking via
coherent angle systems and feasible flows, geometric layout and export.
"""

from .surface import (
    CellularSurface, build_surface, surface_from_walks, dual, medial,
    quad_graph, euler_characteristic, vertex_angle_sums, isomorphic,
    SurfaceError, OPEN,
)
from .functional import (
    PatternSpec, CoherentAngleSystem, EUCLIDEAN, HYPERBOLIC,
    phi_of_rho, value, gradient, hessian, cas_from_rho, validate_cas,
    hamiltonian_reduced, rho_from_cas, radii_from_rho,
)

__all__ = [
    "CellularSurface", "build_surface", "surface_from_walks", "dual", "medial",
    "quad_graph", "euler_characteristic", "vertex_angle_sums", "isomorphic",
    "SurfaceError", "OPEN",
    "PatternSpec", "CoherentAngleSystem", "EUCLIDEAN", "HYPERBOLIC",
    "phi_of_rho", "value", "gradient", "hessian", "cas_from_rho", "validate_cas",
    "hamiltonian_reduced", "rho_from_cas", "radii_from_rho",
]

__version__ = "0.1.0"
