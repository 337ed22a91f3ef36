"""Cahn-Hilliard-type equations on closed evolving surfaces.

Piecewise-linear evolving surface finite elements in space, linearly
implicit BDF methods in time, plus the measurement layer (error norms,
convergence orders, energy traces) needed to verify the solver.
"""

from .bdf import BdfScheme, HistoryRing, bdf_coefficients, extrapolate, step
from .diagnostics import (EocTable, ErrorRecord, eoc, error_norms, gl_energy,
                          regime_order, total_mass)
from .errors import (AssemblyError, BlowUpError, ChsurfError, ConfigError,
                     GeometryError, LinearSolveError, MeshError)
from .geometry import (AmbientField, LevelSetSurface, material_derivative,
                       manufactured_source, normal, normal_velocity,
                       project_to_surface, surface_divergence_of_velocity,
                       surface_gradient, surface_laplacian, velocity)
from .mesh import (MeshQualityReport, SurfaceMesh, evolve_mesh, icosphere,
                   mesh_quality)
from .system import (ProblemSpec, StatePair, ThetaVector, compute_theta,
                     compute_wbar0, double_well_problem, initial_state,
                     manufactured_problem, ritz_map)
from .vtkio import read_vtk, write_vtk

__version__ = "0.1.0"
