"""Problem definition, Ritz map, initial data and the w-correction.

This module turns a mesh snapshot plus a problem description into the
pieces the time integrator consumes: nodal initial values, the
time-independent correction of the chemical-potential equation, and the
nonlinear right-hand side vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .assembly import (assemble_mass, assemble_nonlinear_load,
                       assemble_source_load, assemble_stiffness,
                       element_geometry, load_from_quad_values, quad_points)
from .errors import BlowUpError, ConfigError
from .geometry import (AmbientField, LevelSetSurface, chemical_potential_field,
                       manufactured_source_function, project_to_surface,
                       surface_gradient)
from .linsolve import solve_spd
from .quadrature import degree4_rule

THETA_MODES = ("with_theta", "without_theta", "auto")

_RULE = degree4_rule()


def double_well_g(u, grad_u=None):
    """Derivative of the double-well potential, u^3 - u."""
    return u ** 3 - u


def double_well_potential(u):
    """F(u) = (u^2 - 1)^2 / 4, minimal at the pure phases u = +-1."""
    return 0.25 * (u ** 2 - 1.0) ** 2


@dataclass(frozen=True)
class ProblemSpec:
    """Coefficients and fields describing one evolution problem.

    The system solved is

        mat u - lap_G w = f(u, grad_G u) - u div_G v + b
        w + eps lap_G u = (1/eps) g(u, grad_G u)

    with eps = 1 recovering the unscaled formulation.  g (and f, when
    present) receive interpolated values and gradients; for manufactured
    sources g must ignore the gradient argument.
    """

    eps: float
    g: Callable = double_well_g
    f: Optional[Callable] = None
    F: Callable = double_well_potential
    b: Optional[Callable] = None          # ambient source b(points, t)
    exact_u: Optional[AmbientField] = None
    exact_w: Optional[AmbientField] = None
    theta_mode: str = "auto"
    g_depends_on_gradient: bool = False
    f_depends_on_gradient: bool = False

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.theta_mode not in THETA_MODES:
            raise ConfigError(
                f"theta_mode must be one of {THETA_MODES}, got {self.theta_mode!r}")

    def scalar_g(self) -> Callable:
        """The nonlinearity as a function of u alone."""
        if self.g_depends_on_gradient:
            raise ConfigError("nonlinearity g depends on the surface gradient")
        return lambda u: self.g(u, None)

    def resolve_theta_mode(self) -> str:
        if self.theta_mode != "auto":
            return self.theta_mode
        return "with_theta" if self.exact_w is not None else "without_theta"


@dataclass(frozen=True)
class StatePair:
    """Nodal solution vectors of both variables at one time level."""

    u: np.ndarray
    w: np.ndarray
    t: float

    def require_finite(self) -> "StatePair":
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.w))):
            raise BlowUpError(f"non-finite state at t = {self.t}")
        return self


@dataclass(frozen=True)
class ThetaVector:
    """Time-independent correction of the chemical-potential equation."""

    values: np.ndarray
    mode: str

    def __post_init__(self):
        self.values.setflags(write=False)

    @classmethod
    def zero(cls, n: int) -> "ThetaVector":
        return cls(values=np.zeros(n), mode="without_theta")


def double_well_problem(eps: float, **kwargs) -> ProblemSpec:
    """Classical double-well problem with f = 0."""
    return ProblemSpec(eps=eps, g=double_well_g, F=double_well_potential, **kwargs)


def manufactured_problem(surface: LevelSetSurface, eps: float,
                         u_field: AmbientField,
                         theta_mode: str = "without_theta") -> ProblemSpec:
    """Double-well problem with a source making u_field the exact solution.

    The exact chemical potential follows from the second equation and the
    source from the first; both are built once and reused by the hot loop.
    """
    base = double_well_problem(eps)
    g_scalar = base.scalar_g()
    w_field = chemical_potential_field(surface, u_field, g_scalar, eps)
    b = manufactured_source_function(surface, u_field, g_scalar, eps)
    return replace(base, b=b, exact_u=u_field, exact_w=w_field,
                   theta_mode=theta_mode)


# ---------------------------------------------------------------------------
# Ritz map
# ---------------------------------------------------------------------------

def ritz_map(mesh, surface: LevelSetSurface, field: AmbientField,
             geo=None) -> np.ndarray:
    """Elliptic projection of an exact field onto the finite element space.

    Solves (M + A) z = r where r pairs the exact values and exact surface
    gradients, both evaluated at quadrature points lifted onto the exact
    surface, with the discrete basis functions and their gradients.
    Constants are reproduced exactly.
    """
    geo = geo or element_geometry(mesh)
    t = mesh.time
    yq = project_to_surface(surface, quad_points(mesh), t)
    vals = field(yq, t)
    grads = surface_gradient(field, surface, yq, t)
    rhs = load_from_quad_values(mesh, geo, vals)
    weighted = 2.0 * geo.areas[:, None] * _RULE.weights[None, :]
    local = np.einsum("tq,tqd,tid->ti", weighted, grads, geo.gradients)
    np.add.at(rhs, mesh.elements.ravel(), local.ravel())
    K = assemble_mass(mesh, geo) + assemble_stiffness(mesh, geo)
    return solve_spd(K, rhs)


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------

def nonlinear_g_load(mesh, problem: ProblemSpec, u: np.ndarray,
                     geo=None) -> np.ndarray:
    return assemble_nonlinear_load(mesh, u, problem.g, geo)


def solve_w_elliptic(mesh, problem: ProblemSpec, u: np.ndarray,
                     theta_values: np.ndarray | float = 0.0,
                     geo=None, matrices=None) -> np.ndarray:
    """Chemical potential from the (possibly corrected) elliptic equation.

    Solves M w = eps A u + (1/eps) g-load(u) + theta on one snapshot.
    """
    geo = geo or element_geometry(mesh)
    if matrices is None:
        M = assemble_mass(mesh, geo)
        A = assemble_stiffness(mesh, geo)
    else:
        M, A = matrices
    rhs = (problem.eps * (A @ u)
           + nonlinear_g_load(mesh, problem, u, geo) / problem.eps
           + theta_values)
    return solve_spd(M, rhs)


def compute_wbar0(mesh0, problem: ProblemSpec, u0: np.ndarray,
                  geo=None) -> np.ndarray:
    """Chemical potential obtained from the uncorrected elliptic equation.

    Solves M w = eps A u0 + (1/eps) g-load(u0) on the initial snapshot.
    """
    return solve_w_elliptic(mesh0, problem, u0, 0.0, geo)


def compute_theta(mesh0, surface: LevelSetSurface, problem: ProblemSpec,
                  u0: np.ndarray, geo=None) -> ThetaVector:
    """Correction vector M(0) (w*(0) - wbar(0)) from the Ritz map of exact w.

    With the correction installed, the initial elliptic solve returns
    exactly the Ritz map of the exact chemical potential.
    """
    mode = problem.resolve_theta_mode()
    if mode == "without_theta":
        return ThetaVector.zero(mesh0.n_nodes)
    if problem.exact_w is None:
        raise ConfigError("with_theta initialisation needs an exact_w field")
    geo = geo or element_geometry(mesh0)
    w_star = ritz_map(mesh0, surface, problem.exact_w, geo)
    w_bar = compute_wbar0(mesh0, problem, u0, geo)
    M = assemble_mass(mesh0, geo)
    return ThetaVector(values=M @ (w_star - w_bar), mode="with_theta")


def initial_state(mesh0, surface: LevelSetSurface, problem: ProblemSpec,
                  initial_field: AmbientField,
                  mode: str = "interpolate") -> tuple[StatePair, ThetaVector]:
    """Initial nodal values for both variables plus the correction vector.

    mode "interpolate" samples the initial datum at the nodes; "ritz"
    projects it through the Ritz map.  w0 always solves the (possibly
    corrected) elliptic equation on the initial snapshot.
    """
    geo = element_geometry(mesh0)
    if mode == "interpolate":
        u0 = initial_field(mesh0.nodes, mesh0.time)
    elif mode == "ritz":
        u0 = ritz_map(mesh0, surface, initial_field, geo)
    else:
        raise ConfigError(f"unknown initial mode {mode!r}")
    theta = compute_theta(mesh0, surface, problem, u0, geo)
    w0 = solve_w_elliptic(mesh0, problem, u0, theta.values, geo)
    return StatePair(u=u0, w=w0, t=mesh0.time).require_finite(), theta


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------

def rhs_vectors(mesh, problem: ProblemSpec, u: np.ndarray,
                geo=None) -> tuple[np.ndarray, np.ndarray]:
    """Load vectors (f-vector, g-vector) at the given nodal values.

    The f-vector collects the nonlinearity f and the source b; the
    g-vector carries the 1/eps scaling of the chemical-potential
    equation.
    """
    geo = geo or element_geometry(mesh)
    f_vec = np.zeros(mesh.n_nodes)
    if problem.f is not None:
        f_vec += assemble_nonlinear_load(mesh, u, problem.f, geo)
    if problem.b is not None:
        f_vec += assemble_source_load(mesh, problem.b, geo)
    g_vec = nonlinear_g_load(mesh, problem, u, geo) / problem.eps
    return f_vec, g_vec
