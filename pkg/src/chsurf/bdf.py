"""Linearly implicit backward differentiation formulae.

The stiff linear part is treated implicitly through the coupled block
solve; the nonlinearities are evaluated at an extrapolated state, so one
sparse linear solve advances a step.  Coefficients come from expanding
the generating polynomials of the BDF family in exact rational
arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .assembly import assemble_mass, assemble_stiffness, element_geometry
from .errors import BlowUpError, ConfigError
from .linsolve import solve_block
from .mesh import evolve_mesh
from .system import (ProblemSpec, StatePair, ThetaVector, rhs_vectors,
                     solve_w_elliptic)

MAX_ORDER = 5


@dataclass(frozen=True)
class BdfScheme:
    """Backward difference and extrapolation coefficients of one order."""

    order: int
    delta: tuple[Fraction, ...]   # s + 1 coefficients, newest first
    gamma: tuple[Fraction, ...]   # s extrapolation coefficients

    @property
    def delta_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.delta])

    @property
    def gamma_float(self) -> np.ndarray:
        return np.array([float(c) for c in self.gamma])


def bdf_coefficients(order: int) -> BdfScheme:
    """Expand delta(z) = sum_l (1-z)^l / l and gamma(z) = (1-(1-z)^s)/z.

    Exact rational arithmetic; orders above five are rejected because the
    energy-estimate stability technique does not cover them.
    """
    if not 1 <= order <= MAX_ORDER:
        raise ConfigError(f"BDF order must be in 1..{MAX_ORDER}, got {order}")
    delta = [Fraction(0)] * (order + 1)
    for ell in range(1, order + 1):
        for j in range(ell + 1):
            delta[j] += Fraction((-1) ** j * math.comb(ell, j), ell)
    gamma = [Fraction((-1) ** j * math.comb(order, j + 1)) for j in range(order)]
    return BdfScheme(order=order, delta=tuple(delta), gamma=tuple(gamma))


class HistoryRing:
    """The last `capacity` states, newest first, with their mass products.

    Stores the pairs (u, M u) so past mass matrices never need to be kept
    alive; times must advance on the uniform grid t_n = t_0 + n tau.
    """

    def __init__(self, capacity: int, tau: float):
        if capacity < 1:
            raise ConfigError("history capacity must be positive")
        if tau <= 0.0:
            raise ConfigError("time step must be positive")
        self.capacity = capacity
        self.tau = float(tau)
        self._u: list[np.ndarray] = []
        self._mu: list[np.ndarray] = []
        self._t: list[float] = []

    def push(self, u: np.ndarray, mass_u: np.ndarray, t: float) -> None:
        if self._t and abs(t - (self._t[0] + self.tau)) > 1e-10 * max(1.0, abs(t)):
            raise ConfigError(
                f"history times must be uniform: expected {self._t[0] + self.tau}, got {t}")
        self._u.insert(0, np.asarray(u, dtype=float))
        self._mu.insert(0, np.asarray(mass_u, dtype=float))
        self._t.insert(0, float(t))
        del self._u[self.capacity:], self._mu[self.capacity:], self._t[self.capacity:]

    def __len__(self) -> int:
        return len(self._u)

    def state(self, j: int) -> np.ndarray:
        """u at j levels back from the newest entry (j = 0 is the newest)."""
        return self._u[j]

    def mass_state(self, j: int) -> np.ndarray:
        return self._mu[j]

    @property
    def newest_time(self) -> float:
        return self._t[0]

    def require(self, n: int) -> None:
        if len(self) < n:
            raise ConfigError(f"history holds {len(self)} states, {n} needed")


def extrapolate(history: HistoryRing, scheme: BdfScheme) -> np.ndarray:
    """gamma-weighted combination of the last s states."""
    history.require(scheme.order)
    gamma = scheme.gamma_float
    out = gamma[0] * history.state(0)
    for j in range(1, scheme.order):
        out += gamma[j] * history.state(j)
    return out


@dataclass(frozen=True)
class StepInfo:
    """Solver diagnostics of one accepted step."""

    residual_u: float
    residual_w: float

    @property
    def max_residual(self) -> float:
        return max(self.residual_u, self.residual_w)


def step(mesh_n, scheme: BdfScheme, history: HistoryRing,
         problem: ProblemSpec, theta: ThetaVector, tau: float,
         matrices=None, loads=None):
    """One linearly implicit step to the time level of mesh_n.

    Solves

        [ d0 M   tau eps A ] [u]   [tau f(u~) - sum_j d_j (M u)^{n-j}]
        [ -eps A        M  ] [w] = [(1/eps) g(u~) + theta            ]

    and returns (state, M, StepInfo).  `matrices`/`loads` allow a driver
    that advances several schemes along one mesh trajectory to reuse the
    assembled M, A and the state-independent source load.
    """
    history.require(scheme.order)
    if matrices is None:
        geo = element_geometry(mesh_n)
        M = assemble_mass(mesh_n, geo)
        A = assemble_stiffness(mesh_n, geo)
    else:
        geo, M, A = matrices
    u_tilde = extrapolate(history, scheme)
    if not np.all(np.isfinite(u_tilde)):
        raise BlowUpError(
            f"extrapolated state is non-finite at t = {mesh_n.time}")
    if loads is None:
        f_vec, g_vec = rhs_vectors(mesh_n, problem, u_tilde, geo)
    else:
        # shared source part plus the run-specific nonlinear parts
        f_vec, g_vec = loads(u_tilde)
    delta = scheme.delta_float
    rhs_u = tau * f_vec
    for j in range(1, scheme.order + 1):
        rhs_u -= delta[j] * history.mass_state(j - 1)
    rhs_w = g_vec + theta.values
    u, w, (res_u, res_w) = solve_block(delta[0], tau, M, problem.eps * A,
                                       rhs_u, rhs_w)
    state = StatePair(u=u, w=w, t=mesh_n.time).require_finite()
    return state, M, StepInfo(residual_u=res_u, residual_w=res_w)


def starting_cascade(mesh0, surface, problem: ProblemSpec, scheme: BdfScheme,
                     tau: float, state0: StatePair, theta: ThetaVector,
                     substeps: int = 1, mode: str = "auto"):
    """States at t_1 .. t_{s-1} needed before the order-s method can run.

    mode "exact" interpolates the exact solution (when available), mode
    "cascade" bootstraps with one step of each preceding lower order at
    the same step size, and "auto" picks "exact" whenever the problem
    carries an exact solution.  Returns (history, meshes, states), the
    meshes and states covering levels 0 .. s-1.
    """
    if mode == "auto":
        mode = "exact" if problem.exact_u is not None else "cascade"
    if mode == "exact" and problem.exact_u is None:
        raise ConfigError("exact starting values need an exact solution")
    if mode not in ("exact", "cascade"):
        raise ConfigError(f"unknown starting mode {mode!r}")

    history = HistoryRing(scheme.order, tau)
    geo0 = element_geometry(mesh0)
    M0 = assemble_mass(mesh0, geo0)
    history.push(state0.u, M0 @ state0.u, state0.t)
    meshes = [mesh0]
    states = [state0]
    for i in range(1, scheme.order):
        t_i = state0.t + i * tau
        mesh_i = evolve_mesh(meshes[-1], surface, t_i, substeps)
        geo_i = element_geometry(mesh_i)
        M_i = assemble_mass(mesh_i, geo_i)
        if mode == "exact":
            u_i = problem.exact_u(mesh_i.nodes, t_i)
            A_i = assemble_stiffness(mesh_i, geo_i)
            w_i = solve_w_elliptic(mesh_i, problem, u_i, theta.values, geo_i,
                                   matrices=(M_i, A_i))
            state_i = StatePair(u=u_i, w=w_i, t=t_i).require_finite()
        else:
            lower = bdf_coefficients(i)
            state_i, M_i, _ = step(mesh_i, lower, history, problem, theta, tau)
        history.push(state_i.u, M_i @ state_i.u, t_i)
        meshes.append(mesh_i)
        states.append(state_i)
    return history, meshes, states
