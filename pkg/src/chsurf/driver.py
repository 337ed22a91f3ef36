"""Time-marching driver for single runs and lockstepped method sweeps.

A "run" is one BDF order advancing on one mesh trajectory.  Several runs
with the same problem, mesh and step size can march in lockstep: the
mesh motion, matrix assembly, source loads and exact-solution
evaluations are shared per time level, and only the linear solves and
nonlinear loads are per-run.  This keeps temporal convergence sweeps
over several orders affordable, and every run is bit-identical to what
it would produce on its own.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .assembly import (assemble_mass, assemble_nonlinear_load,
                       assemble_source_load, assemble_stiffness,
                       element_geometry)
from .bdf import BdfScheme, HistoryRing, bdf_coefficients, step
from .diagnostics import (ErrorRecord, error_norms, exact_context, gl_energy,
                          total_mass)
from .errors import ConfigError
from .geometry import LevelSetSurface
from .mesh import SurfaceMesh, evolve_mesh
from .system import (ProblemSpec, StatePair, ThetaVector, initial_state,
                     solve_w_elliptic)

SnapshotCallback = Callable[[SurfaceMesh, StatePair, int], None]


@dataclass
class RunResult:
    """Everything measured along one accepted run."""

    order: int
    tau: float
    n_steps: int
    times: list[float] = field(default_factory=list)
    errors: list[ErrorRecord] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    masses: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    wall_seconds: float = 0.0
    final_state: Optional[StatePair] = None
    theta_norm: float = 0.0

    @property
    def max_l2(self) -> float:
        return max(r.l2_sum for r in self.errors)

    @property
    def max_h1(self) -> float:
        return max(r.h1_sum for r in self.errors)

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    @property
    def mass_drift(self) -> float:
        """Largest relative deviation of the total mass from its start value."""
        reference = abs(self.masses[0]) if self.masses else 0.0
        if reference == 0.0:
            return max((abs(m) for m in self.masses), default=0.0)
        return max(abs(m - self.masses[0]) for m in self.masses) / reference

    @property
    def final_energy(self) -> float:
        return self.energies[-1] if self.energies else float("nan")


class _Run:
    """Mutable per-run bookkeeping inside the lockstep loop."""

    def __init__(self, order: int, tau: float, state0: StatePair,
                 mass0, start_mode: str, n_steps: int):
        self.scheme: BdfScheme = bdf_coefficients(order)
        self.start_mode = start_mode
        self.history = HistoryRing(order, tau)
        self.history.push(state0.u, mass0 @ state0.u, state0.t)
        self.state = state0
        self.result = RunResult(order=order, tau=tau, n_steps=n_steps)


def run_simulation(surface: LevelSetSurface, problem: ProblemSpec,
                   mesh0: SurfaceMesh, order: int, tau: float, t_end: float,
                   initial_field, **kwargs) -> RunResult:
    """Advance one problem with one BDF order; see run_lockstep."""
    return run_lockstep(surface, problem, mesh0, [order], tau, t_end,
                        initial_field, **kwargs)[0]


def run_lockstep(surface: LevelSetSurface, problem: ProblemSpec,
                 mesh0: SurfaceMesh, orders: Sequence[int], tau: float,
                 t_end: float, initial_field, initial_mode: str = "interpolate",
                 start_mode: str = "auto", node_substeps: int = 1,
                 collect_errors: Optional[bool] = None,
                 energy_scaled: bool = True,
                 snapshot_cb: Optional[SnapshotCallback] = None) -> list[RunResult]:
    """March one or more BDF orders along a shared mesh trajectory.

    Starting values follow start_mode: "exact" interpolates the exact
    solution at the pre-step levels, "cascade" bootstraps with the next
    lower order, "auto" picks "exact" when an exact solution exists.
    Diagnostics (errors when exact fields exist, energy, mass, block
    residuals) are recorded at every accepted level including t = 0.
    """
    if tau <= 0.0 or t_end < mesh0.time:
        raise ConfigError("need tau > 0 and t_end >= the initial time")
    span = t_end - mesh0.time
    n_steps = int(round(span / tau))
    if abs(n_steps * tau - span) > 1e-9 * max(1.0, abs(t_end)):
        raise ConfigError(f"t_end - t0 = {span} is not a multiple of tau = {tau}")
    if collect_errors is None:
        collect_errors = problem.exact_u is not None and problem.exact_w is not None
    if start_mode == "auto":
        start_mode = "exact" if problem.exact_u is not None else "cascade"

    started = _time.perf_counter()
    state0, theta = initial_state(mesh0, surface, problem, initial_field,
                                  mode=initial_mode)
    geo0 = element_geometry(mesh0)
    mass0 = assemble_mass(mesh0, geo0)
    runs = [_Run(order, tau, state0, mass0, start_mode, n_steps)
            for order in orders]
    theta_norm = float(np.linalg.norm(theta.values))

    ctx0 = exact_context(mesh0, surface, problem, geo0) if collect_errors else None
    for run in runs:
        run.result.theta_norm = theta_norm
        _record(run, mesh0, mass0, geo0, state0, problem, ctx0, energy_scaled,
                residual=0.0)
    if snapshot_cb is not None:
        snapshot_cb(mesh0, state0, 0)

    mesh = mesh0
    for n in range(1, n_steps + 1):
        t_n = mesh0.time + n * tau
        mesh = evolve_mesh(mesh, surface, t_n, node_substeps)
        geo = element_geometry(mesh)
        M = assemble_mass(mesh, geo)
        A = assemble_stiffness(mesh, geo)
        b_load = (assemble_source_load(mesh, problem.b, geo)
                  if problem.b is not None else None)

        def loads(u_tilde):
            f_vec = np.zeros(mesh.n_nodes) if b_load is None else b_load.copy()
            if problem.f is not None:
                f_vec += assemble_nonlinear_load(mesh, u_tilde, problem.f, geo)
            g_vec = assemble_nonlinear_load(mesh, u_tilde, problem.g,
                                            geo) / problem.eps
            return f_vec, g_vec

        ctx = exact_context(mesh, surface, problem, geo) if collect_errors else None
        for run in runs:
            if n < run.scheme.order and run.start_mode == "exact":
                u_n = problem.exact_u(mesh.nodes, t_n)
                w_n = solve_w_elliptic(mesh, problem, u_n, theta.values, geo,
                                       matrices=(M, A))
                state = StatePair(u=u_n, w=w_n, t=t_n).require_finite()
                residual = 0.0
            else:
                scheme = (run.scheme if n >= run.scheme.order
                          else bdf_coefficients(n))
                state, _, info = step(mesh, scheme, run.history, problem,
                                      theta, tau, matrices=(geo, M, A),
                                      loads=loads)
                residual = info.max_residual
            run.history.push(state.u, M @ state.u, t_n)
            run.state = state
            _record(run, mesh, M, geo, state, problem, ctx, energy_scaled,
                    residual)
        if snapshot_cb is not None:
            snapshot_cb(mesh, runs[0].state, n)

    elapsed = _time.perf_counter() - started
    for run in runs:
        run.result.final_state = run.state
        run.result.wall_seconds = elapsed / len(runs)
    return [run.result for run in runs]


def _record(run: _Run, mesh, M, geo, state: StatePair, problem: ProblemSpec,
            ctx, energy_scaled: bool, residual: float) -> None:
    res = run.result
    res.times.append(state.t)
    res.masses.append(total_mass(M, state.u))
    res.energies.append(gl_energy(mesh, state.u, problem.eps,
                                  scaled=energy_scaled, potential=problem.F,
                                  geo=geo))
    res.residuals.append(residual)
    if ctx is not None:
        res.errors.append(error_norms(mesh, state, problem, ctx=ctx, geo=geo))
