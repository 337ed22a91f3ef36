"""Error norms, energy and mass tracking, and convergence-order tables."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .assembly import (element_geometry, element_gradients,
                       interpolate_at_quad, quad_points)
from .errors import ConfigError
from .geometry import project_to_surface, surface_gradient
from .quadrature import degree4_rule
from .system import ProblemSpec, StatePair, double_well_potential

_RULE = degree4_rule()

ERROR_CSV_HEADER = ("t", "l2_u", "h1_u", "l2_w", "h1_w")
EOC_CSV_HEADER = ("h", "error", "eoc")


@dataclass(frozen=True)
class ErrorRecord:
    """L2 and H1 errors of both variables at one time level."""

    time: float
    l2_u: float
    h1_u: float
    l2_w: float
    h1_w: float

    @property
    def l2_sum(self) -> float:
        return self.l2_u + self.l2_w

    @property
    def h1_sum(self) -> float:
        return self.h1_u + self.h1_w


@dataclass(frozen=True)
class ExactContext:
    """Exact-solution data at the lifted quadrature points of one snapshot.

    Precomputed once per time level so that several runs sharing a mesh
    trajectory can reuse the (comparatively expensive) evaluations.
    """

    u_values: np.ndarray    # (T, Q)
    u_gradients: np.ndarray  # (T, Q, 3)
    w_values: np.ndarray
    w_gradients: np.ndarray


def exact_context(mesh, surface, problem: ProblemSpec, geo=None) -> ExactContext:
    if problem.exact_u is None or problem.exact_w is None:
        raise ConfigError("error norms need exact_u and exact_w fields")
    t = mesh.time
    lifted = project_to_surface(surface, quad_points(mesh), t)
    return ExactContext(
        u_values=problem.exact_u(lifted, t),
        u_gradients=surface_gradient(problem.exact_u, surface, lifted, t),
        w_values=problem.exact_w(lifted, t),
        w_gradients=surface_gradient(problem.exact_w, surface, lifted, t),
    )


def _norms(mesh, geo, values: np.ndarray, exact_vals: np.ndarray,
           gradients: np.ndarray, exact_grads: np.ndarray) -> tuple[float, float]:
    weights = 2.0 * geo.areas[:, None] * _RULE.weights[None, :]
    uq = interpolate_at_quad(mesh, values)
    l2sq = float(np.sum(weights * (uq - exact_vals) ** 2))
    diff = gradients[:, None, :] - exact_grads
    semisq = float(np.sum(weights * np.einsum("tqd,tqd->tq", diff, diff)))
    return np.sqrt(l2sq), np.sqrt(l2sq + semisq)


def error_norms(mesh, state: StatePair, problem: ProblemSpec, surface=None,
                geo=None, ctx: Optional[ExactContext] = None) -> ErrorRecord:
    """L2 and full H1 errors of u and w by quadrature over the discrete surface.

    Exact fields are evaluated at quadrature points lifted onto the exact
    surface; the discrete gradients are the element-wise constants.
    """
    geo = geo or element_geometry(mesh)
    if ctx is None:
        ctx = exact_context(mesh, surface, problem, geo)
    gu = element_gradients(mesh, state.u, geo)
    gw = element_gradients(mesh, state.w, geo)
    l2_u, h1_u = _norms(mesh, geo, state.u, ctx.u_values, gu, ctx.u_gradients)
    l2_w, h1_w = _norms(mesh, geo, state.w, ctx.w_values, gw, ctx.w_gradients)
    return ErrorRecord(time=state.t, l2_u=l2_u, h1_u=h1_u, l2_w=l2_w, h1_w=h1_w)


def gl_energy(mesh, u: np.ndarray, eps: float, scaled: bool = True,
              potential=double_well_potential, geo=None) -> float:
    """Ginzburg-Landau energy of the P1 function with nodal values u.

    scaled=True integrates eps/2 |grad u|^2 + F(u)/eps; scaled=False the
    plain density 1/2 |grad u|^2 + F(u).
    """
    if eps <= 0.0:
        raise ConfigError("eps must be positive")
    geo = geo or element_geometry(mesh)
    weights = 2.0 * geo.areas[:, None] * _RULE.weights[None, :]
    grads = element_gradients(mesh, u, geo)
    grad_sq = np.einsum("td,td->t", grads, grads)
    uq = interpolate_at_quad(mesh, u)
    c_grad, c_pot = (eps / 2.0, 1.0 / eps) if scaled else (0.5, 1.0)
    gradient_part = c_grad * float(np.sum(geo.areas * grad_sq))
    potential_part = c_pot * float(np.sum(weights * potential(uq)))
    return gradient_part + potential_part


def total_mass(M, u: np.ndarray) -> float:
    """Integral of the P1 function: ones^T M u."""
    return float((M @ np.asarray(u, dtype=float)).sum())


@dataclass(frozen=True)
class EocTable:
    """Errors against steps with pairwise experimental orders."""

    steps: tuple[float, ...]
    errors: tuple[float, ...]
    orders: tuple[Optional[float], ...]   # None for the first row / saturated rows

    def rows(self):
        return list(zip(self.steps, self.errors, self.orders))


def eoc(errors: Sequence[float], steps: Sequence[float]) -> EocTable:
    """Pairwise log-ratio convergence orders.

    Zero errors are reported as saturated (order None).  Steps must be
    positive and strictly decreasing.
    """
    if len(errors) != len(steps) or len(errors) < 2:
        raise ConfigError("need equally many errors and steps, at least two")
    steps = [float(s) for s in steps]
    errors = [float(e) for e in errors]
    if any(s <= 0.0 for s in steps) or any(e < 0.0 for e in errors):
        raise ConfigError("steps must be positive and errors non-negative")
    if any(b >= a for a, b in zip(steps, steps[1:])):
        raise ConfigError("steps must be strictly decreasing")
    orders: list[Optional[float]] = [None]
    for i in range(1, len(errors)):
        if errors[i] == 0.0 or errors[i - 1] == 0.0:
            orders.append(None)
        else:
            orders.append(float(np.log(errors[i - 1] / errors[i])
                                / np.log(steps[i - 1] / steps[i])))
    return EocTable(steps=tuple(steps), errors=tuple(errors), orders=tuple(orders))


def regime_order(table: EocTable, floor_factor: float = 5.0) -> float:
    """Representative order over the rows not yet saturated by another error.

    Rows whose error is within floor_factor of the smallest error of the
    sweep sit on the plateau where a different discretisation error
    dominates; the median of the remaining pairwise orders is reported.
    Falls back to the first pair when everything is saturated.
    """
    finite = [e for e in table.errors if e > 0.0]
    if not finite:
        raise ConfigError("all errors vanish; no order to estimate")
    floor = min(finite)
    picked = [o for i, o in enumerate(table.orders)
              if o is not None
              and table.errors[i] >= floor_factor * floor
              and table.errors[i - 1] >= floor_factor * floor]
    if not picked:
        picked = [o for o in table.orders if o is not None][:1]
    return float(np.median(picked))


def write_error_csv(records: Sequence[ErrorRecord], path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(ERROR_CSV_HEADER)
        for r in records:
            writer.writerow([repr(float(v)) for v in
                             (r.time, r.l2_u, r.h1_u, r.l2_w, r.h1_w)])


def write_eoc_csv(table: EocTable, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(EOC_CSV_HEADER)
        for step, err, order in table.rows():
            writer.writerow([repr(float(step)), repr(float(err)),
                             "" if order is None else repr(float(order))])
