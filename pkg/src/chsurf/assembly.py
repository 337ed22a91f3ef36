"""Assembly of the time-dependent finite element matrices and load vectors.

Everything is element-local and fully vectorised: per-element data lives
in (T, ...) arrays, and global matrices are accumulated through COO
triplets whose duplicate summation is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError, BlowUpError
from .mesh import SurfaceMesh
from .quadrature import QuadratureRule, degree4_rule

_RULE = degree4_rule()

# Consistent P1 mass matrix on the reference triangle, scaled by area.
_MASS_PATTERN = (np.ones((3, 3)) + np.eye(3)) / 12.0


@dataclass(frozen=True)
class ElementGeometry:
    """Per-element quantities of one mesh snapshot."""

    vertices: np.ndarray   # (T, 3, 3)
    areas: np.ndarray      # (T,)
    gradients: np.ndarray  # (T, 3, 3), tangential P1 basis gradients
    velocity_div: np.ndarray  # (T,), element-wise div of the discrete velocity


def element_geometry(mesh: SurfaceMesh) -> ElementGeometry:
    """Areas, in-plane basis gradients and discrete velocity divergence."""
    p = mesh.nodes[mesh.elements]
    normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    doubled = np.linalg.norm(normals, axis=1)
    if np.any(doubled <= 0.0) or not np.all(np.isfinite(doubled)):
        raise AssemblyError("degenerate element encountered during assembly")
    unit = normals / doubled[:, None]
    areas = 0.5 * doubled
    grads = np.empty_like(p)
    for i in range(3):
        opposite = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
        grads[:, i, :] = np.cross(unit, opposite) / doubled[:, None]
    v = mesh.node_velocity[mesh.elements]
    div = np.einsum("tid,tid->t", v, grads)
    return ElementGeometry(vertices=p, areas=areas, gradients=grads,
                           velocity_div=div)


def _scatter(mesh: SurfaceMesh, local: np.ndarray) -> sp.csr_matrix:
    rows = np.repeat(mesh.elements, 3, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, 3)).ravel()
    n = mesh.n_nodes
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble_mass(mesh: SurfaceMesh,
                  geo: ElementGeometry | None = None) -> sp.csr_matrix:
    """Mass matrix of the current snapshot; symmetric positive definite."""
    geo = geo or element_geometry(mesh)
    local = geo.areas[:, None, None] * _MASS_PATTERN
    return _scatter(mesh, local)


def assemble_stiffness(mesh: SurfaceMesh,
                       geo: ElementGeometry | None = None) -> sp.csr_matrix:
    """Stiffness matrix of tangential gradients; constants span the kernel."""
    geo = geo or element_geometry(mesh)
    local = np.einsum("tid,tjd,t->tij", geo.gradients, geo.gradients, geo.areas)
    return _scatter(mesh, local)


def assemble_mdot(mesh: SurfaceMesh,
                  geo: ElementGeometry | None = None) -> sp.csr_matrix:
    """Time derivative of the mass matrix along the discrete motion.

    Entry-wise this is the mass pattern weighted by the element-wise
    divergence of the interpolated velocity, which is exactly the
    transport derivative of the moving-element integrals.
    """
    if mesh.node_velocity is None:
        raise AssemblyError("mesh snapshot carries no node velocities")
    geo = geo or element_geometry(mesh)
    local = (geo.areas * geo.velocity_div)[:, None, None] * _MASS_PATTERN
    return _scatter(mesh, local)


def quad_points(mesh: SurfaceMesh, rule: QuadratureRule = _RULE) -> np.ndarray:
    """Physical quadrature points, shape (T, Q, 3)."""
    p = mesh.nodes[mesh.elements]
    return np.einsum("qi,tid->tqd", rule.points, p)


def interpolate_at_quad(mesh: SurfaceMesh, values: np.ndarray,
                        rule: QuadratureRule = _RULE) -> np.ndarray:
    """P1 interpolant of nodal values at the quadrature points, (T, Q)."""
    v = np.asarray(values, dtype=float)[mesh.elements]
    return np.einsum("qi,ti->tq", rule.points, v)


def element_gradients(mesh: SurfaceMesh, values: np.ndarray,
                      geo: ElementGeometry | None = None) -> np.ndarray:
    """Element-wise constant tangential gradient of a P1 function, (T, 3)."""
    geo = geo or element_geometry(mesh)
    v = np.asarray(values, dtype=float)[mesh.elements]
    return np.einsum("ti,tid->td", v, geo.gradients)


def load_from_quad_values(mesh: SurfaceMesh, geo: ElementGeometry,
                          values: np.ndarray,
                          rule: QuadratureRule = _RULE) -> np.ndarray:
    """Assemble sum_e int f phi_k from values f(x_q) of shape (T, Q)."""
    weighted = 2.0 * geo.areas[:, None] * rule.weights[None, :] * values
    local = np.einsum("tq,qi->ti", weighted, rule.points)
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.elements.ravel(), local.ravel())
    return out


def assemble_nonlinear_load(mesh: SurfaceMesh, u: np.ndarray, psi,
                            geo: ElementGeometry | None = None) -> np.ndarray:
    """Load vector of psi(u_h, grad u_h) tested against all basis functions.

    psi receives the interpolated values (T, Q) and the element-wise
    gradients broadcast to (T, Q, 3) and must return an array (T, Q).
    """
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise BlowUpError("non-finite nodal values passed to nonlinear load")
    geo = geo or element_geometry(mesh)
    uq = interpolate_at_quad(mesh, u)
    gq = np.broadcast_to(element_gradients(mesh, u, geo)[:, None, :],
                         uq.shape + (3,))
    values = np.asarray(psi(uq, gq), dtype=float)
    if not np.all(np.isfinite(values)):
        raise BlowUpError("nonlinearity returned non-finite values")
    return load_from_quad_values(mesh, geo, values)


def assemble_source_load(mesh: SurfaceMesh, source,
                         geo: ElementGeometry | None = None) -> np.ndarray:
    """Load vector of an ambient source evaluated on the discrete surface.

    `source` is called as source(points, t) with the quadrature points of
    the snapshot and the snapshot time.
    """
    geo = geo or element_geometry(mesh)
    xq = quad_points(mesh)
    values = np.asarray(source(xq, mesh.time), dtype=float)
    if not np.all(np.isfinite(values)):
        raise BlowUpError("source term returned non-finite values")
    return load_from_quad_values(mesh, geo, values)
