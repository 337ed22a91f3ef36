"""Moving level-set geometry and surface differential operators.

A closed surface is described implicitly as the zero set of a scalar
function d(x, t).  Normals, normal velocity and the closest-point style
projection all derive from d and its derivatives.  Differential operators
of ambient scalar fields (surface gradient, Laplace-Beltrami, material
derivative) are evaluated through the standard ambient identities, so
that manufactured right-hand sides can be produced numerically for any
smooth exact solution.

All operations are pure and vectorised: point arguments have shape
(..., 3) and results broadcast accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import GeometryError

# Relative step for central finite differences, in units of the surface
# diameter.  Also used for the nested differences needed by manufactured
# sources (up to fourth derivatives of the exact solution).
FD_STEP_FACTOR = 1e-4

# Gradient magnitudes below this are treated as degenerate.
DEGENERATE_GRADIENT = 1e-12

_EYE3 = np.eye(3)


@dataclass(frozen=True)
class LevelSetSurface:
    """Closed moving surface given as the zero level set of d(x, t).

    d, grad_d and dt_d are required callables of (points, t); hess_d is
    optional and falls back to central differences of grad_d.  The
    diameter sets the length scale of all finite-difference steps.
    """

    d: Callable[[np.ndarray, float], np.ndarray]
    grad_d: Callable[[np.ndarray, float], np.ndarray]
    dt_d: Callable[[np.ndarray, float], np.ndarray]
    hess_d: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    diameter: float = 2.0
    name: str = "level-set surface"

    def fd_step(self) -> float:
        return FD_STEP_FACTOR * self.diameter

    def check_gradient(self, x: np.ndarray, t: float) -> np.ndarray:
        """Return |grad d| at x, raising on degenerate values."""
        g = np.asarray(self.grad_d(x, t), dtype=float)
        mag = np.linalg.norm(g, axis=-1)
        if np.any(mag < DEGENERATE_GRADIENT):
            raise GeometryError(
                f"degenerate level-set gradient on {self.name}: "
                f"min |grad d| = {mag.min():.3e} at t = {t}"
            )
        return mag


@dataclass(frozen=True)
class AmbientField:
    """Scalar field of (point, time) defined in a neighbourhood of the surface.

    Closed-form derivatives are used when supplied; otherwise central
    finite differences with the step handed in by the caller.  The
    differentiation mode is inferred from the supplied evaluators.
    """

    value: Callable[[np.ndarray, float], np.ndarray]
    grad: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    dt: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    name: str = "field"

    @property
    def mode(self) -> str:
        return "closed-form" if self.grad is not None else "finite-difference"

    def __call__(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.asarray(self.value(x, t), dtype=float)

    def gradient(self, x: np.ndarray, t: float, step: float) -> np.ndarray:
        if self.grad is not None:
            return np.asarray(self.grad(x, t), dtype=float)
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        for i in range(3):
            e = step * _EYE3[i]
            out[..., i] = (self.value(x + e, t) - self.value(x - e, t)) / (2.0 * step)
        return out

    def time_derivative(self, x: np.ndarray, t: float, step: float) -> np.ndarray:
        if self.dt is not None:
            return np.asarray(self.dt(x, t), dtype=float)
        return (self(x, t + step) - self(x, t - step)) / (2.0 * step)

    def hessian(self, x: np.ndarray, t: float, step: float) -> np.ndarray:
        if self.hess is not None:
            return np.asarray(self.hess(x, t), dtype=float)
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape + (3,))
        f0 = self(x, t)
        for i in range(3):
            ei = step * _EYE3[i]
            out[..., i, i] = (self(x + ei, t) - 2.0 * f0 + self(x - ei, t)) / step**2
            for j in range(i + 1, 3):
                ej = step * _EYE3[j]
                mixed = (
                    self(x + ei + ej, t)
                    - self(x + ei - ej, t)
                    - self(x - ei + ej, t)
                    + self(x - ei - ej, t)
                ) / (4.0 * step**2)
                out[..., i, j] = mixed
                out[..., j, i] = mixed
        return out

    def check_closed_form(self, x: np.ndarray, t: float, step: float,
                          rtol: float = 1e-6) -> float:
        """Cross-check closed-form gradient against finite differences.

        Returns the worst relative deviation; raises if it exceeds rtol.
        """
        if self.grad is None:
            return 0.0
        exact = np.asarray(self.grad(x, t), dtype=float)
        fd = AmbientField(self.value).gradient(x, t, step)
        scale = np.maximum(np.linalg.norm(exact, axis=-1), 1.0)
        dev = np.linalg.norm(exact - fd, axis=-1) / scale
        worst = float(dev.max())
        if worst > rtol:
            raise GeometryError(
                f"closed-form gradient of {self.name} disagrees with finite "
                f"differences: relative deviation {worst:.3e}"
            )
        return worst


def constant_field(c: float) -> AmbientField:
    def value(x, t):
        return np.full(np.asarray(x).shape[:-1], float(c))

    def zero_vec(x, t):
        return np.zeros(np.asarray(x).shape)

    def zero(x, t):
        return np.zeros(np.asarray(x).shape[:-1])

    def zero_mat(x, t):
        return np.zeros(np.asarray(x).shape + (3,))

    return AmbientField(value, grad=zero_vec, dt=zero, hess=zero_mat,
                        name=f"constant {c}")


# ---------------------------------------------------------------------------
# Normals, velocity, projection
# ---------------------------------------------------------------------------

def normal(surface: LevelSetSurface, x: np.ndarray, t: float) -> np.ndarray:
    """Outward unit normal grad d / |grad d|."""
    g = np.asarray(surface.grad_d(x, t), dtype=float)
    mag = surface.check_gradient(x, t)
    return g / mag[..., None]


def normal_velocity(surface: LevelSetSurface, x: np.ndarray, t: float) -> np.ndarray:
    """Scalar normal speed -dt d / |grad d|."""
    mag = surface.check_gradient(x, t)
    return -np.asarray(surface.dt_d(x, t), dtype=float) / mag


def velocity(surface: LevelSetSurface, x: np.ndarray, t: float) -> np.ndarray:
    """Purely normal material velocity of the surface."""
    return normal_velocity(surface, x, t)[..., None] * normal(surface, x, t)


def project_to_surface(surface: LevelSetSurface, x: np.ndarray, t: float,
                       tol: float = 1e-12, max_iter: int = 20) -> np.ndarray:
    """Move points onto the zero level set by Newton steps along grad d.

    The iterate is y <- y - d(y) grad d(y) / |grad d(y)|^2, started at x.
    Converges quadratically for smooth surfaces; the deviation from the
    exact closest point is of the order of the initial distance squared.
    """
    y = np.array(x, dtype=float, copy=True)
    flat = y.reshape(-1, 3)
    active = np.arange(flat.shape[0])
    for _ in range(max_iter):
        vals = np.asarray(surface.d(flat[active], t), dtype=float)
        done = np.abs(vals) <= tol
        if np.all(done):
            active = active[~done]
            break
        keep = ~done
        active = active[keep]
        vals = vals[keep]
        g = np.asarray(surface.grad_d(flat[active], t), dtype=float)
        g2 = np.einsum("...i,...i->...", g, g)
        if np.any(g2 < DEGENERATE_GRADIENT**2):
            raise GeometryError("degenerate gradient during projection")
        flat[active] -= (vals / g2)[..., None] * g
    else:
        residual = np.abs(np.asarray(surface.d(flat[active], t))).max()
        raise GeometryError(
            f"projection did not converge in {max_iter} iterations "
            f"(residual {residual:.3e})"
        )
    return y


# ---------------------------------------------------------------------------
# Surface differential operators of ambient fields
# ---------------------------------------------------------------------------

def surface_gradient(figure_field: AmbientField, surface: LevelSetSurface,
                     x: np.ndarray, t: float) -> np.ndarray:
    """Tangential part of the ambient gradient at x."""
    step = surface.fd_step()
    g = figure_field.gradient(x, t, step)
    nu = normal(surface, x, t)
    return g - np.einsum("...i,...i->...", g, nu)[..., None] * nu


def normal_gradient_matrix(surface: LevelSetSurface, x: np.ndarray,
                           t: float) -> np.ndarray:
    """Jacobian of the unit normal field, d nu_i / d x_j.

    Uses the closed form (I - nu nu^T) hess d / |grad d| when the Hessian
    of d is available, central differences of the normal field otherwise.
    """
    if surface.hess_d is not None:
        H = np.asarray(surface.hess_d(x, t), dtype=float)
        nu = normal(surface, x, t)
        mag = surface.check_gradient(x, t)
        proj = _EYE3 - nu[..., :, None] * nu[..., None, :]
        return np.einsum("...ik,...kj->...ij", proj, H) / mag[..., None, None]
    step = surface.fd_step()
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (3,))
    for j in range(3):
        e = step * _EYE3[j]
        out[..., :, j] = (normal(surface, x + e, t) - normal(surface, x - e, t)) / (2.0 * step)
    return out


def curvature_trace(surface: LevelSetSurface, x: np.ndarray, t: float) -> np.ndarray:
    """Sum of principal curvatures, computed as the surface divergence of nu."""
    J = normal_gradient_matrix(surface, x, t)
    nu = normal(surface, x, t)
    tr = np.einsum("...ii->...", J)
    return tr - np.einsum("...i,...ij,...j->...", nu, J, nu)


def surface_laplacian(figure_field: AmbientField, surface: LevelSetSurface,
                      x: np.ndarray, t: float) -> np.ndarray:
    """Laplace-Beltrami value via the ambient identity.

    lap_G u = lap u - nu^T (D^2 u) nu - H (nu . grad u), with H the sum of
    principal curvatures.  Valid at points of the surface; at nearby tube
    points it defines the smooth formula extension used for nesting.
    """
    step = surface.fd_step()
    nu = normal(surface, x, t)
    H = curvature_trace(surface, x, t)
    grad = figure_field.gradient(x, t, step)
    normal_slope = np.einsum("...i,...i->...", grad, nu)
    if figure_field.hess is not None:
        hess = figure_field.hessian(x, t, step)
        lap = np.einsum("...ii->...", hess)
        bend = np.einsum("...i,...ij,...j->...", nu, hess, nu)
    else:
        # Only lap u and the second derivative along nu are needed, so a
        # 9-point directional stencil replaces the full Hessian.
        x = np.asarray(x, dtype=float)
        f0 = figure_field(x, t)
        lap = np.zeros(f0.shape)
        for i in range(3):
            e = step * _EYE3[i]
            lap += figure_field(x + e, t) - 2.0 * f0 + figure_field(x - e, t)
        lap /= step**2
        dn = step * nu
        bend = (figure_field(x + dn, t) - 2.0 * f0 + figure_field(x - dn, t)) / step**2
    return lap - bend - H * normal_slope


def material_derivative(figure_field: AmbientField, surface: LevelSetSurface,
                        x: np.ndarray, t: float) -> np.ndarray:
    """Time derivative along surface trajectories: dt u + v . grad u."""
    step = surface.fd_step()
    v = velocity(surface, x, t)
    grad = figure_field.gradient(x, t, step)
    return figure_field.time_derivative(x, t, step) + np.einsum(
        "...i,...i->...", v, grad)


def surface_divergence_of_velocity(surface: LevelSetSurface, x: np.ndarray,
                                   t: float) -> np.ndarray:
    """Tangential divergence of the surface velocity field.

    Computed as trace((I - nu nu^T) J) with J the Jacobian of v obtained
    by central differences; invariant under rescaling of d.
    """
    step = surface.fd_step()
    x = np.asarray(x, dtype=float)
    J = np.empty(x.shape + (3,))
    for j in range(3):
        e = step * _EYE3[j]
        J[..., :, j] = (velocity(surface, x + e, t) - velocity(surface, x - e, t)) / (2.0 * step)
    nu = normal(surface, x, t)
    return np.einsum("...ii->...", J) - np.einsum("...i,...ij,...j->...", nu, J, nu)


# ---------------------------------------------------------------------------
# Manufactured solutions
# ---------------------------------------------------------------------------

def chemical_potential_field(surface: LevelSetSurface, u_field: AmbientField,
                             g: Callable[[np.ndarray], np.ndarray],
                             eps: float) -> AmbientField:
    """Ambient extension of w = g(u)/eps - eps * lap_G u.

    The value function composes closed-form data of u with the formula
    extension of the Laplace-Beltrami operator, so the resulting field is
    smooth in the tube and can itself be differentiated numerically.
    """
    def value(x, t):
        u = u_field(x, t)
        return g(u) / eps - eps * surface_laplacian(u_field, surface, x, t)

    return AmbientField(value, name=f"chemical potential of {u_field.name}")


def manufactured_source_function(surface: LevelSetSurface,
                                 u_field: AmbientField,
                                 g: Callable[[np.ndarray], np.ndarray],
                                 eps: float) -> Callable[[np.ndarray, float], np.ndarray]:
    """Build b(x, t) = mat u - lap_G w + u (div_G v) as a reusable callable.

    With this b inserted, the pair (u, w) with w = g(u)/eps - eps lap_G u
    satisfies the strong evolution system on the surface.
    """
    w_field = chemical_potential_field(surface, u_field, g, eps)

    def b(x, t):
        out = material_derivative(u_field, surface, x, t)
        out -= surface_laplacian(w_field, surface, x, t)
        out += u_field(x, t) * surface_divergence_of_velocity(surface, x, t)
        return out

    return b


def manufactured_source(problem, surface: LevelSetSurface, x: np.ndarray,
                        t: float) -> np.ndarray:
    """Source term b making problem.exact_u solve the evolution system.

    Requires a gradient-independent nonlinearity g; see
    manufactured_source_function for the construction.
    """
    if getattr(problem, "g_depends_on_gradient", False):
        raise GeometryError(
            "manufactured sources require a gradient-independent nonlinearity")
    u_field = problem.exact_u
    if u_field is None:
        raise GeometryError("manufactured source needs an exact solution field")
    g = problem.scalar_g() if hasattr(problem, "scalar_g") else problem.g
    return manufactured_source_function(surface, u_field, g, problem.eps)(x, t)
