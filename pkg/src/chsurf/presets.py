"""Closed-form surfaces and fields used by the shipped experiments.

Every preset supplies full closed-form derivatives, so the generic
finite-difference machinery in :mod:`chsurf.geometry` is only needed for
nested quantities (e.g. Laplacians of chemical potentials).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .geometry import AmbientField, LevelSetSurface

TWO_PI = 2.0 * np.pi


def oscillating_ellipsoid(radius: float = 1.0, amplitude: float = 0.25,
                          frequency: float = 1.0) -> LevelSetSurface:
    """Sphere of the given radius breathing into an ellipsoid and back.

    Zero level set of d(x, t) = x1^2 / a(t) + x2^2 + x3^2 - radius^2 with
    a(t) = 1 + amplitude * sin(2 pi frequency t).  The x1 semi-axis is
    radius * sqrt(a(t)); the motion is time-periodic with period
    1 / frequency.
    """
    r2 = radius * radius

    def a(t):
        return 1.0 + amplitude * np.sin(TWO_PI * frequency * t)

    def a_dot(t):
        return amplitude * TWO_PI * frequency * np.cos(TWO_PI * frequency * t)

    def d(x, t):
        x = np.asarray(x, dtype=float)
        return (x[..., 0] ** 2 / a(t) + x[..., 1] ** 2 + x[..., 2] ** 2 - r2)

    def grad_d(x, t):
        x = np.asarray(x, dtype=float)
        g = 2.0 * x.copy()
        g[..., 0] /= a(t)
        return g

    def dt_d(x, t):
        x = np.asarray(x, dtype=float)
        return -(a_dot(t) / a(t) ** 2) * x[..., 0] ** 2

    def hess_d(x, t):
        x = np.asarray(x, dtype=float)
        h = np.zeros(x.shape + (3,))
        h[..., 0, 0] = 2.0 / a(t)
        h[..., 1, 1] = 2.0
        h[..., 2, 2] = 2.0
        return h

    diameter = 2.0 * radius * np.sqrt(1.0 + abs(amplitude))
    return LevelSetSurface(d, grad_d, dt_d, hess_d, diameter=diameter,
                           name=f"oscillating ellipsoid (R={radius})")


def static_sphere(radius: float = 1.0) -> LevelSetSurface:
    """Stationary sphere |x| = radius, as the zero set of |x|^2 - radius^2."""
    return oscillating_ellipsoid(radius=radius, amplitude=0.0, frequency=1.0)


def expanding_sphere(rate: float, radius0: float = 1.0) -> LevelSetSurface:
    """Sphere with exponentially growing radius, Rdot / R = rate."""
    def radius(t):
        return radius0 * np.exp(rate * t)

    def d(x, t):
        x = np.asarray(x, dtype=float)
        return np.einsum("...i,...i->...", x, x) - radius(t) ** 2

    def grad_d(x, t):
        return 2.0 * np.asarray(x, dtype=float)

    def dt_d(x, t):
        r = radius(t)
        return np.full(np.asarray(x).shape[:-1], -2.0 * rate * r * r)

    def hess_d(x, t):
        x = np.asarray(x, dtype=float)
        h = np.zeros(x.shape + (3,))
        h[..., 0, 0] = h[..., 1, 1] = h[..., 2, 2] = 2.0
        return h

    return LevelSetSurface(d, grad_d, dt_d, hess_d, diameter=2.0 * radius0,
                           name=f"expanding sphere (rate={rate})")


def decaying_xy_field() -> AmbientField:
    """u(x, t) = exp(-6 t) x1 x2, the classical manufactured solution.

    Restricted to the unit sphere this is a degree-2 spherical harmonic,
    so the exponent matches the eigenvalue l(l+1) = 6.
    """
    def value(x, t):
        x = np.asarray(x, dtype=float)
        return np.exp(-6.0 * t) * x[..., 0] * x[..., 1]

    def grad(x, t):
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.shape)
        s = np.exp(-6.0 * t)
        g[..., 0] = s * x[..., 1]
        g[..., 1] = s * x[..., 0]
        return g

    def dt(x, t):
        return -6.0 * value(x, t)

    def hess(x, t):
        x = np.asarray(x, dtype=float)
        h = np.zeros(x.shape + (3,))
        s = np.exp(-6.0 * t)
        h[..., 0, 1] = s
        h[..., 1, 0] = s
        return h

    return AmbientField(value, grad=grad, dt=dt, hess=hess, name="exp(-6t) x1 x2")


def cosine_product_field(amplitude: float = 0.1) -> AmbientField:
    """u0(x) = amplitude * cos(2 pi x1) cos(2 pi x2) cos(2 pi x3)."""
    k = TWO_PI

    def value(x, t):
        x = np.asarray(x, dtype=float)
        return amplitude * np.cos(k * x[..., 0]) * np.cos(k * x[..., 1]) * np.cos(k * x[..., 2])

    def grad(x, t):
        x = np.asarray(x, dtype=float)
        c = [np.cos(k * x[..., i]) for i in range(3)]
        s = [np.sin(k * x[..., i]) for i in range(3)]
        g = np.empty(x.shape)
        g[..., 0] = -amplitude * k * s[0] * c[1] * c[2]
        g[..., 1] = -amplitude * k * c[0] * s[1] * c[2]
        g[..., 2] = -amplitude * k * c[0] * c[1] * s[2]
        return g

    def dt(x, t):
        return np.zeros(np.asarray(x).shape[:-1])

    def hess(x, t):
        x = np.asarray(x, dtype=float)
        c = [np.cos(k * x[..., i]) for i in range(3)]
        s = [np.sin(k * x[..., i]) for i in range(3)]
        h = np.empty(x.shape + (3,))
        ak2 = amplitude * k * k
        h[..., 0, 0] = -ak2 * c[0] * c[1] * c[2]
        h[..., 1, 1] = -ak2 * c[0] * c[1] * c[2]
        h[..., 2, 2] = -ak2 * c[0] * c[1] * c[2]
        h[..., 0, 1] = h[..., 1, 0] = ak2 * s[0] * s[1] * c[2]
        h[..., 0, 2] = h[..., 2, 0] = ak2 * s[0] * c[1] * s[2]
        h[..., 1, 2] = h[..., 2, 1] = ak2 * c[0] * s[1] * s[2]
        return h

    return AmbientField(value, grad=grad, dt=dt, hess=hess,
                        name="cosine product")


def odd_polynomial_field(scale: float = 225.0 / 56693.0) -> AmbientField:
    """u0(x) = scale * (x1 + x1^2 x2^2 x3), the large-sphere initial datum."""
    def value(x, t):
        x = np.asarray(x, dtype=float)
        return scale * (x[..., 0] + x[..., 0] ** 2 * x[..., 1] ** 2 * x[..., 2])

    def grad(x, t):
        x = np.asarray(x, dtype=float)
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        g = np.empty(x.shape)
        g[..., 0] = scale * (1.0 + 2.0 * x1 * x2 ** 2 * x3)
        g[..., 1] = scale * (2.0 * x1 ** 2 * x2 * x3)
        g[..., 2] = scale * (x1 ** 2 * x2 ** 2)
        return g

    def dt(x, t):
        return np.zeros(np.asarray(x).shape[:-1])

    def hess(x, t):
        x = np.asarray(x, dtype=float)
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        h = np.zeros(x.shape + (3,))
        h[..., 0, 0] = scale * 2.0 * x2 ** 2 * x3
        h[..., 1, 1] = scale * 2.0 * x1 ** 2 * x3
        h[..., 0, 1] = h[..., 1, 0] = scale * 4.0 * x1 * x2 * x3
        h[..., 0, 2] = h[..., 2, 0] = scale * 2.0 * x1 * x2 ** 2
        h[..., 1, 2] = h[..., 2, 1] = scale * 2.0 * x1 ** 2 * x2
        return h

    return AmbientField(value, grad=grad, dt=dt, hess=hess,
                        name="odd polynomial")


SURFACE_KINDS = ("oscillating_ellipsoid", "static_sphere")
INITIAL_FIELDS = ("from_exact", "cosine_product", "odd_polynomial")
MANUFACTURED_FIELDS = ("none", "decaying_xy")


def make_surface(kind: str, radius: float, amplitude: float,
                 frequency: float) -> LevelSetSurface:
    if kind == "oscillating_ellipsoid":
        return oscillating_ellipsoid(radius, amplitude, frequency)
    if kind == "static_sphere":
        return static_sphere(radius)
    raise ConfigError(f"unknown surface kind {kind!r}; pick one of {SURFACE_KINDS}")


def make_initial_field(name: str, exact_u: AmbientField | None) -> AmbientField:
    if name == "from_exact":
        if exact_u is None:
            raise ConfigError("initial datum 'from_exact' needs a manufactured solution")
        return exact_u
    if name == "cosine_product":
        return cosine_product_field()
    if name == "odd_polynomial":
        return odd_polynomial_field()
    raise ConfigError(f"unknown initial datum {name!r}; pick one of {INITIAL_FIELDS}")
