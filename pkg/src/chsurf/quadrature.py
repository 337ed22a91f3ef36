"""Reference-triangle quadrature used by all surface integrals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points and weights on the reference triangle.

    Weights sum to the reference area 1/2; an integral over a flat
    element of area A is approximated by 2 A sum_q w_q f(x_q).
    """

    points: np.ndarray   # (Q, 3) barycentric coordinates
    weights: np.ndarray  # (Q,)


def degree4_rule() -> QuadratureRule:
    """Symmetric 6-point rule, exact for bivariate polynomials up to degree 4."""
    a = 0.445948490915965
    b = 0.091576213509771
    wa = 0.223381589678011 / 2.0
    wb = 0.109951743655322 / 2.0
    points = np.array([
        [1.0 - 2.0 * a, a, a],
        [a, 1.0 - 2.0 * a, a],
        [a, a, 1.0 - 2.0 * a],
        [1.0 - 2.0 * b, b, b],
        [b, 1.0 - 2.0 * b, b],
        [b, b, 1.0 - 2.0 * b],
    ])
    weights = np.array([wa, wa, wa, wb, wb, wb])
    return QuadratureRule(points=points, weights=weights)
