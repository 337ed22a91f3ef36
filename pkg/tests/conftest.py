import numpy as np
import pytest

from chsurf.presets import (decaying_xy_field, oscillating_ellipsoid,
                            static_sphere)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def sphere():
    return static_sphere(radius=1.0)


@pytest.fixture
def ellipsoid():
    return oscillating_ellipsoid(radius=1.0, amplitude=0.25, frequency=1.0)


@pytest.fixture
def xy_field():
    return decaying_xy_field()


def random_sphere_points(rng, n, radius=1.0):
    p = rng.normal(size=(n, 3))
    return radius * p / np.linalg.norm(p, axis=1)[:, None]
