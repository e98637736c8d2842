import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_poly(rng, degree=3, scale=1.0):
    """Random polynomial in x, y as a vectorised callable."""
    terms = [(i, j) for i in range(degree + 1) for j in range(degree + 1 - i)]
    coef = rng.normal(scale=scale, size=len(terms))

    def fn(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return sum(c * x**i * y**j for c, (i, j) in zip(coef, terms)) + 0.0 * x

    return fn


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
