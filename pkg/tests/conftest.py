import numpy as np
import pytest

from rcassoc import load_mobility


@pytest.fixture(scope="session")
def mobility():
    """The bundled 5x5 father-son status table with global logits."""
    return load_mobility()


@pytest.fixture(scope="session")
def mobility_counts(mobility):
    return np.asarray(mobility.counts, dtype=np.float64)


@pytest.fixture
def random_table():
    """Factory for strictly positive random probability tables.

    The floor keeps entries away from zero so finite-difference checks
    and log-based links stay well conditioned.
    """

    def make(rng, shape, floor=0.05):
        size = shape[0] * shape[1]
        pi = rng.dirichlet(np.ones(size)).reshape(shape)
        pi = pi + floor / size
        return pi / pi.sum()

    return make
