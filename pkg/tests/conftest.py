import itertools
import math

import numpy as np
import pytest
from scipy.special import entr

from settings import get_settings


@pytest.fixture(autouse=True)
def fresh_settings():
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def all_sequences(n, d):
    """Every sequence over 1..d of length n as rows of an (d**n, n) array."""
    return np.array(list(itertools.product(range(1, d + 1), repeat=n)), dtype=np.int64)


def sequence_entropies(sequences, d):
    n = sequences.shape[1]
    counts = np.stack([(sequences == a).sum(axis=1) for a in range(1, d + 1)], axis=1)
    return entr(counts / n).sum(axis=1) / math.log(2.0)
