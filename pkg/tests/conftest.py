import numpy as np
import pytest

from sparsead.problems import random_graph

CORPUS_SIZE = 200


@pytest.fixture(scope="session")
def corpus():
    return [random_graph(seed) for seed in range(CORPUS_SIZE)]


def random_point(g, seed, lo=-0.9, hi=0.9):
    return np.random.default_rng(10_000 + seed).uniform(lo, hi, g.n)
