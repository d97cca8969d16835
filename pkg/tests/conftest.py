import numpy as np
import pytest

from codetrace.learning import Hyperparams, TrainingData
from codetrace.profiles import C_PROFILE, JAVA_PROFILE
from codetrace.vectorize import build_label_graph

FIXTURES = __file__.rsplit("/", 1)[0] + "/fixtures"
CORPUS_ROOT = FIXTURES + "/corpus"
MANIFEST = FIXTURES + "/manifest.tsv"
QUERIES = FIXTURES + "/queries.tsv"


@pytest.fixture
def java():
    return JAVA_PROFILE


@pytest.fixture
def cc():
    return C_PROFILE


def random_instance(rng, d_x=None, d_y=None, m=None, k=None,
                    with_graph=True) -> TrainingData:
    """Small random training instance with a label-induced graph."""
    d_x = d_x or int(rng.integers(2, 7))
    d_y = d_y or int(rng.integers(2, 7))
    m = m or int(rng.integers(2, 7))
    X = rng.standard_normal((d_x, m))
    Y = rng.standard_normal((d_y, m))
    R = (rng.random((d_x, d_y)) < 0.4).astype(np.float64)
    labels = [str(rng.integers(0, 3)) for _ in range(m)]
    graph = build_label_graph(labels)
    if not with_graph:
        zero = np.zeros((2 * m, 2 * m))
        graph.laplacian = zero
    return TrainingData(X=X, Y=Y, R=R, graph=graph)


def random_uv(rng, data: TrainingData, k: int):
    return (rng.standard_normal((data.d_x, k)),
            rng.standard_normal((data.d_y, k)))


def small_hyper(**kw) -> Hyperparams:
    base = dict(k=2, eta=1e-2, max_iter=50, tol=0.0)
    base.update(kw)
    return Hyperparams(**base)
