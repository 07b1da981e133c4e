import numpy as np
import pytest

from seqselect import encode_one_hot
from seqselect.selection import CVConfig, _cv_lasso
from seqselect.synthetic import SynthSpec, default_benchmark, generate


@pytest.fixture(scope="session")
def benchmark():
    """The desk-scale planted benchmark shared by the heavier tests."""
    spec = default_benchmark()
    ds, truth = generate(spec)
    dm = encode_one_hot(ds)
    return spec, ds, truth, dm


@pytest.fixture(scope="session")
def benchmark_cv():
    """CV knobs sized so the full acceptance run stays within its budget."""
    return CVConfig(folds=10, seed=0, n_lambdas=30, ratio=1e-2, tol=1e-6)


@pytest.fixture(scope="session")
def benchmark_step1(benchmark, benchmark_cv):
    """The single CV-tuned step-1 LASSO fit reused across selection tests."""
    _, ds, _, dm = benchmark
    return _cv_lasso(dm, ds.outcome, benchmark_cv)


def tiny_dataset(seed=0, n=120, p=10, q=3, m=2, informative=(3, 7),
                 persistence=0.0, peak=0.9):
    """Small planted instance for unit tests; strong signal, fast CV."""
    informative = tuple(j for j in informative if j < p) or (p - 1,)
    theta = {}
    for mi in range(m):
        for j in informative:
            vec = np.full(q, (1 - peak) / (q - 1))
            vec[mi % q] = peak
            theta[(mi, j)] = vec
    spec = SynthSpec(n=n, p=p, q=q, n_classes=m, informative=informative,
                     theta_informative=theta,
                     theta_background=np.full(q, 1.0 / q),
                     markov_persistence=persistence, seed=seed)
    return generate(spec)


@pytest.fixture(scope="session")
def tiny():
    ds, truth = tiny_dataset()
    return ds, truth, encode_one_hot(ds)


@pytest.fixture(scope="session")
def fast_cv():
    return CVConfig(folds=5, seed=0, n_lambdas=15, ratio=1e-2, tol=1e-6)
