import numpy as np
import pytest
from scipy.optimize import nnls

from conftest import dataset, standardized
from thzunmix.baselines import _nnls_columns, nmf_als, nmf_signatures, spa
from thzunmix.metrics import sam_degrees


def test_rank_one_exact(rng):
    X = np.outer(rng.uniform(0.1, 1, 20), rng.uniform(0.1, 1, 8))
    res = nmf_als(X, 1, trials=3, seed=0)
    assert res.D < 1e-6


def test_negative_input_rejected():
    with pytest.raises(ValueError, match="nonnegative"):
        nmf_als(np.array([[1.0, -0.1], [0.2, 0.3]]), 1)


def test_factorizable_instance(rng):
    W0 = rng.uniform(0, 1, (30, 3))
    H0 = rng.uniform(0, 1, (3, 12))
    res = nmf_als(W0 @ H0, 3, trials=10, seed=1)
    assert res.D < 1e-3
    assert np.all(res.W >= 0) and np.all(res.H >= 0)


def test_D_monotone_and_best_of_trials(rng):
    X = rng.uniform(0, 1, (25, 10))
    best = nmf_als(X, 3, trials=4, seed=2, max_iter=200)
    assert np.all(np.diff(best.D_trace) <= 0)
    singles = [nmf_als(X, 3, trials=t + 1, seed=2, max_iter=200).D for t in range(4)]
    assert best.D == min(singles)


def test_batched_nnls_matches_scipy(rng):
    A = rng.normal(size=(20, 4))
    B = rng.normal(size=(20, 15))
    Z = _nnls_columns(A, B)
    ref = np.column_stack([nnls(A, b)[0] for b in B.T])
    np.testing.assert_allclose(Z, ref, atol=1e-9)


def test_nmf_signatures_rescaled():
    X = standardized("ternary").X
    W, H, _ = nmf_signatures(X, 3, trials=2, seed=0, max_iter=100)
    assert W.shape == (X.shape[0], 3)
    assert np.abs(H.sum(axis=0) - 1).max() < 0.2


def test_spa_separable(rng):
    V = rng.uniform(0, 1, (40, 4))
    T = np.hstack([np.eye(4), rng.dirichlet(np.ones(4) * 3, size=10).T])
    perm = rng.permutation(T.shape[1])
    X = (V @ T)[:, perm]
    where = [int(np.flatnonzero(perm == i)[0]) for i in range(4)]
    assert sorted(spa(X, 4)) == sorted(where)


def test_spa_q1_and_rank_collapse(rng):
    X = rng.normal(size=(5, 6))
    assert spa(X, 1) == [int(np.argmax(np.linalg.norm(X, axis=0)))]
    with pytest.raises(ValueError, match="rank collapse"):
        spa(np.outer(np.ones(5), np.arange(1, 7.0)), 2)


def test_spa_scale_and_permutation(rng):
    X = rng.uniform(size=(10, 8))
    a = spa(X, 4)
    assert spa(3.7 * X, 4) == a
    perm = rng.permutation(8)
    b = spa(X[:, perm], 4)
    assert [int(perm[i]) for i in b] == a


def test_spa_fails_without_pures():
    X = standardized("quinary55")
    truth = dataset("quinary55").signatures.S
    chosen = X.X[:, spa(X.X, 5)]
    worst_match = max(min(sam_degrees(c, t) for t in truth.T) for c in chosen.T)
    assert worst_match > 5.0
