import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.metrics import silhouette_samples

from svylasso.cohort import elbow, kmeans, silhouette
from svylasso.errors import ContractError


def blobs(seed, n=100, gap=8.0):
    rng = np.random.default_rng(seed)
    M = np.vstack([rng.normal(0, 1, (n, 2)), rng.normal(gap, 1, (n, 2))])
    return M, np.repeat([0, 1], n)


def test_two_blobs_recovered():
    good = 0
    for seed in range(50):
        M, truth = blobs(seed)
        lab = kmeans(M, 2, seed).labels
        agree = max(np.mean(lab == truth), np.mean(lab != truth))
        good += agree == 1.0
    assert good >= 48


def test_separated_blobs_silhouette():
    M, _ = blobs(0)
    assert kmeans(M, 2, 0).silhouette_mean > 0.7


def test_k_equals_n():
    M = np.random.default_rng(0).normal(size=(6, 2))
    assert kmeans(M, 6, 0).inertia == pytest.approx(0.0, abs=1e-20)


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_silhouette_matches_sklearn(seed, k):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(60, 3))
    lab = rng.integers(0, k, 60)
    lab[:k] = np.arange(k)
    np.testing.assert_allclose(silhouette(M, lab), silhouette_samples(M, lab), atol=1e-12)


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_labels_and_silhouette_bounds(seed):
    M = np.random.default_rng(seed).normal(size=(40, 2))
    res = kmeans(M, 3, seed, n_init=3)
    assert set(res.labels) <= {0, 1, 2}
    assert np.all(np.abs(res.silhouette_values) <= 1)


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_elbow_non_increasing(seed):
    M = np.random.default_rng(seed).normal(size=(50, 2))
    curve = elbow(M, range(1, 8), seed, n_init=2)
    vals = [curve[k] for k in sorted(curve)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_seed_determinism():
    M, _ = blobs(1)
    a, b = kmeans(M, 3, 7), kmeans(M, 3, 7)
    np.testing.assert_array_equal(a.labels, b.labels)


def test_weighted_centroids_are_weighted_means():
    M, _ = blobs(2)
    w = np.random.default_rng(2).uniform(0.5, 4, M.shape[0])
    res = kmeans(M, 2, 0, weights=w)
    for c in range(2):
        m = res.labels == c
        np.testing.assert_allclose(res.centroids[c], np.average(M[m], axis=0, weights=w[m]))


def test_contracts():
    with pytest.raises(ContractError):
        kmeans(np.zeros((3, 2)), 4)
    with pytest.raises(ContractError):
        silhouette(np.zeros((3, 2)), [0, 0, 0])
