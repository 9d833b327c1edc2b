import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svylasso.dataset import SurveyDataset, simulate_survey
from svylasso.errors import ContractError, EncodingError, ValidationError
from svylasso.mca import burt, export_coordinates, indicator, mca, project_supplementary, run_mca

from conftest import survey_config

ACTIVE = ("a", "b", "c", "d")


def survey(seed=0, n=500):
    return simulate_survey(survey_config(seed, n=n))


def standardized_residual(M):
    Z = M / M.sum()
    r, c = Z.sum(1), Z.sum(0)
    return (Z - np.outer(r, c)) / np.sqrt(np.outer(r, c)), r, c


def test_two_by_two_hand_example():
    res = run_mca(np.array([[3.0, 1.0], [1.0, 3.0]]), mode="indicator")
    assert res.dims == 1
    assert res.singular_values[0] == pytest.approx(0.5, abs=1e-14)
    # one nontrivial dimension, categories placed at +/- sqrt(0.25)
    np.testing.assert_allclose(res.F[:, 0], [0.5, -0.5], atol=1e-14)
    np.testing.assert_allclose(res.G[:, 0], [0.5, -0.5], atol=1e-14)
    assert res.total_inertia == pytest.approx(0.25, abs=1e-14)


@pytest.mark.parametrize("weighted", [False, True])
def test_svd_identities(weighted):
    data = survey(1)
    ind = indicator(data, ACTIVE)
    res = run_mca(ind, row_weights=data.weights if weighted else None)
    k = res.dims
    np.testing.assert_allclose(np.sqrt(res.row_masses)[:, None] * res.F,
                               res.P * res.singular_values, atol=1e-10)
    np.testing.assert_allclose(np.sqrt(res.col_masses)[:, None] * res.G,
                               res.Q * res.singular_values, atol=1e-10)
    np.testing.assert_allclose(res.P.T @ res.P, np.eye(k), atol=1e-10)
    np.testing.assert_allclose(res.Q.T @ res.Q, np.eye(k), atol=1e-10)
    assert res.total_inertia == pytest.approx(res.eigenvalues.sum(), abs=1e-10)
    assert np.all(np.diff(res.singular_values) <= 0) and np.all(res.eigenvalues >= 0)


def test_indicator_total_inertia_is_K_over_J_minus_one():
    ind = indicator(survey(2), ACTIVE)
    res = run_mca(ind)
    assert res.total_inertia == pytest.approx(ind.K / ind.J - 1, abs=1e-10)


def test_eckart_young_residual():
    data = survey(3)
    M = indicator(data, ACTIVE).X
    S, _, _ = standardized_residual(M)
    res = run_mca(M, 2)
    full = np.linalg.svd(S, compute_uv=False)
    approx = res.P @ np.diag(res.singular_values) @ res.Q.T
    assert np.linalg.norm(S - approx, 2) == pytest.approx(full[2], abs=1e-10)


@pytest.mark.parametrize("weighted", [False, True])
def test_burt_eigenvalues_are_squared_indicator_eigenvalues(weighted):
    data = survey(4)
    ind_res = mca(data, ACTIVE, d=None, weighted=weighted)
    burt_res = mca(data, ACTIVE, d=None, mode="burt", weighted=weighted)
    assert burt_res.dims == ind_res.dims
    np.testing.assert_allclose(burt_res.eigenvalues, ind_res.eigenvalues ** 2, atol=1e-8)
    # same factors: Burt column scores are indicator scores stretched by delta
    np.testing.assert_allclose(burt_res.G, ind_res.G * ind_res.singular_values, atol=1e-8)


def test_row_permutation():
    data = survey(5, n=200)
    perm = np.random.default_rng(0).permutation(200)
    a = mca(data, ACTIVE, d=3)
    b = mca(data.subset(perm), ACTIVE, d=3)
    # first-seen category order may change, so compare by label
    ga = dict(zip(a.column_labels, a.G))
    for lab, g in zip(b.column_labels, b.G):
        np.testing.assert_allclose(g, ga[lab], atol=1e-10)
    np.testing.assert_allclose(b.F, a.F[perm], atol=1e-10)


def test_indicator_contract():
    data = SurveyDataset({"u": ["x", "y", "x"], "v": ["p", "q", "r"]}, np.ones(3))
    ind = indicator(data, ["u", "v"])
    np.testing.assert_array_equal(ind.X.sum(axis=1), [2, 2, 2])
    assert ind.K_j == {"u": 2, "v": 3} and ind.K == 5 and ind.J == 2
    np.testing.assert_array_equal(ind.X.sum(axis=0), [2, 1, 1, 1, 1])
    assert ind.labels[0] == "u:x"


def test_indicator_missing_named():
    data = SurveyDataset({"u": ["x", "", "x"]}, np.ones(3))
    with pytest.raises(EncodingError, match=r"row 2.*'u'"):
        indicator(data, ["u"])


def test_burt_five_row_crosstab():
    data = SurveyDataset({"u": ["x", "y", "x", "x", "y"], "v": ["p", "p", "q", "p", "q"]},
                         np.ones(5))
    ind = indicator(data, ["u", "v"])
    B = burt(ind)
    # brute-force cross tabulation
    labels = ind.labels
    ref = np.zeros((4, 4))
    for rec in data.records:
        on = [labels.index(f"u:{rec['u']}"), labels.index(f"v:{rec['v']}")]
        for i in on:
            for j in on:
                ref[i, j] += 1
    np.testing.assert_array_equal(B, ref)
    np.testing.assert_array_equal(B, B.T)
    np.testing.assert_array_equal(np.diag(B), ind.X.sum(0))
    np.testing.assert_array_equal(B[:2, 2:].sum(axis=1), ind.X[:, :2].sum(0))


def test_zero_column_rejected():
    with pytest.raises(ValidationError, match="pruned"):
        run_mca(np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_bad_dims():
    with pytest.raises(ContractError):
        run_mca(np.array([[3.0, 1.0], [1.0, 3.0]]), 2)


@pytest.mark.parametrize("mode", ["indicator", "burt"])
def test_supplementary_projection_of_active_category(mode):
    """An active category projected as supplementary lands on its own column score."""
    data = survey(6)
    ind = indicator(data, ACTIVE)
    res = mca(data, ACTIVE, d=3, mode=mode, weighted=True)
    w = data.weights
    k = 2
    if mode == "indicator":
        table = (ind.X[:, [k]]) * w[:, None]
    else:
        table = burt(ind, w)[[k]]
    proj = project_supplementary(res, table, ["dup"])
    np.testing.assert_allclose(proj.supplementary_coords[0], res.G[k], atol=1e-10)


def test_export_coordinates():
    data = survey(7)
    res = mca(data, ("a", "b", "c"), supplementary=("y",), d=2)
    text = export_coordinates(res)
    header = [ln for ln in text.splitlines() if ln.startswith("#")]
    assert any(ln.startswith("# inertia_shares:") for ln in header)
    rows = list(csv.DictReader(io.StringIO("\n".join(ln for ln in text.splitlines()
                                                     if not ln.startswith("#")))))
    assert len(rows) == res.G.shape[0] + 2
    assert [r["role"] for r in rows[-2:]] == ["supplementary"] * 2
    for r, g in zip(rows, res.G):
        assert float(r["x"]) == g[0] and float(r["y"]) == g[1]
    assert {r["label"] for r in rows[-2:]} == {"y:Yes", "y:No"}


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_sign_convention(seed):
    res = mca(survey(seed, n=150), ACTIVE, d=2)
    idx = np.argmax(np.abs(res.G), axis=0)
    assert np.all(res.G[idx, [0, 1]] > 0)
