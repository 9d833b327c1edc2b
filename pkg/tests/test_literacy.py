import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from svylasso.cohort import literacy_score, weighted_descriptives, weighted_quantile
from svylasso.errors import ContractError


def test_extremes():
    res = literacy_score([["Yes"] * 10, ["No"] * 10])
    np.testing.assert_array_equal(res.scores, [10, 0])


def test_incomplete_respondents_excluded():
    rows = [["Yes"] * 10, ["Yes"] * 9 + [""], ["No"] * 9 + ["Not stated"], ["Yes"] * 5 + ["No"] * 5]
    res = literacy_score(rows, weights=[1.0, 50.0, 50.0, 3.0])
    np.testing.assert_array_equal(res.complete, [True, False, False, True])
    np.testing.assert_array_equal(res.scores, [10, -1, -1, 5])
    assert res.n_complete == 2
    assert res.stats.mean == pytest.approx((10 * 1 + 5 * 3) / 4)


def test_item_count_contract():
    with pytest.raises(ContractError, match="10 items"):
        literacy_score([["Yes"] * 9])


def test_group_means():
    rows = [["Yes"] * 10, ["No"] * 10, ["Yes"] * 4 + ["No"] * 6, ["Yes"] * 2 + ["No"] * 8]
    res = literacy_score(rows, weights=[1.0, 1.0, 2.0, 2.0], groups={"sex": ["f", "f", "m", "m"]})
    assert res.group_means["sex"] == {"f": 5.0, "m": 3.0}


@given(st.lists(st.lists(st.sampled_from(["Yes", "No"]), min_size=10, max_size=10),
                min_size=1, max_size=20), st.permutations(range(10)))
def test_score_invariant_to_item_order(rows, perm):
    R = np.array(rows, dtype=object)
    a = literacy_score(R).scores
    b = literacy_score(R[:, list(perm)]).scores
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(a, (R == "Yes").sum(axis=1))


def test_weights_one_three():
    assert weighted_descriptives([0.0, 10.0], [1.0, 3.0]).mean == 7.5


def test_constant_vector_degenerate():
    r = weighted_descriptives(np.full(7, 4.0), np.arange(1, 8.0))
    assert r.degenerate and r.stdev == 0 and r.skewness == 0 and r.kurtosis == 0
    assert r.median == 4.0


def test_empty_input():
    with pytest.raises(ContractError):
        weighted_descriptives([])


def test_equal_weights_match_unweighted_oracle():
    x = np.random.default_rng(0).gamma(2.0, 1.5, 100)
    r = weighted_descriptives(x, np.full(100, 2.5))
    assert r.mean == pytest.approx(np.mean(x), abs=1e-10)
    assert r.stdev == pytest.approx(np.std(x), abs=1e-10)
    assert r.skewness == pytest.approx(stats.skew(x), abs=1e-10)
    assert r.kurtosis == pytest.approx(stats.kurtosis(x), abs=1e-10)
    q = np.quantile(x, [0.25, 0.5, 0.75], method="inverted_cdf")
    assert (r.q1, r.median, r.q3) == tuple(q)
    assert r.kurtosis_convention == "excess"


@given(st.lists(st.integers(0, 10), min_size=2, max_size=30), st.data())
def test_integer_weights_equal_replication(values, data):
    w = data.draw(st.lists(st.integers(1, 4), min_size=len(values), max_size=len(values)))
    x = np.asarray(values, float)
    rep = np.repeat(x, w)
    a = weighted_descriptives(x, np.asarray(w, float))
    b = weighted_descriptives(rep)
    assert a.mean == pytest.approx(b.mean, abs=1e-10)
    assert a.stdev == pytest.approx(b.stdev, abs=1e-10)
    assert (a.q1, a.median, a.q3) == (b.q1, b.median, b.q3)
    assert b.median == np.quantile(rep, 0.5, method="inverted_cdf")


def test_left_continuous_quantile():
    # cumulative shares 0.25, 0.5, 1.0: q=0.5 hits the step exactly
    assert weighted_quantile([1.0, 2.0, 3.0], [1.0, 1.0, 2.0], 0.5) == 2.0
    assert weighted_quantile([1.0, 2.0, 3.0], [1.0, 1.0, 2.0], 0.5000001) == 3.0
