import numpy as np
import pytest

from svylasso.cohort import fit_logit, oaxaca_blinder
from svylasso.dataset import ModelSpec, SimulationConfig, StratumConfig, encode_design, simulate_survey
from svylasso.errors import ContractError

# fixed levels keep the column order identical across independently drawn groups
SPEC = ModelSpec("y", "Yes", ("a", "b", "c"), {"a": "a0", "b": "b0", "c": "c0"},
                 levels={"a": ("a0", "a1", "a2"), "b": ("b0", "b1"), "c": ("c0", "c1")})
CATS = {"a": {"a0": 0.4, "a1": 0.3, "a2": 0.3}, "b": {"b0": 0.5, "b1": 0.5},
        "c": {"c0": 0.6, "c1": 0.4}}
THETA = {"(Intercept)": -0.4, "a=a1": 0.7, "a=a2": -0.5, "b=b1": 0.9, "c=c1": -0.6}


def group(seed, n=3000, cats=None, theta=None):
    cfg = SimulationConfig(strata=(StratumConfig("s1", n // 2, 0.01), StratumConfig("s2", n - n // 2, 0.03)),
                           categories=cats or CATS, theta=theta or THETA, seed=seed)
    return encode_design(simulate_survey(cfg), SPEC)


def decompose(dA, dB, reference="B"):
    ref = dB if reference == "B" else dA
    return oaxaca_blinder(fit_logit(ref), dA, dB, reference=reference)


@pytest.mark.parametrize("reference", ["A", "B"])
def test_adding_up(reference):
    dA = group(1)
    dB = group(2, theta={**THETA, "b=b1": 0.3}, cats={**CATS, "c": {"c0": 0.3, "c1": 0.7}})
    r = decompose(dA, dB, reference)
    assert abs(r.characteristics_part + r.coefficients_part - r.difference) <= 1e-12
    assert abs(r.difference - (r.mean_B - r.mean_A)) <= 1e-15
    char = sum(v[0] for v in r.per_regressor.values())
    coef = sum(v[1] for v in r.per_regressor.values())
    assert char == pytest.approx(r.characteristics_part, abs=1e-10)
    assert coef == pytest.approx(r.coefficients_part, abs=1e-10)
    assert r.path == ("(Intercept)", "a", "b", "c")


def test_identical_groups_all_zero():
    d = group(3)
    r = decompose(d, d)
    assert r.difference == 0 and r.characteristics_part == 0 and r.coefficients_part == 0
    for c, k in r.per_regressor.values():
        assert c == 0 and k == 0


def test_prevalence_shift_lands_on_variable():
    dA = group(4, n=20000)
    dB = group(5, n=20000, cats={**CATS, "b": {"b0": 0.2, "b1": 0.8}})
    fit_both = fit_logit(dA)  # same true theta; use one fit for both groups
    r = oaxaca_blinder(fit_both, dA, dB, reference="B", fit_other=fit_both)
    assert r.coefficients_part == 0
    assert r.per_regressor["b"][0] >= 0.95 * r.characteristics_part


def test_coefficient_difference_only():
    dA = group(6)
    dB = group(7, theta={**THETA, "(Intercept)": 0.2, "a=a1": 1.2})
    r = decompose(dA, dB)
    assert abs(r.characteristics_part) < 2 * r.se["characteristics"]
    assert abs(r.coefficients_part) > 2 * r.se["coefficients"]


def test_column_mismatch():
    dA = group(8)
    dB = encode_design(simulate_survey(SimulationConfig(
        strata=(StratumConfig("s", 500, 0.1),), categories={**CATS, "c": {"c0": 0.5, "c2": 0.5}},
        theta=THETA, seed=1)), ModelSpec("y", "Yes", ("a", "b", "c"), SPEC.baselines))
    with pytest.raises(ContractError, match=r"only in A \['c=c1'\], only in B \['c=c2'\]"):
        oaxaca_blinder(fit_logit(dB), dA, dB)


def test_standard_errors_positive():
    r = decompose(group(9), group(10, theta={**THETA, "b=b1": 0.2}))
    assert all(v > 0 for v in r.se.values())
    assert all(a >= 0 and b >= 0 for a, b in r.per_regressor_se.values())
