import numpy as np
import pytest
from hypothesis import given, strategies as st

from svylasso.dataset import (
    DesignMatrix, ModelSpec, SimulationConfig, StratumConfig, SurveyDataset, decode_rows,
    encode_design, expand_interactions, load_spec, load_table, simulate_survey, write_table,
)
from svylasso.errors import (
    ConfigError, DegenerateVariableError, DesignStateError, EncodingError, SchemaError,
    ValidationError,
)

from conftest import SURVEY_SPEC, survey_config


def small_dataset():
    cols = {
        "y": ["Yes", "No", "Yes", "No", "Yes", "No"],
        "a": ["a0", "a1", "a2", "a1", "a0", "a2"],
        "b": ["b0", "b1", "b0", "b1", "b1", "b0"],
    }
    return SurveyDataset(cols, np.array([1.0, 2.0, 1.0, 3.0, 1.0, 2.0]))


SPEC = ModelSpec("y", "Yes", ("a", "b"), {"a": "a0", "b": "b0"})


def test_encode_columns_and_values():
    d = encode_design(small_dataset(), SPEC)
    assert d.names == ["(Intercept)", "a=a1", "a=a2", "b=b1"]
    np.testing.assert_array_equal(d.X[:, 1], [0, 1, 0, 1, 0, 0])
    np.testing.assert_array_equal(d.X[:, 3], [0, 1, 0, 1, 1, 0])
    np.testing.assert_array_equal(d.y, [1, 0, 1, 0, 1, 0])
    assert d.negative == "No"


def test_baseline_has_no_column():
    d = encode_design(small_dataset(), SPEC)
    assert "a=a0" not in d.names and "b=b0" not in d.names


def test_decode_roundtrip():
    data = small_dataset()
    d = encode_design(data, SPEC)
    assert decode_rows(d) == [{k: r[k] for k in ("a", "b")} | {"y": r["y"]} for r in data.records]


def test_drop_categories_remove_rows():
    spec = ModelSpec("y", "Yes", ("a", "b"), {"a": "a0", "b": "b0"}, drop_categories={"a": ("a2",)})
    d = encode_design(small_dataset(), spec)
    np.testing.assert_array_equal(d.rows, [0, 1, 3, 4])
    assert d.names == ["(Intercept)", "a=a1", "b=b1"]


def test_single_category_is_degenerate():
    spec = ModelSpec("y", "Yes", ("b",), {"b": "b0"}, drop_categories={"b": ("b1",)})
    with pytest.raises(DegenerateVariableError):
        encode_design(small_dataset(), spec)


def test_unknown_baseline():
    spec = ModelSpec("y", "Yes", ("a",), {"a": "zz"})
    with pytest.raises(EncodingError, match="baseline"):
        encode_design(small_dataset(), spec)


def test_undeclared_level_rejected():
    spec = ModelSpec("y", "Yes", ("a",), {"a": "a0"}, levels={"a": ("a0", "a1")})
    with pytest.raises(EncodingError, match="a2"):
        encode_design(small_dataset(), spec)


def test_missing_variable_schema_error():
    spec = ModelSpec("y", "Yes", ("zz",), {"zz": "0"})
    with pytest.raises(SchemaError):
        encode_design(small_dataset(), spec)


def test_bad_weights():
    with pytest.raises(ValidationError, match="row 2"):
        SurveyDataset({"a": ["x", "y"]}, np.array([1.0, 0.0]))


def test_spec_validation():
    with pytest.raises(ConfigError):
        ModelSpec("y", "Yes", ("a",), {})
    with pytest.raises(ConfigError):
        ModelSpec("y", "Yes", ("a",), {"a": "a0"}, interaction_order=3)


def test_spec_dict_roundtrip(tmp_path):
    spec = ModelSpec("y", "Yes", ("a", "b"), {"a": "a0", "b": "b0"}, interaction_order=2,
                     drop_categories={"a": ("a2",)})
    assert ModelSpec.from_dict(spec.to_dict()) == spec
    import yaml
    p = tmp_path / "m.yaml"
    p.write_text(yaml.safe_dump({"model": spec.to_dict()}))
    assert load_spec(p) == spec


def test_interactions():
    d = encode_design(small_dataset(), SPEC)
    e = expand_interactions(d)
    inter = [c for c in e.columns if c.is_interaction]
    # a1*b1 rows 1 and 3; a2*b1 never happens
    assert [c.name for c in inter] == ["a=a1:b=b1"]
    assert e.dropped_interactions == ("a=a2:b=b1",)
    np.testing.assert_array_equal(e.X[:, e.column_index("a=a1:b=b1")], [0, 1, 0, 1, 0, 0])
    assert e.interaction_children(1) == [4]
    with pytest.raises(DesignStateError):
        expand_interactions(e)


def test_table_roundtrip(tmp_path):
    data = simulate_survey(survey_config(3, n=200))
    p = tmp_path / "d.csv"
    write_table(data, p)
    back = load_table(p, SURVEY_SPEC, strata="stratum")
    for v in SURVEY_SPEC.variables:
        np.testing.assert_array_equal(back.columns[v], data.columns[v])
    np.testing.assert_array_equal(back.weights, data.weights)
    np.testing.assert_array_equal(back.strata, data.strata)


def test_load_table_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("y,a,weight\nYes,a0,1\nNo,a1,-2\n")
    with pytest.raises(ValidationError, match="row 2"):
        load_table(p, ["y", "a"])
    with pytest.raises(SchemaError, match="b"):
        load_table(p, ["y", "b"])


def test_simulation_weights_and_strata():
    data = simulate_survey(survey_config(0, n=400))
    assert data.n == 400
    np.testing.assert_array_equal(np.unique(data.weights), [25.0, 100.0])
    assert set(data.strata) == {"s1", "s2"}


def test_simulation_fraction_zero():
    with pytest.raises(ConfigError, match="fraction"):
        SimulationConfig(strata=(StratumConfig("s", 10, 0.0),), categories={}, theta={}, seed=0)


def test_simulation_reproducible():
    a = simulate_survey(survey_config(11, n=300))
    b = simulate_survey(survey_config(11, n=300))
    for v in a.columns:
        np.testing.assert_array_equal(a.columns[v], b.columns[v])


def test_from_arrays_frozen():
    d = DesignMatrix.from_arrays(np.eye(3)[:, :2], [0, 1, 1])
    with pytest.raises(ValueError):
        d.X[0, 0] = 5


@given(st.integers(0, 10_000))
def test_encoding_partitions_rows(seed):
    """Each variable's dummies plus the baseline indicator sum to one on every row."""
    d = encode_design(simulate_survey(survey_config(seed, n=60)), SURVEY_SPEC)
    for v in d.covariates:
        s = d.X[:, d.main_effect_columns(v)].sum(axis=1)
        assert np.all((s == 0) | (s == 1))
