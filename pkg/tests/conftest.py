import os

import numpy as np
import pytest
from hypothesis import settings

from svylasso.dataset import DesignMatrix, ModelSpec, SimulationConfig, StratumConfig

settings.register_profile("default", max_examples=40, deadline=None)
settings.register_profile("ci", max_examples=100, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def dummy_design(n=500, p=5, seed=0, beta=None, alpha=-0.3, prev=0.4, weights=(1.0, 3.0)):
    """Independent 0/1 regressors, two-valued weights, logistic response."""
    rng = np.random.default_rng(seed)
    X = (rng.random((n, p)) < prev).astype(float)
    if beta is None:
        beta = np.linspace(1.0, -1.0, p)
    w = rng.choice(np.asarray(weights, dtype=float), size=n)
    eta = alpha + X @ np.asarray(beta, dtype=float)
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    return DesignMatrix.from_arrays(X, y, w)


def survey_config(seed, n=1000, interaction=None, theta=None):
    cats = {
        "a": {"a0": 0.4, "a1": 0.3, "a2": 0.3},
        "b": {"b0": 0.5, "b1": 0.5},
        "c": {"c0": 0.4, "c1": 0.3, "c2": 0.3},
        "d": {"d0": 0.5, "d1": 0.5},
    }
    th = {"(Intercept)": -0.3, "a=a1": 0.8, "a=a2": -0.6, "b=b1": 0.7, "c=c1": -0.5,
          "d=d1": 0.4} if theta is None else dict(theta)
    if interaction is not None:
        th["a=a1:b=b1"] = interaction
    return SimulationConfig(
        strata=(StratumConfig("s1", n // 2, 0.01), StratumConfig("s2", n - n // 2, 0.04)),
        categories=cats, theta=th, seed=seed)


SURVEY_SPEC = ModelSpec("y", "Yes", ("a", "b", "c", "d"),
                        {"a": "a0", "b": "b0", "c": "c0", "d": "d0"})


@pytest.fixture
def design():
    return dummy_design()


@pytest.fixture
def spec():
    return SURVEY_SPEC


# One "ACCEPTANCE <k> PASS|FAIL" line per acceptance criterion, repeated in
# the terminal summary so they are visible without ``-s``.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
