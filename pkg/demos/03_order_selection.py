"""
First- or second-order model?
=============================

Adaptive-Lasso cross-validation compares a main-effects model with one that
adds all pairwise interactions, on a shared fold assignment.
"""
from svylasso import ModelSpec, order_selection, simulate_survey
from svylasso.dataset import SimulationConfig, StratumConfig

cats = {"a": {"a0": 0.4, "a1": 0.3, "a2": 0.3}, "b": {"b0": 0.5, "b1": 0.5},
        "c": {"c0": 0.4, "c1": 0.3, "c2": 0.3}, "d": {"d0": 0.5, "d1": 0.5}}
theta = {"(Intercept)": -0.3, "a=a1": 0.8, "a=a2": -0.6, "b=b1": 0.7, "c=c1": -0.5, "d=d1": 0.4}
spec = ModelSpec("y", "Yes", ("a", "b", "c", "d"), {"a": "a0", "b": "b0", "c": "c0", "d": "d0"})

for label, extra in [("no interaction", {}), ("a1 x b1 = 1.5", {"a=a1:b=b1": 1.5})]:
    cfg = SimulationConfig(strata=(StratumConfig("s1", 1500, 0.01), StratumConfig("s2", 1500, 0.04)),
                           categories=cats, theta={**theta, **extra}, seed=5)
    out = order_selection(simulate_survey(cfg), spec, seed=5)
    print(f"{label:>15}: CV MSE {out.cv_error[1]:.5f} vs {out.cv_error[2]:.5f} "
          f"(se of difference {out.difference_se:.5f}) -> order {out.preferred}")
