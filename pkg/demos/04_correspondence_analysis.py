"""
Multiple correspondence analysis
================================

Indicator and Burt analyses of the same survey variables, with the response
projected as a supplementary variable.
"""
import numpy as np

from svylasso import export_coordinates, mca, simulate_survey
from svylasso.dataset import SimulationConfig, StratumConfig

cfg = SimulationConfig(
    strata=(StratumConfig("s1", 800, 0.02), StratumConfig("s2", 400, 0.05)),
    categories={"age": {"young": 0.3, "middle": 0.4, "old": 0.3},
                "education": {"low": 0.4, "mid": 0.35, "high": 0.25},
                "employment": {"yes": 0.6, "no": 0.4}},
    theta={"(Intercept)": 0.2, "age=old": -1.0, "education=high": 0.9},
    seed=2,
)
data = simulate_survey(cfg)
active = ["age", "education", "employment"]

ind = mca(data, active, supplementary=["y"], d=2)
brt = mca(data, active, supplementary=["y"], d=2, mode="burt")
print("indicator eigenvalues", np.round(ind.eigenvalues, 4))
print("Burt eigenvalues     ", np.round(brt.eigenvalues, 4), "= squares of the above")
print(export_coordinates(ind))
