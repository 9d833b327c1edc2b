"""
Inference after selection
=========================

Three ways to attach p-values to a Lasso fit: the debiased one-step
estimator (with average marginal effects), the C(alpha) score test and the
one-step estimator on the selected submodel.
"""
import numpy as np

from svylasso import (ModelSpec, c_alpha_ame, c_alpha_coef, debias, encode_design, fit_cv,
                      regression_table, selective_onestep, simulate_survey)
from svylasso.dataset import SimulationConfig, StratumConfig

cfg = SimulationConfig(
    strata=(StratumConfig("s1", 1200, 0.01), StratumConfig("s2", 1200, 0.04)),
    categories={"a": {"a0": 0.4, "a1": 0.3, "a2": 0.3}, "b": {"b0": 0.5, "b1": 0.5},
                "c": {"c0": 0.5, "c1": 0.5}},
    theta={"(Intercept)": -0.3, "a=a1": 0.8, "b=b1": 0.6},
    seed=11,
)
spec = ModelSpec("y", "Yes", ("a", "b", "c"), {"a": "a0", "b": "b0", "c": "c0"})
d = encode_design(simulate_survey(cfg), spec)
res = fit_cv(d, seed=11)

db = debias(res, d)
for j, a, se in zip(db.ame_columns, db.ame_tilde, db.ame_se):
    print(f"AME {d.names[j]:>6}: {a:+.4f} ({se:.4f})")

# The coefficient and AME versions of the C(alpha) test coincide when the
# null sets the AME to zero.
j = d.column_index("c=c1")
print(c_alpha_coef(d, j, lam=res.lam).statistic, c_alpha_ame(d, j, lam=res.lam).statistic)

ca = {k: c_alpha_coef(d, k, lam=res.lam) for k in range(1, d.X.shape[1])}
si = selective_onestep(res, d)
print(regression_table(d, res, debiased=db, c_alpha=ca, selective=si).render())
print("selective methods:", dict(zip(si.names, si.methods)))
print("95% intervals:\n", np.round(db.conf_int(), 3))
