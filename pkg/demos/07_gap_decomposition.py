"""
Decomposing a gap in usage rates
================================

Two survey waves differ both in composition and in coefficients. The twofold
decomposition splits the gap in weighted mean predicted rates into the two
parts, then by variable.
"""
from svylasso import ModelSpec, encode_design, simulate_survey
from svylasso.cohort import fit_logit, oaxaca_blinder
from svylasso.dataset import SimulationConfig, StratumConfig

spec = ModelSpec("y", "Yes", ("age", "education"), {"age": "young", "education": "low"},
                 levels={"age": ("young", "middle", "old"), "education": ("low", "high")})


def wave(seed, old_share, theta):
    cfg = SimulationConfig(
        strata=(StratumConfig("s1", 2000, 0.02), StratumConfig("s2", 1000, 0.05)),
        categories={"age": {"young": 0.4 - old_share / 2, "middle": 0.6 - old_share / 2, "old": old_share},
                    "education": {"low": 0.5, "high": 0.5}},
        theta=theta, seed=seed)
    return encode_design(simulate_survey(cfg), spec)


A = wave(1, 0.2, {"(Intercept)": 0.0, "age=old": -1.5, "education=high": 0.8})
B = wave(2, 0.35, {"(Intercept)": 0.6, "age=old": -1.0, "education=high": 0.8})
res = oaxaca_blinder(fit_logit(B), A, B, reference="B")
print(f"gap {res.difference:+.4f} (se {res.se['difference']:.4f})")
print(f"characteristics {res.characteristics_part:+.4f}  coefficients {res.coefficients_part:+.4f}")
for name, (c, k) in res.per_regressor.items():
    print(f"  {name:>12}: {c:+.4f} {k:+.4f}")
print(res.note)
