"""Twofold Oaxaca-Blinder decomposition of a gap in predicted probabilities.

With reference coefficients ``theta_R`` the gap between the weighted mean
predicted rates of groups B and A splits into

    characteristics = Pbar(X_B, theta_R) - Pbar(X_A, theta_R)
    coefficients    = difference - characteristics

Per-variable contributions come from sequential replacement along the
covariate order of the design. The characteristics path swaps one
variable's columns at a time from A's rows to B's rows. Rows are paired by
rank of the reference predicted probability: both weighted samples are
sorted and their cumulative weight shares are merged, so each pair carries
the overlap of the two rows' weight intervals and both marginals are kept
exactly. The coefficients path swaps one block of ``theta_A`` for
``theta_B`` at a time on the other group's rows.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import expit

from ..dataset import DesignMatrix
from ..errors import ContractError, InferenceError
from ..logitcore import likelihood_parts
from ..solver import fit as lasso_fit

__all__ = ["LogitFit", "DecompositionResult", "fit_logit", "oaxaca_blinder"]


@dataclass(frozen=True, eq=False)
class LogitFit:
    """Unpenalized weighted logit with sandwich covariance."""

    theta: np.ndarray
    cov: np.ndarray
    names: tuple[str, ...]
    n: int

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))


def fit_logit(d: DesignMatrix) -> LogitFit:
    res = lasso_fit(d, 0.0)
    if not res.converged:
        raise InferenceError(f"weighted logit did not converge: {res.message}")
    parts = likelihood_parts(res.theta, d)
    Hinv = np.linalg.inv(parts.hessian)
    V = Hinv @ parts.information @ Hinv / d.n
    return LogitFit(theta=res.theta, cov=0.5 * (V + V.T), names=tuple(d.names), n=d.n)


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    """Aggregate and per-variable parts of the gap ``mean_B - mean_A``.

    ``per_regressor`` maps each variable (and the intercept) to its
    (characteristics, coefficients) contribution; ``se`` and
    ``per_regressor_se`` hold delta-method standard errors. Contributions
    depend on the replacement order, recorded in ``path``.
    """

    mean_A: float
    mean_B: float
    difference: float
    characteristics_part: float
    coefficients_part: float
    per_regressor: Mapping[str, tuple[float, float]]
    se: Mapping[str, float]
    per_regressor_se: Mapping[str, tuple[float, float]]
    reference_group: str
    path: tuple[str, ...] = ()
    note: str = field(default="sequential replacement; per-variable parts depend on path order")


def _wmean(v, w):
    return float(w @ v / w.sum())


def _wmean_var(v, w):
    W = w.sum()
    m = w @ v / W
    return float(np.sum(w ** 2 * (v - m) ** 2) / W ** 2)


def _groups(d: DesignMatrix) -> list[tuple[str, list[int]]]:
    """Column blocks: intercept, then one per covariate in order, then interactions."""
    out = [("(Intercept)", [0])]
    for v in d.covariates:
        cols = d.main_effect_columns(v)
        if cols:
            out.append((v, cols))
    inter = [k for k, c in enumerate(d.columns) if c.is_interaction]
    for k in inter:
        out.append((d.columns[k].name, [k]))
    seen = sorted(k for _, cols in out for k in cols)
    if seen != list(range(d.X.shape[1])):
        # designs built from raw arrays: fall back to one block per column
        out = [("(Intercept)", [0])] + [(d.names[k], [k]) for k in range(1, d.X.shape[1])]
    return out


def _rank_coupling(sA, wA, sB, wB):
    """Pair A and B rows by rank of ``sA``/``sB`` with weight-share overlaps."""
    oA = np.argsort(sA, kind="stable")
    oB = np.argsort(sB, kind="stable")
    cA = np.cumsum(wA[oA]) / wA.sum()
    cB = np.cumsum(wB[oB]) / wB.sum()
    cA[-1] = cB[-1] = 1.0
    grid = np.union1d(cA, cB)
    left = np.concatenate([[0.0], grid[:-1]])
    mid = 0.5 * (left + grid)
    ia = oA[np.searchsorted(cA, mid)]
    ib = oB[np.searchsorted(cB, mid)]
    return ia, ib, grid - left


def _char_path(theta, XA, XB, coupling, groups):
    """Contribution of each block when swapped in order from A rows to B rows."""
    ia, ib, pi = coupling
    Xh = np.array(XA[ia], copy=True)
    XBc = XB[ib]
    vals = [pi @ expit(Xh @ theta)]
    for _, cols in groups[1:]:
        Xh[:, cols] = XBc[:, cols]
        vals.append(pi @ expit(Xh @ theta))
    return np.concatenate([[0.0], np.diff(vals)])


def _coef_path(thA, thB, XO, wO, groups):
    th = thA.copy()
    vals = [_wmean(expit(XO @ th), wO)]
    for _, cols in groups:
        th[cols] = thB[cols]
        vals.append(_wmean(expit(XO @ th), wO))
    return vals[-1] - vals[0], np.diff(vals)


def _decompose(thA, thB, XA, wA, XB, wB, reference, groups, coupling):
    thR = thB if reference == "B" else thA
    XO, wO = (XA, wA) if reference == "B" else (XB, wB)
    mean_A = _wmean(expit(XA @ thA), wA)
    mean_B = _wmean(expit(XB @ thB), wB)
    diff = mean_B - mean_A
    char = _wmean(expit(XB @ thR), wB) - _wmean(expit(XA @ thR), wA)
    char_k = _char_path(thR, XA, XB, coupling, groups)
    coef = diff - char
    _, coef_k = _coef_path(thA, thB, XO, wO, groups)
    return mean_A, mean_B, diff, char, coef, char_k, coef_k


def oaxaca_blinder(fit_ref: LogitFit, data_A: DesignMatrix, data_B: DesignMatrix, *,
                   reference: str = "B", fit_other: LogitFit | None = None,
                   step: float = 1e-5) -> DecompositionResult:
    """Twofold decomposition of ``Pbar_B - Pbar_A`` under reference coefficients.

    Parameters
    ----------
    fit_ref : LogitFit
        Fit on the reference group (``reference`` names which one).
    data_A, data_B : DesignMatrix
        Designs on the same column set.
    fit_other : LogitFit, optional
        Fit on the other group; estimated from its design when omitted.
    step : float
        Relative step for the numerical Jacobian of the per-variable parts.
    """
    if reference not in ("A", "B"):
        raise ContractError(f"reference must be 'A' or 'B', got {reference!r}")
    if data_A.names != data_B.names:
        only_a = [c for c in data_A.names if c not in data_B.names]
        only_b = [c for c in data_B.names if c not in data_A.names]
        raise ContractError(f"column mismatch: only in A {only_a}, only in B {only_b}"
                            + ("" if only_a or only_b else " (order differs)"))
    if tuple(fit_ref.names) != tuple(data_A.names):
        raise ContractError("reference fit was estimated on a different column set")
    other_d = data_A if reference == "B" else data_B
    if fit_other is None:
        fit_other = fit_logit(other_d)
    fA, fB = (fit_other, fit_ref) if reference == "B" else (fit_ref, fit_other)
    groups = _groups(data_A)
    if len(groups) < 2:
        raise ContractError("the design needs at least one covariate besides the intercept")
    XA, wA, XB, wB = data_A.X, data_A.w, data_B.X, data_B.w
    thA, thB = np.asarray(fA.theta, float), np.asarray(fB.theta, float)
    thR = thB if reference == "B" else thA
    # the pairing is fixed at the estimates so the Jacobian below is smooth
    coupling = _rank_coupling(XA @ thR, wA, XB @ thR, wB)
    mean_A, mean_B, diff, char, coef, char_k, coef_k = _decompose(
        thA, thB, XA, wA, XB, wB, reference, groups, coupling)

    # delta method over (theta_A, theta_B); the two fits are independent samples
    p = thA.size

    def stack(tA, tB):
        out = _decompose(tA, tB, XA, wA, XB, wB, reference, groups, coupling)
        return np.concatenate([[out[3], out[4]], out[5], out[6]])

    base = np.concatenate([thA, thB])
    Jac = np.empty((2 + 2 * len(groups), 2 * p))
    for k in range(2 * p):
        h = step * max(1.0, abs(base[k]))
        e = np.zeros(2 * p)
        e[k] = h
        up = stack((base + e)[:p], (base + e)[p:])
        dn = stack((base - e)[:p], (base - e)[p:])
        Jac[:, k] = (up - dn) / (2 * h)
    Vtheta = np.zeros((2 * p, 2 * p))
    Vtheta[:p, :p] = fA.cov
    Vtheta[p:, p:] = fB.cov
    var_theta = np.einsum("ij,jk,ik->i", Jac, Vtheta, Jac)

    # sampling variability of the covariate distributions in each group
    XO, wO = (XA, wA) if reference == "B" else (XB, wB)
    var_char_x = _wmean_var(expit(XA @ thR), wA) + _wmean_var(expit(XB @ thR), wB)
    var_coef_x = _wmean_var(expit(XO @ thB) - expit(XO @ thA), wO)
    var_diff = _wmean_var(data_A.y, wA) + _wmean_var(data_B.y, wB)
    se = {
        "difference": float(np.sqrt(var_diff)),
        "characteristics": float(np.sqrt(var_theta[0] + var_char_x)),
        "coefficients": float(np.sqrt(var_theta[1] + var_coef_x)),
    }
    m = len(groups)
    sd = np.sqrt(np.maximum(var_theta, 0.0))
    per = {name: (float(char_k[g]), float(coef_k[g])) for g, (name, _) in enumerate(groups)}
    per_se = {name: (float(sd[2 + g]), float(sd[2 + m + g])) for g, (name, _) in enumerate(groups)}
    return DecompositionResult(
        mean_A=mean_A, mean_B=mean_B, difference=diff, characteristics_part=char,
        coefficients_part=coef, per_regressor=per, se=se, per_regressor_se=per_se,
        reference_group=reference, path=tuple(name for name, _ in groups))
