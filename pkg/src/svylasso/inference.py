"""Post-selection inference for the survey-weighted logistic Lasso.

Three routes are provided:

* :func:`debias` -- one-step (debiased) estimates ``theta + H^-1 S`` with
  sandwich standard errors, for coefficients and average marginal effects;
* :func:`c_alpha_coef` / :func:`c_alpha_ame` -- C(alpha) score statistics
  orthogonalised against the nuisance directions;
* :func:`selective_onestep` -- one-step update on the selected submodel with
  p-values from a truncated Gaussian that conditions on the Lasso signs.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import log_ndtr
from scipy.stats import chi2, norm

from .dataset import DesignMatrix
from .errors import ContractError, InferenceError
from .logitcore import ame, ame_gradient, likelihood_parts
from .solver import LassoFit, cv_select, fit as lasso_fit

__all__ = [
    "DebiasedEstimates",
    "CAlphaResult",
    "SelectiveEstimates",
    "debias",
    "restricted_estimate",
    "plugin_restricted",
    "c_alpha_coef",
    "c_alpha_ame",
    "selective_onestep",
    "truncated_normal_tails",
    "significance_marks",
    "COND_LIMIT",
    "RIDGE",
]

COND_LIMIT = 1e12
RIDGE = 1e-8


def _collinear_columns(H, names, tol=1e-10):
    s, V = np.linalg.eigh(H)
    null = V[:, s <= tol * max(s.max(), 1.0)]
    if null.size == 0:
        null = V[:, :1]
    load = np.abs(null).max(axis=1)
    return [names[i] for i in np.flatnonzero(load > 1e-3)]


def _stable_inverse(H, names) -> tuple[np.ndarray, bool]:
    """Inverse of a symmetric PSD matrix, ridged when badly conditioned."""
    regularized = False
    cond = np.linalg.cond(H)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        warnings.warn(f"Hessian condition number {cond:.3g} exceeds {COND_LIMIT:g}; "
                      f"adding {RIDGE:g} * identity", RuntimeWarning, stacklevel=3)
        H = H + RIDGE * np.eye(H.shape[0])
        regularized = True
        cond = np.linalg.cond(H)
        if not np.isfinite(cond) or cond > 1e15:
            raise InferenceError(
                f"Hessian is singular; collinear columns: {_collinear_columns(H, names)}")
    try:
        inv = np.linalg.inv(H)
    except np.linalg.LinAlgError:
        raise InferenceError(
            f"Hessian is singular; collinear columns: {_collinear_columns(H, names)}") from None
    return 0.5 * (inv + inv.T), regularized


def _two_sided(z):
    return 2.0 * norm.sf(np.abs(z))


# ---------------------------------------------------------------------------
# Debiased Lasso


@dataclass(frozen=True, eq=False)
class DebiasedEstimates:
    """One-step estimates for all coefficients and for the AME of each dummy.

    ``ame_columns`` lists the design columns whose AMEs are reported, in the
    same order as the ``ame_*`` arrays.
    """

    theta_hat: np.ndarray
    theta_tilde: np.ndarray
    se: np.ndarray
    p_values: np.ndarray
    covariance: np.ndarray
    ame_columns: tuple[int, ...]
    ame_hat: np.ndarray
    ame_tilde: np.ndarray
    ame_se: np.ndarray
    ame_p: np.ndarray
    names: tuple[str, ...]
    regularized: bool = False
    method: str = "debiased"

    def conf_int(self, level: float = 0.95) -> np.ndarray:
        q = norm.ppf(0.5 + level / 2)
        return np.column_stack([self.theta_tilde - q * self.se, self.theta_tilde + q * self.se])


def debias(fit: LassoFit, d: DesignMatrix, *, consistent: bool = True,
           ame_columns: Sequence[int] | None = None) -> DebiasedEstimates:
    """Debiased one-step estimator and its sandwich standard errors.

    ``theta_tilde = theta_hat + H^-1 S`` evaluated at the Lasso solution;
    ``Var(theta_tilde) = H^-1 I H^-1 / n``. The AME one-step adds the
    gradient of the AME times the same Newton step.
    """
    theta = np.asarray(fit.theta, dtype=float)
    parts = likelihood_parts(theta, d)
    Hinv, reg = _stable_inverse(parts.hessian, d.names)
    step = Hinv @ parts.score
    tt = theta + step
    V = Hinv @ parts.information @ Hinv / d.n
    V = 0.5 * (V + V.T)
    se = np.sqrt(np.diag(V))
    pv = _two_sided(tt / se)

    if ame_columns is None:
        ame_columns = d.main_effect_columns() if consistent else list(range(1, d.X.shape[1]))
    a_hat, a_til, a_se = [], [], []
    for j in ame_columns:
        a = ame(theta, d, j, consistent)
        g = ame_gradient(theta, d, j, consistent)
        a_hat.append(a)
        a_til.append(a + g @ step)
        a_se.append(np.sqrt(g @ V @ g))
    a_til, a_se = np.asarray(a_til), np.asarray(a_se)
    return DebiasedEstimates(
        theta_hat=theta, theta_tilde=tt, se=se, p_values=pv, covariance=V,
        ame_columns=tuple(int(j) for j in ame_columns), ame_hat=np.asarray(a_hat),
        ame_tilde=a_til, ame_se=a_se, ame_p=_two_sided(a_til / a_se),
        names=tuple(d.names), regularized=reg)


# ---------------------------------------------------------------------------
# C(alpha)


@dataclass(frozen=True, eq=False)
class CAlphaResult:
    """C(alpha) test of one restriction.

    ``effective_score`` is the orthogonalised score whose sign gives the
    direction of the departure from the null.
    """

    statistic: float
    p_value: float
    target: int
    target_kind: str
    restricted_theta: np.ndarray
    effective_score: float
    lam: float | None
    df: int = 1
    restricted_method: str = "lasso"


def plugin_restricted(fit: LassoFit, pinned: Mapping[int, float]) -> np.ndarray:
    """Lasso estimate with the pinned coordinates overwritten."""
    th = np.array(fit.theta, dtype=float)
    for j, v in pinned.items():
        th[j] = v
    return th


def restricted_estimate(d: DesignMatrix, pinned: Mapping[int, float], lam: float,
                        method: str = "lasso") -> np.ndarray:
    """Refit the Lasso with some coefficients held fixed.

    The pinned columns leave the design and enter as an offset. With
    ``method="post_lasso"`` the selected columns are refit without penalty.
    """
    if method not in ("lasso", "post_lasso"):
        raise ContractError(f"method must be 'lasso' or 'post_lasso', got {method!r}")
    pinned = {int(j): float(v) for j, v in pinned.items()}
    if 0 in pinned:
        raise ContractError("the intercept cannot be pinned")
    keep = [k for k in range(d.X.shape[1]) if k not in pinned]
    offset = np.zeros(d.n)
    for j, v in pinned.items():
        offset += v * d.X[:, j]
    sub = _subdesign(d, keep)
    res = lasso_fit(sub, lam, offset=offset)
    th_sub = res.theta
    if method == "post_lasso":
        sel = [0, *res.active_set]
        post = lasso_fit(_subdesign(sub, sel), 0.0, offset=offset)
        th_sub = np.zeros_like(res.theta)
        th_sub[sel] = post.theta
    out = np.empty(d.X.shape[1])
    out[keep] = th_sub
    for j, v in pinned.items():
        out[j] = v
    return out


def _subdesign(d: DesignMatrix, keep: Sequence[int]) -> DesignMatrix:
    from dataclasses import replace
    keep = list(keep)
    cols = tuple(d.columns[k] for k in keep)
    # parents are not meaningful in a column subset
    cols = tuple(replace(c, parents=()) if c.is_interaction else c for c in cols)
    return replace(d, X=d.X[:, keep], columns=cols)


def _default_lambda(d: DesignMatrix, lam, seed):
    if lam is not None:
        return float(lam)
    return cv_select(d, 10, "auc", seed=seed).chosen_lambda


def c_alpha_coef(d: DesignMatrix, j: int, theta01: float = 0.0, *, lam: float | None = None,
                 restricted: str = "lasso", restricted_theta=None,
                 seed: int = 0) -> CAlphaResult:
    """C(alpha) statistic for ``H0: theta_j = theta01``.

    The nuisance parameters are re-estimated by the Lasso (or post-Lasso)
    at ``lam`` with ``theta_j`` held at ``theta01``; ``lam=None`` picks it
    by 10-fold AUC cross-validation on the full design.
    """
    if not 1 <= j < d.X.shape[1]:
        raise ContractError(f"slope index must lie in [1, {d.X.shape[1] - 1}], got {j}")
    if restricted_theta is None:
        lam = _default_lambda(d, lam, seed)
        th = restricted_estimate(d, {j: theta01}, lam, restricted)
    else:
        th = np.asarray(restricted_theta, dtype=float)
        if th[j] != theta01:
            raise ContractError("restricted_theta must satisfy the null restriction")
    parts = likelihood_parts(th, d)
    S, I, H = parts.score, parts.information, parts.hessian
    rest = [k for k in range(H.shape[0]) if k != j]
    H22 = H[np.ix_(rest, rest)]
    H21 = H[rest, j]
    try:
        proj = np.linalg.solve(H22, H21)
    except np.linalg.LinAlgError:
        raise InferenceError(
            f"nuisance Hessian is singular; collinear columns: "
            f"{_collinear_columns(H22, [d.names[k] for k in rest])}") from None
    D = np.zeros(H.shape[0])
    D[j] = 1.0
    D[rest] = -proj
    s_eff = float(D @ S)
    var = float(D @ I @ D)
    if var <= 0:
        raise InferenceError("effective score has zero variance")
    stat = d.n * s_eff ** 2 / var
    return CAlphaResult(statistic=stat, p_value=float(chi2.sf(stat, 1)), target=j,
                        target_kind="coefficient", restricted_theta=th, effective_score=s_eff,
                        lam=lam, restricted_method=restricted)


def c_alpha_ame(d: DesignMatrix, j: int, *, lam: float | None = None, restricted: str = "lasso",
                restricted_theta=None, consistent: bool = True, seed: int = 0) -> CAlphaResult:
    """C(alpha) statistic for ``H0: AME_j = 0`` using the AME gradient.

    The restricted estimate zeroes ``theta_j`` and, under consistent
    counterfactuals, every interaction built on column ``j``, which makes the
    AME exactly zero.
    """
    if restricted_theta is None:
        lam = _default_lambda(d, lam, seed)
        pinned = {j: 0.0}
        if consistent:
            pinned.update({k: 0.0 for k in d.interaction_children(j)})
        th = restricted_estimate(d, pinned, lam, restricted)
    else:
        th = np.asarray(restricted_theta, dtype=float)
    psi = ame(th, d, j, consistent)
    if abs(psi) > 1e-12:
        raise ContractError(f"restricted estimate has AME {psi:.3g}, not 0")
    parts = likelihood_parts(th, d)
    Hinv, _ = _stable_inverse(parts.hessian, d.names)
    g = ame_gradient(th, d, j, consistent)
    a = Hinv @ g
    num = float(a @ parts.score)
    var = float(a @ parts.information @ a)
    if var <= 0:
        raise InferenceError("AME score has zero variance")
    stat = d.n * num ** 2 / var
    return CAlphaResult(statistic=stat, p_value=float(chi2.sf(stat, 1)), target=j,
                        target_kind="ame", restricted_theta=th, effective_score=num,
                        lam=lam, restricted_method=restricted)


# ---------------------------------------------------------------------------
# Selective inference


def _logdiff(la, lb):
    """``log(exp(la) - exp(lb))`` for ``la >= lb``."""
    if lb == -np.inf:
        return la
    return la + np.log1p(-np.exp(lb - la))


def truncated_normal_tails(x: float, a: float, b: float) -> tuple[float, float]:
    """``(P(Z <= x), P(Z > x))`` for a standard normal truncated to ``[a, b]``.

    Differences are taken in log space on whichever tail keeps precision.
    """
    if not a < b:
        raise ValueError("empty truncation interval")
    x = min(max(x, a), b)
    if a + b > 0:  # interval sits in the upper tail: use survival functions
        la, lx, lb = log_ndtr(-a), log_ndtr(-x), log_ndtr(-b)
        den = _logdiff(la, lb)
        cdf = np.exp(_logdiff(la, lx) - den) if la > lx else 0.0
        sf = np.exp(_logdiff(lx, lb) - den) if lx > lb else 0.0
    else:
        la, lx, lb = log_ndtr(a), log_ndtr(x), log_ndtr(b)
        den = _logdiff(lb, la)
        cdf = np.exp(_logdiff(lx, la) - den) if lx > la else 0.0
        sf = np.exp(_logdiff(lb, lx) - den) if lb > lx else 0.0
    return float(cdf), float(sf)


@dataclass(frozen=True, eq=False)
class SelectiveEstimates:
    """Inference on the submodel picked by the Lasso (intercept + active set).

    ``methods`` tags each p-value as ``"truncated-gaussian"`` or ``"naive"``
    (normal reference, used when the truncation interval is degenerate).
    """

    active_indices: tuple[int, ...]
    theta_hat_M: np.ndarray
    theta_tilde_M: np.ndarray
    se: np.ndarray
    p_values: np.ndarray
    naive_p_values: np.ndarray
    intervals: np.ndarray
    methods: tuple[str, ...]
    names: tuple[str, ...]
    note: str = "truncated Gaussian conditioning on active signs (local quadratic approximation)"

    @property
    def indices(self) -> tuple[int, ...]:
        return (0, *self.active_indices)


def selective_onestep(fit: LassoFit, d: DesignMatrix) -> SelectiveEstimates:
    """One-step estimator on the selected submodel with selection-adjusted p-values.

    At a Lasso solution ``S_M(theta_hat) = lam * pf * sign(beta_hat)`` on the
    active slopes, so ``theta_hat_M = theta_tilde_M - lam H_M^-1 s``. The
    event that each active slope keeps its sign is therefore affine in the
    one-step estimator, which is treated as Gaussian with the submodel
    sandwich covariance.
    """
    active = tuple(int(j) for j in fit.active_set)
    if not active:
        raise InferenceError("no selected coefficients")
    M = [0, *active]
    sub = _subdesign(d, M)
    th = np.asarray(fit.theta, dtype=float)[M]
    parts = likelihood_parts(th, sub)
    Hinv, _ = _stable_inverse(parts.hessian, sub.names)
    tt = th + Hinv @ parts.score
    Sigma = Hinv @ parts.information @ Hinv / d.n
    Sigma = 0.5 * (Sigma + Sigma.T)
    se = np.sqrt(np.diag(Sigma))
    naive = _two_sided(tt / se)

    signs = np.sign(th[1:])
    sbar = np.concatenate([[0.0], fit.lam * fit.penalty_factor[list(active)] * signs])
    shift = Hinv @ sbar
    # sign constraints: -s_k * z_k <= -s_k * shift_k for each active slope
    A = np.zeros((len(active), len(M)))
    A[np.arange(len(active)), np.arange(1, len(M))] = -signs
    bvec = -signs * shift[1:]

    pv = np.empty(len(M))
    intervals = np.empty((len(M), 2))
    methods = []
    for k in range(len(M)):
        eta = np.zeros(len(M))
        eta[k] = 1.0
        s2 = float(eta @ Sigma @ eta)
        c = Sigma @ eta / s2
        obs = float(eta @ tt)
        r = tt - c * obs
        Ac = A @ c
        resid = bvec - A @ r
        lo, hi = -np.inf, np.inf
        ok = True
        for ac, rs in zip(Ac, resid):
            if ac > 1e-12:
                hi = min(hi, rs / ac)
            elif ac < -1e-12:
                lo = max(lo, rs / ac)
            elif rs < -1e-10:
                ok = False
        sd = np.sqrt(s2)
        intervals[k] = lo, hi
        if ok and lo < hi and lo - 1e-8 * sd <= obs <= hi + 1e-8 * sd:
            cdf, sf = truncated_normal_tails(obs / sd, lo / sd, hi / sd)
            pv[k] = min(1.0, 2.0 * min(cdf, sf))
            methods.append("truncated-gaussian")
        else:
            pv[k] = naive[k]
            methods.append("naive")
    return SelectiveEstimates(active_indices=active, theta_hat_M=th, theta_tilde_M=tt, se=se,
                              p_values=pv, naive_p_values=naive, intervals=intervals,
                              methods=tuple(methods), names=tuple(sub.names))


def significance_marks(p: float) -> str:
    """Star code used in the regression tables."""
    if not 0.0 <= p <= 1.0:
        raise ContractError(f"p-value must lie in [0, 1], got {p}")
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    if p < 0.1:
        return "·"
    return ""
