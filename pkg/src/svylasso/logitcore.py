"""Weighted logistic likelihood calculus.

All quantities are normalised by the row count ``n`` (not the weight total):

    L(theta) = n^-1 sum_i w_i (y_i x_i'theta - log(1 + exp(x_i'theta)))
    S(theta) = n^-1 sum_i w_i x_i (y_i - Lambda_i)
    I(theta) = n^-1 sum_i w_i^2 Lambda_i (1 - Lambda_i) x_i x_i'
    H(theta) = n^-1 sum_i w_i   Lambda_i (1 - Lambda_i) x_i x_i'

``theta`` is a flat array with the intercept first, matching ``X[:, 0] == 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .dataset import DesignMatrix
from .errors import ContractError, ValidationError

__all__ = [
    "LikelihoodParts",
    "logistic_cdf",
    "log1pexp",
    "loglik",
    "score",
    "information",
    "hessian",
    "likelihood_parts",
    "counterfactual_rows",
    "ame",
    "ame_gradient",
]


def logistic_cdf(z):
    """Logistic CDF ``exp(z) / (1 + exp(z))`` without overflow."""
    out = expit(np.asarray(z, dtype=float))
    return out if out.ndim else float(out)


def log1pexp(z):
    """``log(1 + exp(z))`` evaluated with a branch at zero."""
    z = np.asarray(z, dtype=float)
    out = np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    return out if out.ndim else float(out)


def _check(theta, d: DesignMatrix) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (d.X.shape[1],):
        raise ValidationError(
            f"theta has shape {theta.shape}, design has {d.X.shape[1]} columns")
    if not np.all(np.isfinite(theta)):
        raise ValidationError("theta must be finite")
    return theta


def loglik(theta, d: DesignMatrix) -> float:
    theta = _check(theta, d)
    eta = d.X @ theta
    return float(np.sum(d.w * (d.y * eta - log1pexp(eta))) / d.n)


def score(theta, d: DesignMatrix) -> np.ndarray:
    theta = _check(theta, d)
    mu = logistic_cdf(d.X @ theta)
    return d.X.T @ (d.w * (d.y - mu)) / d.n


def _curvature(theta, d, power):
    theta = _check(theta, d)
    mu = logistic_cdf(d.X @ theta)
    v = d.w ** power * mu * (1.0 - mu)
    M = (d.X * v[:, None]).T @ d.X / d.n
    return 0.5 * (M + M.T)


def information(theta, d: DesignMatrix) -> np.ndarray:
    return _curvature(theta, d, 2)


def hessian(theta, d: DesignMatrix) -> np.ndarray:
    """Negative Hessian of :func:`loglik` (positive semidefinite)."""
    return _curvature(theta, d, 1)


@dataclass(frozen=True)
class LikelihoodParts:
    loglik: float
    score: np.ndarray
    information: np.ndarray
    hessian: np.ndarray


def likelihood_parts(theta, d: DesignMatrix) -> LikelihoodParts:
    """All four quantities from a single pass over the rows."""
    theta = _check(theta, d)
    eta = d.X @ theta
    mu = logistic_cdf(eta)
    v = mu * (1.0 - mu)
    Xw = d.X * (d.w * v)[:, None]
    H = Xw.T @ d.X / d.n
    I = (Xw * d.w[:, None]).T @ d.X / d.n
    return LikelihoodParts(
        loglik=float(np.sum(d.w * (d.y * eta - log1pexp(eta))) / d.n),
        score=d.X.T @ (d.w * (d.y - mu)) / d.n,
        information=0.5 * (I + I.T),
        hessian=0.5 * (H + H.T),
    )


# ---------------------------------------------------------------------------
# Average marginal effects


def counterfactual_rows(d: DesignMatrix, j: int, consistent: bool = True):
    """Design rows with dummy ``j`` switched on and off.

    With ``consistent=True`` the other dummies of the same variable are set
    to zero in both copies (the contrast is level ``j`` versus the baseline)
    and every interaction column with ``j`` as a parent is recomputed from
    its parents. With ``consistent=False`` only column ``j`` is toggled.
    """
    if not 0 <= j < d.X.shape[1]:
        raise ContractError(f"column index {j} out of range")
    col = d.columns[j]
    if col.is_intercept:
        raise ContractError("the intercept has no marginal effect")
    xj = d.X[:, j]
    if not np.all((xj == 0.0) | (xj == 1.0)):
        raise ContractError(f"column {col.name!r} is not a 0/1 dummy")
    X1 = np.array(d.X, copy=True)
    X0 = np.array(d.X, copy=True)
    X1[:, j] = 1.0
    X0[:, j] = 0.0
    if not consistent:
        return X1, X0
    if col.is_interaction:
        raise ContractError(
            f"column {col.name!r} is an interaction; consistent counterfactuals need a main effect")
    siblings = [k for k in d.main_effect_columns(col.variables[0]) if k != j]
    X1[:, siblings] = 0.0
    X0[:, siblings] = 0.0
    for Xc in (X1, X0):
        for k, c in enumerate(d.columns):
            if c.is_interaction:
                a, b = c.parents
                Xc[:, k] = Xc[:, a] * Xc[:, b]
    return X1, X0


def ame(theta, d: DesignMatrix, j: int, consistent: bool = True) -> float:
    """Weighted average marginal effect of switching dummy ``j`` from 0 to 1."""
    theta = _check(theta, d)
    X1, X0 = counterfactual_rows(d, j, consistent)
    me = logistic_cdf(X1 @ theta) - logistic_cdf(X0 @ theta)
    return float(np.sum(d.w * me) / np.sum(d.w))


def ame_gradient(theta, d: DesignMatrix, j: int, consistent: bool = True) -> np.ndarray:
    theta = _check(theta, d)
    X1, X0 = counterfactual_rows(d, j, consistent)
    m1 = logistic_cdf(X1 @ theta)
    m0 = logistic_cdf(X0 @ theta)
    g = X1.T @ (d.w * m1 * (1 - m1)) - X0.T @ (d.w * m0 * (1 - m0))
    return g / np.sum(d.w)
