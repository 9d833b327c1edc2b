"""Survey-weighted Hausman-McFadden screening of the IIA assumption.

A weighted conditional logit is fitted on all alternatives and again on a
subset; if IIA holds the shared coefficients agree up to sampling noise.
Both fits use sandwich variances ``H^-1 I H^-1 / n`` with ``I`` built from
squared weights, mirroring the binary-logit calculus in :mod:`svylasso.logitcore`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import qr
from scipy.special import logsumexp
from scipy.stats import chi2

from ..errors import ContractError, InferenceError, ValidationError

__all__ = [
    "ChoiceFit",
    "IIAResult",
    "fit_conditional_logit",
    "mnl_from_design",
    "hausman_mcfadden",
    "iia_test",
    "simulate_nested_logit",
]


@dataclass(frozen=True, eq=False)
class ChoiceFit:
    params: np.ndarray
    cov: np.ndarray
    names: tuple[str, ...]
    alternatives: tuple[int, ...]
    n: int
    loglik: float
    iterations: int
    converged: bool
    dropped: tuple[str, ...] = ()

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))


def mnl_from_design(Z, n_alternatives: int, base: int = 0,
                    names: Sequence[str] | None = None) -> tuple[np.ndarray, list[str]]:
    """Alternative-specific copies of individual covariates.

    Returns an ``n x J x m(J-1)`` array in which the block for alternative
    ``j != base`` holds ``Z`` on alternative ``j`` and zeros elsewhere, so the
    conditional logit reproduces a multinomial logit with base ``base``.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    n, m = Z.shape
    J = int(n_alternatives)
    if not 0 <= base < J:
        raise ContractError(f"base must lie in [0, {J})")
    names = list(names) if names is not None else [f"z{k}" for k in range(m)]
    others = [j for j in range(J) if j != base]
    A = np.zeros((n, J, m * len(others)))
    cols = []
    for b, j in enumerate(others):
        A[:, j, b * m:(b + 1) * m] = Z
        cols += [f"alt{j}:{nm}" for nm in names]
    return A, cols


def _parts(beta, A, ch, w, n):
    U = A @ beta
    lse = logsumexp(U, axis=1)
    P = np.exp(U - lse[:, None])
    idx = np.arange(A.shape[0])
    xbar = np.einsum("ij,ijk->ik", P, A)
    s = A[idx, ch] - xbar
    ll = float(w @ (U[idx, ch] - lse) / n)
    S = s.T @ w / n
    dev = A - xbar[:, None, :]
    H = np.einsum("i,ij,ijk,ijl->kl", w, P, dev, dev) / n
    I = (s * (w ** 2)[:, None]).T @ s / n
    return ll, S, 0.5 * (H + H.T), 0.5 * (I + I.T)


def fit_conditional_logit(A, choice, w=None, names: Sequence[str] | None = None, *,
                          alternatives: Sequence[int] | None = None, max_iter: int = 100,
                          tol: float = 1e-10) -> ChoiceFit:
    """Weighted conditional logit by Newton's method.

    Parameters
    ----------
    A : array, shape (n, J, q)
        Attributes of each alternative for each respondent.
    choice : array of int, shape (n,)
        Index of the chosen alternative.
    alternatives : sequence of int, optional
        Restrict the choice set; respondents who chose an excluded
        alternative are dropped. Attribute columns that carry no
        within-choice-set variation (or are collinear) are removed.
    """
    A = np.asarray(A, dtype=float)
    ch = np.asarray(choice, dtype=int)
    n0, J, q = A.shape
    w = np.ones(n0) if w is None else np.asarray(w, dtype=float)
    if ch.shape != (n0,) or w.shape != (n0,):
        raise ValidationError("choice and weights need one entry per respondent")
    if np.any(w <= 0):
        raise ValidationError("weights must be strictly positive")
    names = list(names) if names is not None else [f"b{k}" for k in range(q)]
    alts = list(range(J)) if alternatives is None else sorted(int(a) for a in alternatives)
    if len(alts) < 2:
        raise ContractError("need at least two alternatives")
    keep_rows = np.isin(ch, alts)
    remap = {a: t for t, a in enumerate(alts)}
    A = A[keep_rows][:, alts, :]
    ch = np.array([remap[c] for c in ch[keep_rows]], dtype=int)
    w = w[keep_rows]
    n = A.shape[0]
    # identify columns that vary within choice sets and are not collinear
    dev = (A - A.mean(axis=1, keepdims=True)).reshape(-1, q)
    _, R, piv = qr(dev, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > 1e-10 * max(diag[0] if diag.size else 0.0, 1.0)))
    cols = sorted(piv[:rank].tolist())
    dropped = tuple(names[k] for k in range(q) if k not in cols)
    A = A[:, :, cols]
    kept = tuple(names[k] for k in cols)

    beta = np.zeros(len(cols))
    ll, S, H, I = _parts(beta, A, ch, w, n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        step = np.linalg.solve(H, S)
        t = 1.0
        while True:
            nb = beta + t * step
            nll, nS, nH, nI = _parts(nb, A, ch, w, n)
            if nll >= ll - 1e-12 or t < 1e-8:
                break
            t *= 0.5
        change = np.max(np.abs(nb - beta))
        beta, ll, S, H, I = nb, nll, nS, nH, nI
        if change < tol or np.max(np.abs(S)) < 1e-12:
            converged = True
            break
    Hinv = np.linalg.inv(H)
    V = Hinv @ I @ Hinv / n
    return ChoiceFit(params=beta, cov=0.5 * (V + V.T), names=kept, alternatives=tuple(alts),
                     n=n, loglik=ll, iterations=it, converged=converged, dropped=dropped)


@dataclass(frozen=True)
class IIAResult:
    statistic: float
    df: int
    p_value: float
    verdict: str
    shared: tuple[str, ...]
    generalized_inverse: bool = False


def hausman_mcfadden(full: ChoiceFit, restricted: ChoiceFit, alpha: float = 0.05) -> IIAResult:
    """Quadratic form ``d' (V_r - V_f)^-1 d`` on the shared coefficients.

    A negative statistic (possible when ``V_r - V_f`` is not positive
    definite in finite samples) is reported unchanged with ``p = 1`` and the
    verdict ``"evidence for IIA"``.
    """
    fidx = {nm: k for k, nm in enumerate(full.names)}
    shared = tuple(nm for nm in restricted.names if nm in fidx)
    missing = [nm for nm in restricted.names if nm not in fidx]
    if missing:
        raise ContractError(f"restricted coefficients absent from the full model: {missing}")
    if not shared:
        raise ContractError("no shared coefficients")
    ri = [restricted.names.index(nm) for nm in shared]
    fi = [fidx[nm] for nm in shared]
    d = restricted.params[ri] - full.params[fi]
    Vd = restricted.cov[np.ix_(ri, ri)] - full.cov[np.ix_(fi, fi)]
    Vd = 0.5 * (Vd + Vd.T)
    ev = np.linalg.eigvalsh(Vd)
    scale = max(np.max(np.abs(ev)), 1e-300)
    rank = int(np.sum(np.abs(ev) > 1e-10 * scale)) if np.any(ev != 0) else 0
    ginv = rank < len(shared)
    if ginv:
        if np.any(d != 0):
            warnings.warn("variance difference is singular; using a generalized inverse",
                          RuntimeWarning, stacklevel=2)
        stat = float(d @ np.linalg.pinv(Vd, rcond=1e-10, hermitian=True) @ d)
    else:
        stat = float(d @ np.linalg.solve(Vd, d))
    df = rank
    if stat < 0:
        return IIAResult(stat, df, 1.0, "evidence for IIA", shared, ginv)
    p = 1.0 if df == 0 or stat == 0 else float(chi2.sf(stat, df))
    verdict = "reject IIA" if p < alpha else "consistent with IIA"
    return IIAResult(stat, df, p, verdict, shared, ginv)


def iia_test(A, choice, w=None, names=None, *, drop: int, alpha: float = 0.05):
    """Fit on all alternatives and without ``drop``, then compare."""
    A = np.asarray(A, dtype=float)
    J = A.shape[1]
    if not 0 <= drop < J:
        raise ContractError(f"drop must lie in [0, {J})")
    full = fit_conditional_logit(A, choice, w, names)
    restr = fit_conditional_logit(A, choice, w, names,
                                  alternatives=[j for j in range(J) if j != drop])
    if not (full.converged and restr.converged):
        raise InferenceError("conditional logit did not converge")
    return hausman_mcfadden(full, restr, alpha), full, restr


def simulate_nested_logit(n: int, seed: int, *, nest_scale: float = 0.3,
                          nest: tuple[int, ...] = (1, 2), n_alternatives: int = 3,
                          gamma=None, weights=(1.0, 3.0)):
    """Draw choices from a nested logit (IIA fails inside ``nest``).

    Individual covariates are an intercept and one standard normal;
    ``gamma[j]`` are the utility coefficients of alternative ``j``
    (alternative 0 is normalised to zero). Weights are drawn from ``weights``
    with equal probability, emulating two strata.

    Returns
    -------
    Z, choice, w
    """
    rng = np.random.default_rng(seed)
    J = n_alternatives
    if gamma is None:
        gamma = np.array([[0.0, 0.0], [0.3, 0.8], [0.0, -0.6]])[:J]
    gamma = np.asarray(gamma, dtype=float)
    Z = np.column_stack([np.ones(n), rng.standard_normal(n)])
    V = Z @ gamma.T
    nests = [list(nest)] + [[j] for j in range(J) if j not in nest]
    lam = [nest_scale] + [1.0] * (len(nests) - 1)
    P = np.zeros((n, J))
    iv = np.column_stack([l * logsumexp(V[:, g] / l, axis=1) for g, l in zip(nests, lam)])
    pn = np.exp(iv - logsumexp(iv, axis=1, keepdims=True))
    for t, (g, l) in enumerate(zip(nests, lam)):
        within = np.exp(V[:, g] / l - logsumexp(V[:, g] / l, axis=1, keepdims=True))
        P[:, g] = pn[:, [t]] * within
    u = rng.random(n)
    choice = np.minimum((u[:, None] > np.cumsum(P, axis=1)).sum(axis=1), J - 1)
    w = rng.choice(np.asarray(weights, dtype=float), size=n)
    return Z, choice, w
