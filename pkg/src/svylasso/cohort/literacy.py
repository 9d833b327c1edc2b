"""Digital-literacy scoring and weighted summary statistics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..errors import ContractError, ValidationError

__all__ = [
    "N_ITEMS",
    "WeightedDescriptives",
    "LiteracyScore",
    "weighted_descriptives",
    "weighted_quantile",
    "literacy_score",
]

N_ITEMS = 10


@dataclass(frozen=True)
class WeightedDescriptives:
    """Weighted moments and quartiles.

    ``kurtosis`` is excess kurtosis (0 for a normal). When the data have no
    spread, skewness and kurtosis are set to 0 and ``degenerate`` is True.
    """

    n: int
    total_weight: float
    mean: float
    stdev: float
    skewness: float
    kurtosis: float
    q1: float
    median: float
    q3: float
    degenerate: bool = False
    kurtosis_convention: str = "excess"

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def weighted_quantile(x, w, q):
    """Left-continuous inverse of the weighted empirical CDF.

    Returns the smallest ``x`` whose cumulative weight share reaches ``q``.
    Under equal weights this is numpy's ``inverted_cdf`` quantile.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    order = np.argsort(x, kind="stable")
    xs, cw = x[order], np.cumsum(w[order])
    cdf = cw / cw[-1]
    q = np.atleast_1d(np.asarray(q, dtype=float))
    # tolerate round-off in the running sum when a step lands exactly on q
    idx = np.searchsorted(cdf, q - 1e-12 * np.maximum(q, 1.0), side="left")
    out = xs[np.minimum(idx, len(xs) - 1)]
    return out if out.size > 1 else float(out[0])


def weighted_descriptives(x, w=None) -> WeightedDescriptives:
    """Weighted mean, standard deviation, skewness, excess kurtosis and quartiles.

    Moments are population (weight-normalised) moments, so with equal weights
    they coincide with ``np.std(ddof=0)`` and the biased skewness/kurtosis.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ContractError("weighted_descriptives needs at least one value")
    w = np.ones_like(x) if w is None else np.asarray(w, dtype=float).ravel()
    if w.shape != x.shape:
        raise ValidationError("x and w must have the same length")
    if np.any(w <= 0):
        raise ValidationError("weights must be strictly positive")
    W = w.sum()
    mean = float(w @ x / W)
    dev = x - mean
    m2 = float(w @ dev ** 2 / W)
    m3 = float(w @ dev ** 3 / W)
    m4 = float(w @ dev ** 4 / W)
    # a spread at round-off level counts as no spread
    degenerate = m2 <= (1e-14 * max(abs(mean), 1.0)) ** 2
    skew = 0.0 if degenerate else m3 / m2 ** 1.5
    kurt = 0.0 if degenerate else m4 / m2 ** 2 - 3.0
    q1, med, q3 = weighted_quantile(x, w, [0.25, 0.5, 0.75])
    return WeightedDescriptives(
        n=int(x.size), total_weight=float(W), mean=mean,
        stdev=0.0 if degenerate else float(np.sqrt(m2)), skewness=float(skew),
        kurtosis=float(kurt), q1=float(q1), median=float(med), q3=float(q3),
        degenerate=bool(degenerate))


@dataclass(frozen=True, eq=False)
class LiteracyScore:
    """Scores for complete cases plus weighted summaries.

    ``scores`` has one entry per respondent and is -1 where any item was not
    answered Yes or No; ``complete`` marks the scored respondents.
    """

    scores: np.ndarray
    complete: np.ndarray
    weights: np.ndarray
    stats: WeightedDescriptives | None
    group_means: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    @property
    def n_complete(self) -> int:
        return int(self.complete.sum())

    @property
    def complete_scores(self) -> np.ndarray:
        return self.scores[self.complete]


def literacy_score(responses, weights=None, groups: Mapping[str, Sequence] | None = None, *,
                   yes: str = "Yes", no: str = "No") -> LiteracyScore:
    """Count Yes answers over ten items, keeping complete cases only.

    Parameters
    ----------
    responses : array-like, shape (n, 10)
        Item answers. Anything other than ``yes``/``no`` (blank, "Not stated",
        "Don't know", ...) marks the respondent as incomplete.
    weights : array-like, optional
        Survey weights; equal weights when omitted.
    groups : mapping, optional
        Grouping variables (name -> label per respondent) for weighted mean
        scores by category.
    """
    R = np.asarray(responses, dtype=object)
    if R.ndim != 2 or R.shape[1] != N_ITEMS:
        raise ContractError(f"expected {N_ITEMS} items per respondent, got shape {R.shape}")
    n = R.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (n,) or np.any(w <= 0):
        raise ValidationError("weights must be positive, one per respondent")
    is_yes = R == yes
    is_no = R == no
    complete = np.all(is_yes | is_no, axis=1)
    scores = np.where(complete, is_yes.sum(axis=1), -1).astype(int)
    stats = weighted_descriptives(scores[complete], w[complete]) if complete.any() else None
    gm: dict[str, dict[str, float]] = {}
    for name, labels in (groups or {}).items():
        lab = np.asarray(labels, dtype=object)
        if lab.shape != (n,):
            raise ContractError(f"group {name!r} needs one label per respondent")
        gm[name] = {}
        for g in dict.fromkeys(lab[complete].tolist()):
            m = complete & (lab == g)
            gm[name][str(g)] = float(w[m] @ scores[m] / w[m].sum())
    return LiteracyScore(scores=scores, complete=complete, weights=w, stats=stats, group_means=gm)
