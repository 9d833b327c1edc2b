"""Pearson correlation test."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import ContractError

__all__ = ["PearsonResult", "pearson_test", "pearson_p_value"]


@dataclass(frozen=True)
class PearsonResult:
    r: float
    t: float
    p: float
    n: int


def _t_stat(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return float(np.copysign(np.inf, r))
    return r * np.sqrt((n - 2) / (1.0 - r * r))


def pearson_p_value(r: float, n: int) -> float:
    """Two-sided p-value for a correlation ``r`` on ``n`` pairs."""
    if n < 3:
        raise ContractError("need at least 3 pairs")
    if not -1.0 <= r <= 1.0:
        raise ContractError(f"correlation must lie in [-1, 1], got {r}")
    return float(2.0 * stats.t.sf(abs(_t_stat(r, n)), n - 2))


def pearson_test(x, y) -> PearsonResult:
    """Sample correlation with the Student-t test on ``n - 2`` df."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ContractError("x and y must be 1-d and of equal length")
    n = x.size
    if n < 3:
        raise ContractError("need at least 3 pairs")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = dx @ dx, dy @ dy
    if sxx == 0 or syy == 0:
        raise ContractError("zero variance in x or y")
    r = float(np.clip(dx @ dy / np.sqrt(sxx * syy), -1.0, 1.0))
    return PearsonResult(r=r, t=float(_t_stat(r, n)), p=pearson_p_value(r, n), n=int(n))
