"""Multiple correspondence analysis on indicator or Burt matrices.

For a nonnegative table ``M`` with grand total ``N`` the analysis takes the
SVD of the standardised residual

    S = D_r^{-1/2} (Z - r c') D_c^{-1/2} = P Delta Q',    Z = M / N,

and reports row scores ``F = D_r^{-1/2} P Delta`` and column scores
``G = D_c^{-1/2} Q Delta``. Centering on ``r c'`` removes the trivial
dimension, so only strictly positive singular values are kept.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import SurveyDataset
from .errors import ContractError, EncodingError, ValidationError

__all__ = [
    "IndicatorMatrix",
    "MCAResult",
    "indicator",
    "burt",
    "run_mca",
    "project_supplementary",
    "mca",
    "export_coordinates",
]


@dataclass(frozen=True, eq=False)
class IndicatorMatrix:
    """Complete disjunctive table: one 0/1 column per observed category."""

    X: np.ndarray
    variables: tuple[str, ...]
    categories: tuple[str, ...]

    @property
    def labels(self) -> list[str]:
        return [f"{v}:{c}" for v, c in zip(self.variables, self.categories)]

    @property
    def J(self) -> int:
        return len(dict.fromkeys(self.variables))

    @property
    def K(self) -> int:
        return self.X.shape[1]

    @property
    def K_j(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for v in self.variables:
            out[v] = out.get(v, 0) + 1
        return out


def _is_missing(v) -> bool:
    return v is None or (isinstance(v, str) and v.strip() == "") or (
        isinstance(v, float) and np.isnan(v))


def indicator(data: SurveyDataset, vars: Sequence[str]) -> IndicatorMatrix:
    """One-hot encode ``vars``; categories appear in first-seen order."""
    cols, names, cats = [], [], []
    for v in vars:
        if v not in data.columns:
            raise EncodingError(f"unknown variable {v!r}")
        values = data.columns[v]
        for i, val in enumerate(values):
            if _is_missing(val):
                raise EncodingError(f"row {i + 1}: variable {v!r} has no category")
        levels = list(dict.fromkeys(str(x) for x in values))
        sv = np.array([str(x) for x in values], dtype=object)
        for lev in levels:
            cols.append((sv == lev).astype(float))
            names.append(v)
            cats.append(lev)
    X = np.column_stack(cols) if cols else np.zeros((data.n, 0))
    return IndicatorMatrix(X=X, variables=tuple(names), categories=tuple(cats))


def burt(X: IndicatorMatrix | np.ndarray, weights=None) -> np.ndarray:
    """Burt table ``X'X`` (or ``X' diag(w) X`` when weights are given)."""
    A = X.X if isinstance(X, IndicatorMatrix) else np.asarray(X, dtype=float)
    if weights is None:
        return A.T @ A
    return (A * np.asarray(weights, dtype=float)[:, None]).T @ A


@dataclass(frozen=True, eq=False)
class MCAResult:
    """Factor scores and spectrum of a correspondence analysis.

    ``eigenvalues`` are the principal inertias ``Delta**2``. Supplementary
    categories, when present, are stored separately and never enter the SVD.
    """

    F: np.ndarray
    G: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    singular_values: np.ndarray
    row_masses: np.ndarray
    col_masses: np.ndarray
    total_inertia: float
    mode: str = "indicator"
    weighted: bool = False
    column_labels: tuple[str, ...] = ()
    row_labels: tuple[str, ...] = ()
    supplementary_labels: tuple[str, ...] = ()
    supplementary_coords: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.singular_values ** 2

    @property
    def inertia_shares(self) -> np.ndarray:
        return self.eigenvalues / self.total_inertia

    @property
    def dims(self) -> int:
        return len(self.singular_values)


def run_mca(M, d: int | None = None, *, row_weights=None, mode: str | None = None,
            column_labels: Sequence[str] = (), row_labels: Sequence[str] = (),
            tol: float = 1e-10) -> MCAResult:
    """Correspondence analysis of a nonnegative table.

    Parameters
    ----------
    M : array or IndicatorMatrix
        Indicator matrix (respondents x categories) or Burt table.
    d : int, optional
        Number of dimensions to keep; defaults to all nontrivial ones.
    row_weights : array, optional
        Survey weights that scale each row of ``M`` before the analysis.
    mode : {"indicator", "burt"}, optional
        Label stored on the result; inferred from ``M`` when omitted.
    """
    if isinstance(M, IndicatorMatrix):
        column_labels = column_labels or tuple(M.labels)
        M = M.X
        mode = mode or "indicator"
    M = np.asarray(M, dtype=float)
    if mode is None:
        mode = "burt" if M.shape[0] == M.shape[1] and np.allclose(M, M.T) else "indicator"
    if np.any(M < 0):
        raise ValidationError("table entries must be nonnegative")
    if row_weights is not None:
        row_weights = np.asarray(row_weights, dtype=float)
        if row_weights.shape != (M.shape[0],) or np.any(row_weights <= 0):
            raise ValidationError("row_weights must be positive, one per row")
        M = M * row_weights[:, None]
    N = M.sum()
    if N <= 0:
        raise ValidationError("table has zero grand total")
    Z = M / N
    r = Z.sum(axis=1)
    c = Z.sum(axis=0)
    zero = np.flatnonzero(c <= 0)
    if zero.size:
        bad = [column_labels[k] if column_labels else str(k) for k in zero]
        raise ValidationError(f"zero-frequency categories must be pruned: {bad}")
    if np.any(r <= 0):
        raise ValidationError(f"empty rows: {np.flatnonzero(r <= 0).tolist()}")
    S = (Z - np.outer(r, c)) / np.sqrt(r)[:, None] / np.sqrt(c)[None, :]
    U, s, Vt = np.linalg.svd(S, full_matrices=False)
    rank = int(np.sum(s > tol * max(s[0] if s.size else 0.0, 1.0)))
    if d is None:
        d = rank
    if not 1 <= d <= rank:
        raise ContractError(f"d must lie in [1, {rank}], got {d}")
    P, delta, Q = U[:, :d], s[:d], Vt[:d].T
    G = Q * delta / np.sqrt(c)[:, None]
    # sign convention: largest-magnitude entry of every column score is positive
    flip = np.sign(G[np.argmax(np.abs(G), axis=0), np.arange(d)])
    flip[flip == 0] = 1.0
    P, Q, G = P * flip, Q * flip, G * flip
    F = P * delta / np.sqrt(r)[:, None]
    return MCAResult(F=F, G=G, P=P, Q=Q, singular_values=delta, row_masses=r, col_masses=c,
                     total_inertia=float(np.sum(S ** 2)), mode=mode,
                     weighted=row_weights is not None, column_labels=tuple(column_labels),
                     row_labels=tuple(row_labels))


def project_supplementary(res: MCAResult, table, labels: Sequence[str]) -> MCAResult:
    """Place supplementary categories in the column space of ``res``.

    In indicator mode ``table`` holds respondent-by-category 0/1 columns
    (already multiplied by row weights if the analysis was weighted); each
    category lands at ``profile' F / delta``. In Burt mode ``table`` holds
    one cross-tabulation row per supplementary category against the active
    categories and the projection uses ``G`` instead.
    """
    T = np.asarray(table, dtype=float)
    if res.mode == "indicator":
        if T.ndim != 2 or T.shape[0] != res.F.shape[0]:
            raise ContractError("supplementary columns must have one entry per respondent")
        totals = T.sum(axis=0)
        basis = res.F
        prof = T / totals
        coords = prof.T @ basis / res.singular_values
    else:
        if T.ndim != 2 or T.shape[1] != res.G.shape[0]:
            raise ContractError("supplementary rows must have one entry per active category")
        totals = T.sum(axis=1)
        prof = T / totals[:, None]
        coords = prof @ res.G / res.singular_values
    if np.any(totals <= 0):
        raise ValidationError("supplementary category never observed")
    if len(labels) != coords.shape[0]:
        raise ContractError("one label per supplementary category is required")
    return replace(res, supplementary_labels=tuple(labels), supplementary_coords=coords)


def mca(data: SurveyDataset, active: Sequence[str], supplementary: Sequence[str] = (), *,
        d: int = 2, mode: str = "indicator", weighted: bool = True) -> MCAResult:
    """Run MCA on survey variables, optionally projecting dependent variables.

    With ``weighted=True`` each respondent contributes its survey weight to
    the row masses (and to the Burt table in Burt mode).
    """
    if mode not in ("indicator", "burt"):
        raise ContractError(f"mode must be 'indicator' or 'burt', got {mode!r}")
    ind = indicator(data, active)
    w = data.weights if weighted else np.ones(data.n)
    sup = indicator(data, supplementary) if supplementary else None
    if mode == "indicator":
        res = run_mca(ind, d, row_weights=w if weighted else None, mode="indicator")
        if sup is not None:
            res = project_supplementary(res, sup.X * w[:, None], sup.labels)
    else:
        B = burt(ind, w if weighted else None)
        res = run_mca(B, d, mode="burt", column_labels=tuple(ind.labels),
                      row_labels=tuple(ind.labels))
        res = replace(res, weighted=weighted)
        if sup is not None:
            cross = (sup.X * w[:, None]).T @ ind.X
            res = project_supplementary(res, cross, sup.labels)
    return res


def export_coordinates(res: MCAResult, dims: tuple[int, int] = (0, 1),
                       path: str | Path | None = None) -> str:
    """Plot-ready category coordinates as comma-separated text.

    Header comment lines carry the mode, eigenvalues and inertia shares.
    Active categories are tagged ``explanatory`` and projected ones
    ``supplementary``. Floats are written with ``repr`` so they round-trip.
    """
    a, b = dims
    if not (0 <= a < res.dims and 0 <= b < res.dims):
        raise ContractError(f"dims must lie in [0, {res.dims}), got {dims}")
    buf = io.StringIO()
    buf.write(f"# mode: {res.mode}\n")
    buf.write(f"# weighted: {str(res.weighted).lower()}\n")
    buf.write("# eigenvalues: " + " ".join(repr(float(v)) for v in res.eigenvalues) + "\n")
    buf.write("# inertia_shares: " + " ".join(repr(float(v)) for v in res.inertia_shares) + "\n")
    buf.write(f"# total_inertia: {res.total_inertia!r}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["label", "role", "x", "y"])
    labels = res.column_labels or tuple(str(k) for k in range(res.G.shape[0]))
    for lab, row in zip(labels, res.G):
        wr.writerow([lab, "explanatory", repr(float(row[a])), repr(float(row[b]))])
    for lab, row in zip(res.supplementary_labels, res.supplementary_coords):
        wr.writerow([lab, "supplementary", repr(float(row[a])), repr(float(row[b]))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
