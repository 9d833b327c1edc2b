"""Survey data containers, categorical encoding and a stratified-survey simulator.

Respondent answers are kept as strings (category labels). Encoding turns them
into a dummy design with one omitted baseline per covariate, an intercept
column and, optionally, all pairwise interactions between dummies of
different variables.
"""
from __future__ import annotations

import csv
import itertools
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import yaml
from scipy.special import expit

from .errors import (
    ConfigError,
    DegenerateVariableError,
    DesignStateError,
    EncodingError,
    SchemaError,
    ValidationError,
)

logger = logging.getLogger(__name__)

__all__ = [
    "SurveyDataset",
    "ModelSpec",
    "ColumnInfo",
    "DesignMatrix",
    "StratumConfig",
    "SimulationConfig",
    "load_table",
    "write_table",
    "load_spec",
    "encode_design",
    "expand_interactions",
    "decode_rows",
    "simulate_survey",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurveyDataset:
    """Respondent records with survey weights.

    Parameters
    ----------
    columns : mapping of str to array of str
        One array of category labels per variable, all of length ``n``.
    weights : ndarray
        Final person weights, strictly positive.
    strata : ndarray of str, optional
        Stratum label per respondent.
    """

    columns: Mapping[str, np.ndarray]
    weights: np.ndarray
    strata: np.ndarray | None = None

    def __post_init__(self):
        cols = {str(k): _frozen(np.asarray(v, dtype=object)) for k, v in self.columns.items()}
        w = _frozen(np.asarray(self.weights, dtype=float))
        if w.ndim != 1:
            raise ValidationError("weights must be one-dimensional")
        for name, v in cols.items():
            if v.shape != w.shape:
                raise ValidationError(
                    f"variable {name!r} has {v.shape[0]} rows, weights have {w.shape[0]}")
        bad = np.flatnonzero(~(np.isfinite(w) & (w > 0)))
        if bad.size:
            raise ValidationError(
                f"weight must be strictly positive; row {bad[0] + 1} has {w[bad[0]]!r}")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "weights", w)
        if self.strata is not None:
            s = _frozen(np.asarray(self.strata, dtype=object))
            if s.shape != w.shape:
                raise ValidationError("strata must have one label per row")
            object.__setattr__(self, "strata", s)

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])

    @property
    def variables(self) -> list[str]:
        return list(self.columns)

    @property
    def records(self) -> list[dict[str, str]]:
        names = self.variables
        return [dict(zip(names, row)) for row in zip(*(self.columns[v] for v in names))]

    def subset(self, rows) -> "SurveyDataset":
        rows = np.asarray(rows)
        return SurveyDataset(
            {k: v[rows] for k, v in self.columns.items()},
            self.weights[rows],
            None if self.strata is None else self.strata[rows],
        )

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class ModelSpec:
    """What to encode: response, covariates, baselines and interaction order.

    ``levels`` optionally fixes the admissible categories (and column order)
    of a variable; categories outside it that are not dropped raise an
    :class:`EncodingError`. Without it the observed categories are used in
    order of first appearance.
    """

    response: str
    positive: str
    covariates: tuple[str, ...]
    baselines: Mapping[str, str]
    interaction_order: int = 1
    drop_categories: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    levels: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        object.__setattr__(self, "baselines", dict(self.baselines))
        object.__setattr__(
            self, "drop_categories", {k: tuple(v) for k, v in self.drop_categories.items()})
        object.__setattr__(self, "levels", {k: tuple(v) for k, v in self.levels.items()})
        if self.interaction_order not in (1, 2):
            raise ConfigError(f"interaction_order must be 1 or 2, got {self.interaction_order}")
        missing = [c for c in self.covariates if c not in self.baselines]
        if missing:
            raise ConfigError(f"covariates without a baseline: {missing}")
        if self.response in self.covariates:
            raise ConfigError("response cannot also be a covariate")
        if len(set(self.covariates)) != len(self.covariates):
            raise ConfigError("duplicate covariates")

    @property
    def variables(self) -> list[str]:
        return [self.response, *self.covariates]

    @classmethod
    def from_dict(cls, cfg: Mapping[str, Any]) -> "ModelSpec":
        try:
            resp = cfg["response"]
            if isinstance(resp, Mapping):
                response, positive = resp["name"], resp["positive"]
            else:
                response, positive = resp, cfg["positive"]
            return cls(
                response=str(response),
                positive=str(positive),
                covariates=tuple(str(c) for c in cfg["covariates"]),
                baselines={str(k): str(v) for k, v in cfg["baselines"].items()},
                interaction_order=int(cfg.get("interaction_order", 1)),
                drop_categories={str(k): tuple(str(x) for x in v)
                                 for k, v in (cfg.get("drop_categories") or {}).items()},
                levels={str(k): tuple(str(x) for x in v)
                        for k, v in (cfg.get("levels") or {}).items()},
            )
        except KeyError as exc:
            raise SchemaError(f"model spec is missing key {exc.args[0]!r}") from None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "response": {"name": self.response, "positive": self.positive},
            "covariates": list(self.covariates),
            "baselines": dict(self.baselines),
            "interaction_order": self.interaction_order,
        }
        if self.drop_categories:
            out["drop_categories"] = {k: list(v) for k, v in self.drop_categories.items()}
        if self.levels:
            out["levels"] = {k: list(v) for k, v in self.levels.items()}
        return out


def load_spec(path: str | Path) -> ModelSpec:
    """Read a :class:`ModelSpec` from a YAML file."""
    with open(path, encoding="utf-8") as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, Mapping):
        raise SchemaError(f"{path}: expected a mapping at top level")
    return ModelSpec.from_dict(cfg.get("model", cfg))


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    variables: tuple[str, ...] = ()
    categories: tuple[str, ...] = ()
    is_intercept: bool = False
    is_interaction: bool = False
    parents: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Dummy-encoded design: ``X[:, 0]`` is the intercept, remaining columns are 0/1.

    ``levels`` maps each covariate to its retained non-baseline categories in
    column order. ``rows`` are the indices of the source dataset rows kept by
    encoding.
    """

    y: np.ndarray
    X: np.ndarray
    w: np.ndarray
    columns: tuple[ColumnInfo, ...]
    covariates: tuple[str, ...] = ()
    baselines: Mapping[str, str] = field(default_factory=dict)
    levels: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    response: str = "y"
    positive: str = "1"
    negative: str = "0"
    rows: np.ndarray | None = None
    strata: np.ndarray | None = None
    dropped_interactions: tuple[str, ...] = ()

    def __post_init__(self):
        X = _frozen(np.asarray(self.X, dtype=float))
        y = _frozen(np.asarray(self.y, dtype=float))
        w = _frozen(np.asarray(self.w, dtype=float))
        if X.ndim != 2 or y.shape != (X.shape[0],) or w.shape != y.shape:
            raise ValidationError(f"inconsistent shapes X{X.shape} y{y.shape} w{w.shape}")
        if len(self.columns) != X.shape[1]:
            raise ValidationError("one ColumnInfo per design column is required")
        if not np.all(w > 0):
            raise ValidationError("design weights must be strictly positive")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if self.rows is not None:
            object.__setattr__(self, "rows", _frozen(np.asarray(self.rows, dtype=int)))
        if self.strata is not None:
            object.__setattr__(self, "strata", _frozen(np.asarray(self.strata, dtype=object)))

    @classmethod
    def from_arrays(cls, X, y, w=None, names: Sequence[str] | None = None,
                    add_intercept: bool = True) -> "DesignMatrix":
        """Wrap raw arrays; every non-intercept column is treated as its own variable."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(y, dtype=float)
        w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
        if add_intercept:
            X = np.column_stack([np.ones(X.shape[0]), X])
        p = X.shape[1] - 1
        names = list(names) if names is not None else [f"x{j}" for j in range(1, p + 1)]
        if len(names) != p:
            raise ValidationError(f"expected {p} column names, got {len(names)}")
        cols = [ColumnInfo("(Intercept)", is_intercept=True)]
        cols += [ColumnInfo(nm, (nm,), ("1",)) for nm in names]
        return cls(y=y, X=X, w=w, columns=tuple(cols), covariates=tuple(names),
                   baselines={nm: "0" for nm in names}, levels={nm: ("1",) for nm in names})

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1] - 1)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def is_expanded(self) -> bool:
        return any(c.is_interaction for c in self.columns)

    def column_index(self, name: str) -> int:
        for j, c in enumerate(self.columns):
            if c.name == name:
                return j
        raise KeyError(name)

    def main_effect_columns(self, variable: str | None = None) -> list[int]:
        return [j for j, c in enumerate(self.columns)
                if not c.is_intercept and not c.is_interaction
                and (variable is None or c.variables == (variable,))]

    def interaction_children(self, j: int) -> list[int]:
        return [k for k, c in enumerate(self.columns) if c.is_interaction and j in c.parents]

    def subset(self, rows) -> "DesignMatrix":
        rows = np.asarray(rows)
        return replace(
            self, y=self.y[rows], X=self.X[rows], w=self.w[rows],
            rows=None if self.rows is None else self.rows[rows],
            strata=None if self.strata is None else self.strata[rows])

    def with_weights(self, w) -> "DesignMatrix":
        return replace(self, w=np.asarray(w, dtype=float))


# ---------------------------------------------------------------------------
# I/O


def load_table(path: str | Path, schema: ModelSpec | Sequence[str], *,
               weight: str = "weight", strata: str | None = None,
               delimiter: str = ",") -> SurveyDataset:
    """Read a delimited UTF-8 file with a header row.

    ``schema`` is either a :class:`ModelSpec` (response and covariates are
    required) or a plain list of variable names. Rows keep file order.
    """
    needed = schema.variables if isinstance(schema, ModelSpec) else list(schema)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = [r for r in reader if r]
    missing = [v for v in [*needed, weight] if v not in header]
    if strata is not None and strata not in header:
        missing.append(strata)
    if missing:
        raise SchemaError(f"{path}: missing column(s) {missing}")
    idx = {h: k for k, h in enumerate(header)}
    for i, r in enumerate(rows, start=1):
        if len(r) != len(header):
            raise ValidationError(f"{path}: row {i} has {len(r)} fields, header has {len(header)}")
    cols = {v: np.array([r[idx[v]].strip() for r in rows], dtype=object) for v in needed}
    w = np.empty(len(rows))
    for i, r in enumerate(rows, start=1):
        try:
            w[i - 1] = float(r[idx[weight]])
        except ValueError:
            raise ValidationError(f"{path}: row {i}: weight {r[idx[weight]]!r} is not a number") from None
        if not (np.isfinite(w[i - 1]) and w[i - 1] > 0):
            raise ValidationError(f"{path}: row {i}: weight must be > 0, got {r[idx[weight]]!r}")
    st = None if strata is None else np.array([r[idx[strata]] for r in rows], dtype=object)
    return SurveyDataset(cols, w, st)


def write_table(data: SurveyDataset, path: str | Path, *, weight: str = "weight",
                strata: str | None = "stratum", delimiter: str = ",") -> None:
    names = data.variables
    with open(path, "w", encoding="utf-8", newline="") as fh:
        wr = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        header = list(names)
        if strata is not None and data.strata is not None:
            header.append(strata)
        header.append(weight)
        wr.writerow(header)
        for i in range(data.n):
            row = [data.columns[v][i] for v in names]
            if strata is not None and data.strata is not None:
                row.append(data.strata[i])
            row.append(repr(float(data.weights[i])))
            wr.writerow(row)


# ---------------------------------------------------------------------------
# Encoding


def _ordered_unique(values: Iterable[str]) -> list[str]:
    return list(dict.fromkeys(values))


def encode_design(data: SurveyDataset, spec: ModelSpec) -> DesignMatrix:
    """Encode a dataset into a dummy design matrix following ``spec``."""
    missing = [v for v in spec.variables if v not in data.columns]
    if missing:
        raise SchemaError(f"dataset lacks variable(s) {missing}")

    keep = np.ones(data.n, dtype=bool)
    for var in spec.variables:
        drops = spec.drop_categories.get(var, ())
        if drops:
            keep &= ~np.isin(data.columns[var], list(drops))
    rows = np.flatnonzero(keep)
    if rows.size == 0:
        raise EncodingError("no rows left after dropping categories")
    n_removed = data.n - rows.size
    if n_removed:
        logger.info("encode_design: removed %d row(s) with dropped categories", n_removed)

    resp = data.columns[spec.response][rows]
    resp_levels = _ordered_unique(resp)
    others = [r for r in resp_levels if r != spec.positive]
    if spec.positive not in resp_levels or len(others) != 1:
        raise EncodingError(
            f"response {spec.response!r} must keep exactly {spec.positive!r} and one other "
            f"category after filtering; found {resp_levels}")
    y = (resp == spec.positive).astype(float)

    cols = [ColumnInfo("(Intercept)", is_intercept=True)]
    blocks = [np.ones((rows.size, 1))]
    levels: dict[str, tuple[str, ...]] = {}
    for var in spec.covariates:
        vals = data.columns[var][rows]
        observed = _ordered_unique(vals)
        declared = spec.levels.get(var)
        if declared is not None:
            unseen = [c for c in observed if c not in declared]
            if unseen:
                raise EncodingError(f"variable {var!r}: unexpected category {unseen[0]!r}")
            cats = [c for c in declared if c not in spec.drop_categories.get(var, ())]
        else:
            cats = observed
        base = spec.baselines[var]
        if base not in cats:
            raise EncodingError(f"variable {var!r}: baseline {base!r} is not among {cats}")
        if len(cats) < 2:
            raise DegenerateVariableError(
                f"variable {var!r} has fewer than two retained categories ({cats})")
        targets = tuple(c for c in cats if c != base)
        levels[var] = targets
        for cat in targets:
            cols.append(ColumnInfo(f"{var}={cat}", (var,), (cat,)))
            blocks.append((vals == cat).astype(float)[:, None])

    design = DesignMatrix(
        y=y, X=np.hstack(blocks), w=data.weights[rows], columns=tuple(cols),
        covariates=spec.covariates, baselines=dict(spec.baselines), levels=levels,
        response=spec.response, positive=spec.positive, negative=others[0], rows=rows,
        strata=None if data.strata is None else data.strata[rows])
    if spec.interaction_order == 2:
        design = expand_interactions(design)
    return design


def expand_interactions(design: DesignMatrix) -> DesignMatrix:
    """Append products of main-effect dummies from distinct variables.

    Products that are identically zero in the data are not appended; their
    names are kept in ``dropped_interactions`` and logged.
    """
    if design.is_expanded:
        raise DesignStateError("design already contains interaction columns")
    X = design.X
    cols = list(design.columns)
    new_blocks, dropped = [], []
    for va, vb in itertools.combinations(design.covariates, 2):
        for ja in design.main_effect_columns(va):
            for jb in design.main_effect_columns(vb):
                prod = X[:, ja] * X[:, jb]
                ca, cb = design.columns[ja], design.columns[jb]
                name = f"{ca.name}:{cb.name}"
                if not prod.any():
                    dropped.append(name)
                    continue
                cols.append(ColumnInfo(name, (va, vb), (ca.categories[0], cb.categories[0]),
                                       is_interaction=True, parents=(ja, jb)))
                new_blocks.append(prod[:, None])
    if dropped:
        logger.info("expand_interactions: dropped %d all-zero column(s): %s",
                    len(dropped), ", ".join(dropped))
    Xn = np.hstack([X, *new_blocks]) if new_blocks else X
    return replace(design, X=Xn, columns=tuple(cols), dropped_interactions=tuple(dropped))


def decode_rows(design: DesignMatrix) -> list[dict[str, str]]:
    """Recover category labels of each retained row from the dummy columns."""
    out = []
    for i in range(design.n):
        rec = {}
        for var in design.covariates:
            hits = [j for j in design.main_effect_columns(var) if design.X[i, j] == 1.0]
            if len(hits) > 1:
                raise EncodingError(f"row {i}: variable {var!r} has {len(hits)} active dummies")
            rec[var] = design.columns[hits[0]].categories[0] if hits else design.baselines[var]
        rec[design.response] = design.positive if design.y[i] == 1.0 else design.negative
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# Simulation


@dataclass(frozen=True)
class StratumConfig:
    """One stratum: how many respondents to draw and with which sampling fraction.

    ``categories`` maps each variable to ``{label: probability}``; variables
    omitted here fall back to the config-level distribution.
    """

    name: str
    size: int
    fraction: float
    categories: Mapping[str, Mapping[str, float]] = field(default_factory=dict)


@dataclass(frozen=True)
class SimulationConfig:
    """Settings for :func:`simulate_survey`.

    ``theta`` is keyed by design column names: ``"(Intercept)"``,
    ``"var=level"`` for main effects and ``"a=x:b=y"`` for interactions.
    Unlisted terms have coefficient 0.
    """

    strata: tuple[StratumConfig, ...]
    categories: Mapping[str, Mapping[str, float]]
    theta: Mapping[str, float]
    seed: int
    response: str = "y"
    positive: str = "Yes"
    negative: str = "No"
    not_stated_rate: float = 0.0
    not_stated_label: str = "Not stated"
    n: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "strata", tuple(self.strata))
        if not self.strata:
            raise ConfigError("at least one stratum is required")
        for s in self.strata:
            if not (0.0 < s.fraction <= 1.0):
                raise ConfigError(
                    f"stratum {s.name!r}: sampling fraction must lie in (0, 1], got {s.fraction}")
            if s.size < 0:
                raise ConfigError(f"stratum {s.name!r}: negative size")
        if self.n is not None and self.n != sum(s.size for s in self.strata):
            raise ConfigError(
                f"n={self.n} disagrees with the stratum sizes (sum {sum(s.size for s in self.strata)})")
        if not (0.0 <= self.not_stated_rate < 1.0):
            raise ConfigError("not_stated_rate must lie in [0, 1)")

    @property
    def variables(self) -> list[str]:
        names = list(self.categories)
        for s in self.strata:
            names += [v for v in s.categories if v not in names]
        return names

    @classmethod
    def from_dict(cls, cfg: Mapping[str, Any], seed: int | None = None) -> "SimulationConfig":
        try:
            strata = tuple(
                StratumConfig(str(s["name"]), int(s["size"]), float(s["fraction"]),
                              {k: {str(c): float(p) for c, p in d.items()}
                               for k, d in (s.get("categories") or {}).items()})
                for s in cfg["strata"])
            return cls(
                strata=strata,
                categories={k: {str(c): float(p) for c, p in d.items()}
                            for k, d in (cfg.get("categories") or {}).items()},
                theta={str(k): float(v) for k, v in (cfg.get("theta") or {}).items()},
                seed=int(seed if seed is not None else cfg["seed"]),
                response=str(cfg.get("response", "y")),
                positive=str(cfg.get("positive", "Yes")),
                negative=str(cfg.get("negative", "No")),
                not_stated_rate=float(cfg.get("not_stated_rate", 0.0)),
                n=None if cfg.get("n") is None else int(cfg["n"]),
            )
        except KeyError as exc:
            raise ConfigError(f"simulation config is missing key {exc.args[0]!r}") from None


def _parse_term(term: str) -> list[tuple[str, str]]:
    parts = []
    for piece in term.split(":"):
        if "=" not in piece:
            raise ConfigError(f"theta key {term!r}: expected 'variable=category' terms")
        var, cat = piece.split("=", 1)
        parts.append((var, cat))
    return parts


def simulate_survey(config: SimulationConfig) -> SurveyDataset:
    """Draw a stratified sample and a logistic response.

    Respondents are generated stratum by stratum with independent categorical
    draws; every respondent of a stratum gets weight ``1 / fraction``.
    """
    rng = np.random.default_rng(config.seed)
    names = config.variables
    cols: dict[str, list[np.ndarray]] = {v: [] for v in names}
    weights, strata = [], []
    for s in config.strata:
        for v in names:
            dist = s.categories.get(v, config.categories.get(v))
            if dist is None:
                raise ConfigError(f"stratum {s.name!r}: no distribution for {v!r}")
            labels = list(dist)
            probs = np.array([dist[c] for c in labels], dtype=float)
            if np.any(probs < 0) or probs.sum() <= 0:
                raise ConfigError(f"variable {v!r}: invalid category probabilities")
            draw = rng.choice(len(labels), size=s.size, p=probs / probs.sum())
            cols[v].append(np.array(labels, dtype=object)[draw])
        weights.append(np.full(s.size, 1.0 / s.fraction))
        strata.append(np.full(s.size, s.name, dtype=object))
    columns = {v: np.concatenate(cols[v]) if cols[v] else np.empty(0, dtype=object)
               for v in names}
    n = sum(s.size for s in config.strata)

    eta = np.zeros(n)
    for term, coef in config.theta.items():
        if term == "(Intercept)":
            eta += coef
            continue
        hit = np.ones(n, dtype=bool)
        for var, cat in _parse_term(term):
            if var not in columns:
                raise ConfigError(f"theta term {term!r} refers to unknown variable {var!r}")
            hit &= columns[var] == cat
        eta += coef * hit
    prob = expit(eta)
    y = rng.random(n) < prob
    resp = np.where(y, config.positive, config.negative).astype(object)
    if config.not_stated_rate > 0:
        resp[rng.random(n) < config.not_stated_rate] = config.not_stated_label
    columns = {config.response: resp, **columns}
    return SurveyDataset(columns, np.concatenate(weights), np.concatenate(strata))
