"""Command-line front end.

Every command reads one YAML config (``--config``), writes ``report.json``
and ``report.txt`` (plus command-specific files) into ``--out`` and prints
one of the two reports depending on ``--format``. Artifacts carry no
timestamps or absolute paths, so a rerun with the same config and seed
reproduces them byte for byte.

Config layout (all sections optional except what a command needs)::

    seed: 1
    data: {path: survey.csv, weight: weight, strata: stratum}
    simulate: {...}            # used instead of ``data`` when present
    model: {...}               # response, covariates, baselines, ...
    solver: {lambda: null, loss: auc, folds: 10, stratified: false}
    inference: {methods: [debiased, c_alpha, selective], consistent_ame: true}
    mca: {active: [...], supplementary: [...], dims: 2, mode: indicator}
    score: {items: [...], groups: [...]}
    cluster: {features: [...], k: 3, k_range: [2, 8]}
    decompose: {group: period, group_A: "2010", group_B: "2020", reference: B}
    iia: {choice: mode, covariates: [...], baselines: {...}, drop: car, base: bus}
    order_select: {folds: 10, gamma: 1}
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from . import __version__
from .cohort import (
    elbow,
    fit_logit,
    iia_test,
    kmeans,
    literacy_score,
    mnl_from_design,
    oaxaca_blinder,
    weighted_descriptives,
)
from .dataset import (
    ModelSpec,
    SimulationConfig,
    SurveyDataset,
    encode_design,
    load_table,
    simulate_survey,
    write_table,
)
from .errors import ConfigError, InferenceError, SchemaError, SvyLassoError
from .inference import c_alpha_coef, debias, selective_onestep
from .mca import export_coordinates, mca as run_survey_mca
from .report import ReportTable, fmt, regression_table, write_report
from .solver import cv_select, fit as lasso_fit, order_selection

log = logging.getLogger("svylasso")

COMMANDS = ("simulate", "fit", "fit-infer", "mca", "score", "cluster", "decompose",
            "iia-test", "order-select")


# ---------------------------------------------------------------------------
# config helpers


def _load_config(path: str | None) -> tuple[dict, Path]:
    if path is None:
        return {}, Path.cwd()
    p = Path(path)
    try:
        cfg = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return cfg, p.parent


def _section(cfg, name) -> dict:
    sec = cfg.get(name) or {}
    if not isinstance(sec, Mapping):
        raise ConfigError(f"config section {name!r} must be a mapping")
    return dict(sec)


def _seed(cfg, args) -> int:
    seed = args.seed if args.seed is not None else cfg.get("seed")
    if seed is None:
        raise ConfigError("a seed is required (config key 'seed' or --seed)")
    return int(seed)


def _dataset(cfg, base: Path, variables, seed: int) -> SurveyDataset:
    """Data from ``data.path`` or, failing that, from the ``simulate`` section."""
    data = _section(cfg, "data")
    if data.get("path"):
        path = Path(data["path"])
        if not path.is_absolute():
            path = base / path
        return load_table(path, list(variables), weight=data.get("weight", "weight"),
                          strata=data.get("strata"), delimiter=data.get("delimiter", ","))
    if cfg.get("simulate"):
        return simulate_survey(SimulationConfig.from_dict(cfg["simulate"], seed=seed))
    raise ConfigError("config needs either data.path or a simulate section")


def _spec(cfg) -> ModelSpec:
    if "model" not in cfg:
        raise SchemaError("config has no 'model' section")
    return ModelSpec.from_dict(cfg["model"])


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(cfg, base, seed, out: Path):
    if not cfg.get("simulate"):
        raise ConfigError("config has no 'simulate' section")
    sim = SimulationConfig.from_dict(cfg["simulate"], seed=seed)
    ds = simulate_survey(sim)
    name = _section(cfg, "simulate").get("output", "data.csv")
    out.mkdir(parents=True, exist_ok=True)
    write_table(ds, out / name)
    strata = {}
    for s in sim.strata:
        strata[s.name] = {"size": s.size, "fraction": s.fraction, "weight": fmt(1.0 / s.fraction)}
    resp = ds.columns[sim.response]
    share = float(ds.weights[resp == sim.positive].sum() / ds.weights.sum())
    structured = {"command": "simulate", "seed": seed, "n": ds.n, "file": name,
                  "variables": ds.variables, "strata": strata,
                  "weighted_positive_share": fmt(share),
                  "file_sha256": _digest((out / name).read_text(encoding="utf-8"))}
    tab = ReportTable(["stratum", "size", "fraction", "weight"],
                      [{"stratum": k, "size": str(v["size"]), "fraction": fmt(v["fraction"]),
                        "weight": v["weight"]} for k, v in strata.items()],
                      footnotes={"n": ds.n, "weighted_positive_share": fmt(share),
                                 "file": name})
    return structured, tab.render()


def _fit_common(cfg, base, seed):
    spec = _spec(cfg)
    ds = _dataset(cfg, base, spec.variables, seed)
    d = encode_design(ds, spec)
    sol = _section(cfg, "solver")
    lam = sol.get("lambda")
    cv = None
    if lam is None:
        cv = cv_select(d, int(sol.get("folds", 10)), sol.get("loss", "auc"), seed=seed,
                       stratified=bool(sol.get("stratified", False)))
        lam = cv.chosen_lambda
    f = lasso_fit(d, float(lam))
    log.info("seed=%d lambda=%.10g fold_hash=%s", seed, lam, cv.fold_hash if cv else "none")
    meta = {"seed": seed, "lambda": fmt(lam), "lambda_exact": float(lam), "n": d.n, "p": d.p,
            "converged": f.converged, "iterations": f.iterations,
            "dropped_interactions": list(d.dropped_interactions),
            "model": spec.to_dict()}
    if cv is not None:
        meta["cv"] = {"loss": cv.loss_kind, "folds": int(sol.get("folds", 10)),
                      "fold_hash": cv.fold_hash, "best_loss": fmt(cv.best_loss),
                      "chosen_index": int(cv.chosen_index)}
    return d, f, meta


def cmd_fit(cfg, base, seed, out):
    d, f, meta = _fit_common(cfg, base, seed)
    tab = regression_table(d, f)
    structured = {"command": "fit", **meta, "table": tab.to_dict(),
                  "active_set": [d.names[j] for j in f.active_set]}
    return structured, tab.render()


def cmd_fit_infer(cfg, base, seed, out):
    d, f, meta = _fit_common(cfg, base, seed)
    inf = _section(cfg, "inference")
    methods = list(inf.get("methods", ["debiased"]))
    unknown = [m for m in methods if m not in ("debiased", "c_alpha", "selective")]
    if unknown:
        raise ConfigError(f"unknown inference method(s) {unknown}")
    consistent = bool(inf.get("consistent_ame", True))
    notes = []
    db = debias(f, d, consistent=consistent) if "debiased" in methods else None
    ca = None
    if "c_alpha" in methods:
        restricted = inf.get("restricted", "lasso")
        ca = {j: c_alpha_coef(d, j, lam=f.lam, restricted=restricted)
              for j in range(1, d.X.shape[1])}
    si = None
    if "selective" in methods:
        try:
            si = selective_onestep(f, d)
        except InferenceError as exc:
            if "no selected coefficients" not in str(exc):
                raise
            notes.append("selective: no selected coefficients")
    tab = regression_table(d, f, debiased=db, c_alpha=ca, selective=si)
    if notes:
        tab.footnotes["notes"] = "; ".join(notes)
    structured = {"command": "fit-infer", **meta, "methods": methods, "notes": notes,
                  "table": tab.to_dict(), "active_set": [d.names[j] for j in f.active_set]}
    return structured, tab.render()


def cmd_mca(cfg, base, seed, out):
    sec = _section(cfg, "mca")
    active = list(sec.get("active") or [])
    supp = list(sec.get("supplementary") or [])
    if not active:
        raise ConfigError("mca.active must list at least one variable")
    ds = _dataset(cfg, base, active + supp, seed)
    dims = int(sec.get("dims", 2))
    res = run_survey_mca(ds, active, supp, d=None, mode=sec.get("mode", "indicator"),
                         weighted=bool(sec.get("weighted", True)))
    if res.dims < 2:
        raise ConfigError("fewer than two nontrivial dimensions; nothing to plot")
    out.mkdir(parents=True, exist_ok=True)
    coords = export_coordinates(res, (0, 1), out / "coordinates.csv")
    k = min(dims, res.dims)
    structured = {"command": "mca", "seed": seed, "mode": res.mode, "weighted": res.weighted,
                  "eigenvalues": [fmt(v) for v in res.eigenvalues[:k]],
                  "inertia_shares": [fmt(v) for v in res.inertia_shares[:k]],
                  "total_inertia": fmt(res.total_inertia), "n_categories": len(res.column_labels),
                  "n_supplementary": len(res.supplementary_labels),
                  "coordinates_sha256": _digest(coords)}
    tab = ReportTable(["dimension", "eigenvalue", "inertia_share"],
                      [{"dimension": str(i + 1), "eigenvalue": fmt(res.eigenvalues[i]),
                        "inertia_share": fmt(res.inertia_shares[i])} for i in range(k)],
                      footnotes={"mode": res.mode, "weighted": str(res.weighted).lower(),
                                 "coordinates": "coordinates.csv"})
    return structured, tab.render()


def cmd_score(cfg, base, seed, out):
    sec = _section(cfg, "score")
    items = list(sec.get("items") or [])
    groups = list(sec.get("groups") or [])
    ds = _dataset(cfg, base, items + groups, seed)
    R = np.column_stack([ds.columns[v] for v in items]) if items else np.zeros((ds.n, 0))
    res = literacy_score(R, ds.weights, {g: ds.columns[g] for g in groups},
                         yes=str(sec.get("yes", "Yes")), no=str(sec.get("no", "No")))
    st = res.stats
    stats = {} if st is None else {k: (fmt(v) if isinstance(v, float) else v)
                                   for k, v in st.as_dict().items()}
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["row", "score", "complete"])
    for i, (s, c) in enumerate(zip(res.scores, res.complete), start=1):
        wr.writerow([i, int(s) if c else "", int(c)])
    (out / "scores.csv").write_text(buf.getvalue(), encoding="utf-8")
    gm = {g: {k: fmt(v) for k, v in m.items()} for g, m in res.group_means.items()}
    structured = {"command": "score", "seed": seed, "n": ds.n, "n_complete": res.n_complete,
                  "descriptives": stats, "group_means": gm}
    rows = [{"statistic": k, "value": v} for k, v in stats.items()
            if isinstance(v, float)]
    tab = ReportTable(["statistic", "value"], rows,
                      footnotes={"n_complete": res.n_complete, "kurtosis": "excess"})
    text = tab.render()
    for g, m in gm.items():
        text += ReportTable(["group", "category", "mean_score"],
                            [{"group": g, "category": k, "mean_score": v} for k, v in m.items()]).render()
    return structured, text


def _feature_matrix(ds: SurveyDataset, features):
    blocks, names = [], []
    for v in features:
        col = ds.columns[v]
        try:
            blocks.append(np.array([float(x) for x in col])[:, None])
            names.append(v)
        except ValueError:
            levels = list(dict.fromkeys(col.tolist()))
            blocks.append(np.column_stack([(col == lev).astype(float) for lev in levels]))
            names += [f"{v}={lev}" for lev in levels]
    return np.hstack(blocks), names


def cmd_cluster(cfg, base, seed, out):
    sec = _section(cfg, "cluster")
    features = list(sec.get("features") or [])
    if not features:
        raise ConfigError("cluster.features must list at least one variable")
    ds = _dataset(cfg, base, features, seed)
    M, names = _feature_matrix(ds, features)
    w = ds.weights if sec.get("weighted", False) else None
    k = int(sec.get("k", 3))
    lo, hi = sec.get("k_range", [2, max(k, 8)])
    curve = elbow(M, range(int(lo), int(hi) + 1), seed, weights=w)
    res = kmeans(M, k, seed, weights=w)
    sizes = np.bincount(res.labels, minlength=k)
    structured = {"command": "cluster", "seed": seed, "k": k, "features": names,
                  "weighted": w is not None,
                  "elbow": {str(kk): fmt(v) for kk, v in curve.items()},
                  "inertia": fmt(res.inertia), "silhouette_mean": fmt(res.silhouette_mean),
                  "cluster_sizes": sizes.tolist(),
                  "centroids": [[fmt(v) for v in row] for row in res.centroids]}
    tab = ReportTable(["k", "inertia"], [{"k": str(kk), "inertia": fmt(v)} for kk, v in curve.items()],
                      footnotes={"chosen_k": k, "silhouette_mean": fmt(res.silhouette_mean),
                                 "cluster_sizes": sizes.tolist()})
    return structured, tab.render()


def cmd_decompose(cfg, base, seed, out):
    spec = _spec(cfg)
    sec = _section(cfg, "decompose")
    try:
        gvar, ga, gb = sec["group"], str(sec["group_A"]), str(sec["group_B"])
    except KeyError as exc:
        raise ConfigError(f"decompose section is missing {exc.args[0]!r}") from None
    ds = _dataset(cfg, base, [*spec.variables, gvar], seed)
    d = encode_design(ds, spec)
    lab = ds.columns[gvar][d.rows]
    dA, dB = d.subset(np.flatnonzero(lab == ga)), d.subset(np.flatnonzero(lab == gb))
    if dA.n == 0 or dB.n == 0:
        raise ConfigError(f"group variable {gvar!r} has no rows for {ga!r} or {gb!r}")
    ref = str(sec.get("reference", "B"))
    fit_ref = fit_logit(dB if ref == "B" else dA)
    res = oaxaca_blinder(fit_ref, dA, dB, reference=ref)
    per = {k: {"characteristics": fmt(c), "coefficients": fmt(q),
               "characteristics_se": fmt(res.per_regressor_se[k][0]),
               "coefficients_se": fmt(res.per_regressor_se[k][1])}
           for k, (c, q) in res.per_regressor.items()}
    structured = {"command": "decompose", "seed": seed, "group": gvar, "group_A": ga,
                  "group_B": gb, "reference": ref, "mean_A": fmt(res.mean_A),
                  "mean_B": fmt(res.mean_B), "difference": fmt(res.difference),
                  "characteristics": fmt(res.characteristics_part),
                  "coefficients": fmt(res.coefficients_part),
                  "se": {k: fmt(v) for k, v in res.se.items()}, "per_regressor": per,
                  "path": list(res.path), "note": res.note}
    rows = [{"component": "difference", "estimate": fmt(res.difference), "se": fmt(res.se["difference"])},
            {"component": "characteristics", "estimate": fmt(res.characteristics_part),
             "se": fmt(res.se["characteristics"])},
            {"component": "coefficients", "estimate": fmt(res.coefficients_part),
             "se": fmt(res.se["coefficients"])}]
    text = ReportTable(["component", "estimate", "se"], rows,
                       footnotes={"reference": ref, "mean_A": fmt(res.mean_A),
                                  "mean_B": fmt(res.mean_B)}).render()
    text += ReportTable(["variable", "characteristics", "coefficients"],
                        [{"variable": k, "characteristics": v["characteristics"],
                          "coefficients": v["coefficients"]} for k, v in per.items()],
                        footnotes={"path": " > ".join(res.path)}).render()
    return structured, text


def cmd_iia(cfg, base, seed, out):
    sec = _section(cfg, "iia")
    try:
        choice_var, drop = sec["choice"], str(sec["drop"])
    except KeyError as exc:
        raise ConfigError(f"iia section is missing {exc.args[0]!r}") from None
    covs = list(sec.get("covariates") or [])
    ds = _dataset(cfg, base, [choice_var, *covs], seed)
    ch = ds.columns[choice_var]
    alts = [str(a) for a in sec.get("alternatives") or dict.fromkeys(ch.tolist())]
    base_alt = str(sec.get("base", alts[0]))
    if drop not in alts or base_alt not in alts or drop == base_alt:
        raise ConfigError("iia.drop and iia.base must be two different alternatives")
    # covariate dummies via the regular encoder, with a placeholder binary response
    tmp = SurveyDataset({**{v: ds.columns[v] for v in covs},
                         "__choice__": np.where(ch == base_alt, "1", "0")}, ds.weights)
    spec = ModelSpec("__choice__", "1", tuple(covs), dict(sec.get("baselines") or {}))
    d = encode_design(tmp, spec)
    idx = np.array([alts.index(str(c)) for c in ch])
    A, names = mnl_from_design(d.X, len(alts), base=alts.index(base_alt),
                               names=["const" if j == 0 else d.names[j] for j in range(d.X.shape[1])])
    names = [nm.replace(f"alt{j}:", f"{alts[j]}:", 1) for nm in names
             for j in [int(nm.split(":", 1)[0][3:])]]
    r, full, restr = iia_test(A, idx, ds.weights, names, drop=alts.index(drop),
                              alpha=float(sec.get("alpha", 0.05)))
    structured = {"command": "iia-test", "seed": seed, "alternatives": alts, "base": base_alt,
                  "dropped_alternative": drop, "statistic": fmt(r.statistic), "df": r.df,
                  "p_value": fmt(r.p_value), "verdict": r.verdict, "shared": list(r.shared),
                  "generalized_inverse": r.generalized_inverse}
    tab = ReportTable(["dropped", "statistic", "df", "p_value", "verdict"],
                      [{"dropped": drop, "statistic": fmt(r.statistic), "df": str(r.df),
                        "p_value": fmt(r.p_value), "verdict": r.verdict}],
                      footnotes={"base": base_alt, "n": int(ds.n)})
    return structured, tab.render()


def cmd_order_select(cfg, base, seed, out):
    spec = _spec(cfg)
    sec = _section(cfg, "order_select")
    ds = _dataset(cfg, base, spec.variables, seed)
    res = order_selection(ds, spec, seed, folds=int(sec.get("folds", 10)),
                          gamma=float(sec.get("gamma", 1.0)), rule=sec.get("rule", "one-se"))
    log.info("seed=%d fold_hash=%s", seed, res.fold_hash)
    structured = {"command": "order-select", "seed": seed, "loss": res.loss_kind,
                  "cv_error": {str(k): fmt(v) for k, v in res.cv_error.items()},
                  "n_columns": {str(k): v for k, v in res.n_columns.items()},
                  "preferred_order": res.preferred, "rule": res.rule,
                  "difference_se": fmt(res.difference_se),
                  "preferred_argmin": res.preferred_argmin, "fold_hash": res.fold_hash}
    tab = ReportTable(["order", "columns", "cv_mse"],
                      [{"order": str(k), "columns": str(res.n_columns[k]),
                        "cv_mse": fmt(res.cv_error[k])} for k in (1, 2)],
                      footnotes={"preferred": res.preferred, "rule": res.rule,
                                 "difference_se": fmt(res.difference_se),
                                 "fold_hash": res.fold_hash})
    return structured, tab.render()


HANDLERS = {
    "simulate": cmd_simulate, "fit": cmd_fit, "fit-infer": cmd_fit_infer, "mca": cmd_mca,
    "score": cmd_score, "cluster": cmd_cluster, "decompose": cmd_decompose,
    "iia-test": cmd_iia, "order-select": cmd_order_select,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="svylasso", description="Survey-weighted logistic Lasso toolkit")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--format", choices=("table", "structured"), default="table",
                       help="which report to print on stdout")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value, e.g. solver.lambda=0.01")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def _apply_overrides(cfg: dict, pairs) -> dict:
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {p!r} is not a section")
        node[parts[-1]] = yaml.safe_load(raw)
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg, base = _load_config(args.config)
        cfg = _apply_overrides(cfg, args.set)
        seed = _seed(cfg, args)
        out = Path(args.out)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            structured, text = HANDLERS[args.command](cfg, base, seed, out)
        msgs = sorted({str(w.message) for w in caught})
        if msgs:
            structured["warnings"] = msgs
            for m in msgs:
                log.warning("%s", m)
        structured["config"] = cfg
        structured["version"] = __version__
        pj, pt = write_report(out, structured, text)
        sys.stdout.write(pt.read_text(encoding="utf-8") if args.format == "table"
                         else pj.read_text(encoding="utf-8"))
        return 0
    except (SvyLassoError, OSError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        sys.stderr.write(json.dumps(diag, sort_keys=True) + "\n")
        return 2


def main() -> None:  # console-script entry point
    sys.exit(run())


if __name__ == "__main__":
    main()
