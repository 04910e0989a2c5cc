"""Command-line entry point: ``gpmfs {select,evaluate,sweep-q,sensitivity,trace,stats}``.

Settings resolve as: command-line flags, then an optional JSON config file
(``--config``), then built-in defaults. Exit codes: 0 success, 2 invalid
arguments or input data, 3 I/O failure, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import apply_standardizer, fit_standardizer, load_dataset
from .errors import ArgumentError, GPMFSError, NumericalError, ParseError
from .evaluation import cross_validate, cross_validate_grid
from .metrics import METRIC_NAMES
from .selection import select_features
from .solver import HyperParams, solve
from .stats import (DEFAULT_CRITICAL_VALUE, DEFAULT_Q_ALPHA, RankTable, average_ranks,
                    bonferroni_dunn_cd, compare_to_control, friedman_statistic)
from .structures import knn_affinity, laplacian, pearson_matrix

log = logging.getLogger("gpmfs")

SCHEMA_VERSION = "1.0"
OUTPUT_DIR_ENV = "GPMFS_OUTPUT_DIR"

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

FORMATS = ("arff-with-xml", "arff-trailing", "csv")
DEFAULT_Q_VALUES = [0.0, 0.25, 0.5, 0.75, 1.0]
DEFAULT_SENSITIVITY_VALUES = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3]
DEFAULT_FRACTIONS = [round(0.02 * i, 2) for i in range(1, 11)]
PARAM_FLAGS = {"alpha": "alpha", "beta": "beta", "gamma": "gamma", "lambda": "lam"}

DEFAULTS = {
    "format": "arff-with-xml",
    "xml": None,
    "label_count": None,
    "folds": 5,
    "seed": 0,
    "candidate_k": 20,
    "final_k": 10,
    "predictor": "two-stage",
    "workers": 1,
    "out": None,
    "q_values": DEFAULT_Q_VALUES,
    "values": DEFAULT_SENSITIVITY_VALUES,
    "fractions": DEFAULT_FRACTIONS,
    "q_alpha": DEFAULT_Q_ALPHA,
    "critical_value": DEFAULT_CRITICAL_VALUE,
    "alpha_level": 0.1,
    "lower_is_better": False,
    "control": None,
    "dump_structures": None,
}
HYPER_FIELDS = {"alpha": "alpha", "beta": "beta", "gamma": "gamma", "lam": "lam", "p": "p",
                "q": "q", "global_fraction": "global_fraction", "graph_k": "graph_k",
                "sigma": "sigma", "max_iter": "max_iter", "tol": "rel_tol"}


@dataclass
class RunConfig:
    command: str
    dataset_path: Path | None
    format: str
    xml_path: Path | None
    label_count: int | None
    params: HyperParams
    folds: int
    seed: int
    candidate_k: int
    final_k: int
    predictor: str
    workers: int
    out: Path
    extra: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {
            "command": self.command,
            "dataset": str(self.dataset_path) if self.dataset_path else None,
            "format": self.format,
            "xml": str(self.xml_path) if self.xml_path else None,
            "label_count": self.label_count,
            "params": self.params.to_dict(),
            "folds": self.folds,
            "seed": self.seed,
            "candidate_k": self.candidate_k,
            "final_k": self.final_k,
            "predictor": self.predictor,
            **{k: v for k, v in self.extra.items() if k != "dump_structures"},
        }


# --------------------------------------------------------------------------- parsing

def _add_data_flags(p):
    S = argparse.SUPPRESS
    p.add_argument("--dataset", default=S, help="dataset file (ARFF or CSV)")
    p.add_argument("--format", choices=FORMATS, default=S)
    p.add_argument("--xml", default=S, help="Mulan XML label header (arff-with-xml)")
    p.add_argument("--label-count", type=int, default=S,
                   help="number of trailing label columns (arff-trailing, csv)")


def _add_model_flags(p):
    S = argparse.SUPPRESS
    p.add_argument("--alpha", type=float, default=S)
    p.add_argument("--beta", type=float, default=S)
    p.add_argument("--gamma", type=float, default=S)
    p.add_argument("--lambda", dest="lam", type=float, default=S)
    p.add_argument("--p", type=float, default=S, help="l2,p exponent")
    p.add_argument("--q", type=float, default=S, help="personalized threshold")
    p.add_argument("--global-fraction", type=float, default=S)
    p.add_argument("--graph-k", type=int, default=S)
    p.add_argument("--sigma", type=float, default=S, help="kernel width (default: automatic)")
    p.add_argument("--max-iter", type=int, default=S)
    p.add_argument("--tol", type=float, default=S, help="relative objective change to stop at")


def _add_cv_flags(p):
    S = argparse.SUPPRESS
    p.add_argument("--folds", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--candidate-k", type=int, default=S)
    p.add_argument("--final-k", type=int, default=S)
    p.add_argument("--predictor", choices=("two-stage", "mlknn"), default=S)
    p.add_argument("--workers", type=int, default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpmfs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def common(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON file of default settings")
        p.add_argument("--out", default=S, help="output file")
        return p

    p = common("select", "learn W on the full dataset and write the feature selection")
    _add_data_flags(p)
    _add_model_flags(p)

    p = common("evaluate", "cross-validate the selection with the per-label KNN protocol")
    _add_data_flags(p)
    _add_model_flags(p)
    _add_cv_flags(p)

    p = common("sweep-q", "cross-validate over several personalized thresholds q")
    _add_data_flags(p)
    _add_model_flags(p)
    _add_cv_flags(p)
    p.add_argument("--q-values", type=float, nargs="+", default=S)

    p = common("sensitivity", "average precision over a (parameter value x global fraction) grid")
    _add_data_flags(p)
    _add_model_flags(p)
    _add_cv_flags(p)
    p.add_argument("--param", choices=tuple(PARAM_FLAGS), required=True)
    p.add_argument("--values", type=float, nargs="+", default=S)
    p.add_argument("--fractions", type=float, nargs="+", default=S)

    p = common("trace", "objective value per iteration on the full dataset")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--dump-structures", default=S, metavar="DIR",
                   help="also write P, S and L as CSV files into DIR")

    p = common("stats", "Friedman test and Bonferroni-Dunn critical difference")
    p.add_argument("--scores", required=True, help="CSV table, one row per dataset, one column per method")
    p.add_argument("--q-alpha", type=float, default=S)
    p.add_argument("--critical-value", type=float, default=S)
    p.add_argument("--alpha-level", type=float, default=S)
    p.add_argument("--lower-is-better", action="store_true", default=S)
    p.add_argument("--control", default=S, help="control method name (default: best average rank)")
    return parser


_DEFAULT_NAMES = {"select": "selection.json", "evaluate": "cv_report.json",
                  "sweep-q": "sweep_q.csv", "sensitivity": "sensitivity.csv",
                  "trace": "trace.csv", "stats": "stats.json"}


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    merged = dict(DEFAULTS)
    if getattr(ns, "config", None):
        try:
            file_cfg = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"config file {ns.config}: {exc.msg}", exc.lineno) from None
        if not isinstance(file_cfg, dict):
            raise ArgumentError("config file must hold a JSON object")
        file_cfg = {k.replace("-", "_"): v for k, v in file_cfg.items()}
        if "lambda" in file_cfg:
            file_cfg["lam"] = file_cfg.pop("lambda")
        merged.update(file_cfg)
    merged.update({k: v for k, v in vars(ns).items() if k not in ("config", "log_level")})

    hp = {}
    for key, name in HYPER_FIELDS.items():
        if merged.get(key) is not None:
            hp[name] = merged[key]
    try:
        params = HyperParams(**hp)
    except TypeError as exc:
        raise ArgumentError(str(exc)) from None

    command = ns.command
    dataset = merged.get("dataset")
    if command != "stats":
        if not dataset:
            raise ArgumentError("--dataset is required")
        fmt = merged["format"]
        if fmt not in FORMATS:
            raise ArgumentError(f"unknown format {fmt!r}")
        has_xml = merged.get("xml") is not None
        has_count = merged.get("label_count") is not None
        if fmt == "arff-with-xml" and (not has_xml or has_count):
            raise ArgumentError("format arff-with-xml takes --xml and no --label-count")
        if fmt != "arff-with-xml" and (not has_count or has_xml):
            raise ArgumentError(f"format {fmt} takes --label-count and no --xml")
    for key in ("folds", "candidate_k", "final_k", "workers"):
        if int(merged[key]) < 1:
            raise ArgumentError(f"--{key.replace('_', '-')} must be a positive integer")
    extra = {}
    if command == "sweep-q":
        extra["q_values"] = [float(v) for v in merged["q_values"]]
        for q in extra["q_values"]:
            if not 0 <= q <= 1:
                raise ArgumentError(f"q values must lie in [0, 1], got {q}")
    if command == "sensitivity":
        extra["param"] = merged["param"]
        extra["values"] = [float(v) for v in merged["values"]]
        extra["fractions"] = [float(v) for v in merged["fractions"]]
        for v in extra["values"]:
            if not v >= 0:
                raise ArgumentError(f"--{merged['param']} values must be nonnegative, got {v}")
        for f in extra["fractions"]:
            if not 0 < f <= 1:
                raise ArgumentError(f"global fractions must lie in (0, 1], got {f}")
    if command == "trace":
        extra["dump_structures"] = merged.get("dump_structures")
    if command == "stats":
        extra.update(scores=merged["scores"], q_alpha=float(merged["q_alpha"]),
                     critical_value=float(merged["critical_value"]),
                     alpha_level=float(merged["alpha_level"]),
                     lower_is_better=bool(merged["lower_is_better"]), control=merged["control"])
    out = merged.get("out")
    if out is None:
        out = Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / _DEFAULT_NAMES[command]
    return RunConfig(
        command=command,
        dataset_path=Path(dataset) if dataset else None,
        format=merged["format"],
        xml_path=Path(merged["xml"]) if merged.get("xml") else None,
        label_count=int(merged["label_count"]) if merged.get("label_count") is not None else None,
        params=params,
        folds=int(merged["folds"]),
        seed=int(merged["seed"]),
        candidate_k=int(merged["candidate_k"]),
        final_k=int(merged["final_k"]),
        predictor=merged["predictor"],
        workers=int(merged["workers"]),
        out=Path(out),
        extra=extra,
    )


# --------------------------------------------------------------------------- output

def _document(kind: str, config: RunConfig, body: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "generator": f"gpmfs {__version__}",
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config.echo(),
        **body,
    }


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _load(config: RunConfig):
    return load_dataset(config.dataset_path, config.format, config.xml_path, config.label_count)


def _full_fit(config: RunConfig):
    ds = _load(config)
    ds = apply_standardizer(ds, fit_standardizer(ds))
    n = ds.n_instances
    if n < 2:
        raise ArgumentError("need at least two instances")
    P = pearson_matrix(ds.features)
    graph = knn_affinity(ds.features, min(config.params.graph_k, n - 1), config.params.sigma)
    Lap = laplacian(graph)
    state = solve(ds, (P, Lap), config.params)
    return ds, (P, graph.similarities, Lap), state


# --------------------------------------------------------------------------- commands

def cmd_select(config: RunConfig) -> Path:
    ds, _, state = _full_fit(config)
    sel = select_features(state.W, config.params.global_fraction, config.params.q)
    names = ds.feature_names

    def named(idx):
        return [{"index": int(i), "name": names[i]} for i in idx]

    body = {
        "n_instances": ds.n_instances,
        "n_features": ds.n_features,
        "n_labels": ds.n_labels,
        "global": [dict(f, norm=float(sel.row_norms[f["index"]])) for f in named(sel.global_)],
        "personalized": [{"label": ds.label_names[i], "features": named(pf)}
                         for i, pf in enumerate(sel.personalized)],
        "complete": [{"label": ds.label_names[i], "features": named(cf)}
                     for i, cf in enumerate(sel.complete)],
        "row_norms": [float(v) for v in sel.row_norms],
        "objective_trace": [float(v) for v in state.trace],
        "summary": {
            "global_size": len(sel.global_),
            "mean_personalized": sel.mean_personalized(),
            "personalized_proportion": sel.personalized_proportion(),
            "iterations": state.n_iter,
            "converged": state.converged,
        },
    }
    _write_json(config.out, _document("selection", config, body))
    return config.out


def cmd_evaluate(config: RunConfig) -> Path:
    ds = _load(config)
    report = cross_validate(ds, config.params, config.folds, config.seed, config.candidate_k,
                            config.final_k, config.predictor, config.workers)
    _write_json(config.out, _document("cv_report", config, report.to_dict()))
    _write_csv(config.out.with_suffix(".csv"), report.csv_rows())
    return config.out


def cmd_sweep_q(config: RunConfig) -> Path:
    ds = _load(config)
    qs = config.extra["q_values"]
    frac = config.params.global_fraction
    reports = cross_validate_grid(ds, config.params, config.folds, config.seed,
                                  [(q, frac) for q in qs], config.candidate_k, config.final_k,
                                  config.predictor, config.workers)
    rows = [["q", "mean_personalized", *METRIC_NAMES]]
    for q, rep in zip(qs, reports):
        rows.append([q, rep.mean_selection_stats()["mean_personalized"],
                     *(getattr(rep.mean, m) for m in METRIC_NAMES)])
    _write_csv(config.out, rows)
    return config.out


def cmd_sensitivity(config: RunConfig) -> Path:
    ds = _load(config)
    param = config.extra["param"]
    fractions = config.extra["fractions"]
    rows = [["param", "value", "global_fraction", "average_precision"]]
    for value in config.extra["values"]:
        params = config.params.with_(**{PARAM_FLAGS[param]: value})
        reports = cross_validate_grid(ds, params, config.folds, config.seed,
                                      [(params.q, f) for f in fractions], config.candidate_k,
                                      config.final_k, config.predictor, config.workers)
        for f, rep in zip(fractions, reports):
            rows.append([param, value, f, rep.mean.average_precision])
    _write_csv(config.out, rows)
    return config.out


def cmd_trace(config: RunConfig) -> Path:
    _, (P, S, Lap), state = _full_fit(config)
    _write_csv(config.out, [["iteration", "objective"]]
               + [[i + 1, repr(float(v))] for i, v in enumerate(state.trace)])
    dump = config.extra.get("dump_structures")
    if dump:
        d = Path(dump)
        d.mkdir(parents=True, exist_ok=True)
        for name, mat in (("P", P), ("S", S), ("L", Lap)):
            np.savetxt(d / f"{name}.csv", mat, delimiter=",", fmt="%.17g")
    return config.out


def read_score_table(text: str, lower_is_better: bool = False) -> RankTable:
    """Parse ``dataset,method1,method2,...`` rows; the header names the methods."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if len(rows) < 3:
        raise ParseError("score table needs a header and at least two dataset rows")
    header = [c.strip() for c in rows[0]]
    methods = header[1:]
    datasets, values = [], []
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise ParseError(f"expected {len(header)} columns, found {len(r)}", lineno)
        datasets.append(r[0].strip())
        try:
            values.append([float(v) for v in r[1:]])
        except ValueError:
            raise ParseError("non-numeric score", lineno) from None
    return RankTable(np.array(values), higher_is_better=not lower_is_better,
                     methods=tuple(methods), datasets=tuple(datasets))


def stats_report(table: RankTable, q_alpha: float, critical_value: float,
                 control: str | None = None) -> dict:
    R = average_ranks(table)
    chi2, ff = friedman_statistic(table)
    if control is None:
        ci = int(np.argmin(R))
    elif control in table.methods:
        ci = table.methods.index(control)
    else:
        raise ArgumentError(f"control method {control!r} not in table {list(table.methods)}")
    cd = bonferroni_dunn_cd(q_alpha, table.n_methods, table.n_datasets)
    sig = compare_to_control(table, ci, q_alpha)
    return {
        "n_datasets": table.n_datasets,
        "n_methods": table.n_methods,
        "methods": list(table.methods),
        "higher_is_better": table.higher_is_better,
        "average_ranks": [float(v) for v in R],
        "chi2_f": chi2,
        "f_f": None if np.isinf(ff) else ff,
        "f_f_degenerate": bool(np.isinf(ff)),
        "critical_value": critical_value,
        "reject_null": bool(np.isinf(ff) or ff > critical_value),
        "q_alpha": q_alpha,
        "cd": cd,
        "control": table.methods[ci],
        "significant_vs_control": {m: s for m, s in zip(table.methods, sig)},
    }


def cmd_stats(config: RunConfig) -> Path:
    text = Path(config.extra["scores"]).read_text(encoding="utf-8")
    table = read_score_table(text, config.extra["lower_is_better"])
    body = stats_report(table, config.extra["q_alpha"], config.extra["critical_value"],
                        config.extra["control"])
    body["alpha_level"] = config.extra["alpha_level"]
    _write_json(config.out, _document("stats", config, body))
    return config.out


COMMANDS = {"select": cmd_select, "evaluate": cmd_evaluate, "sweep-q": cmd_sweep_q,
            "sensitivity": cmd_sensitivity, "trace": cmd_trace, "stats": cmd_stats}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(ns.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(ns)
        out = COMMANDS[ns.command](config)
    except NumericalError as exc:
        print(f"gpmfs: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (GPMFSError, ValueError) as exc:
        print(f"gpmfs: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"gpmfs: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
