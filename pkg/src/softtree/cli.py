"""Command-line pipeline: distill, train, predict, eval, gridsearch, exports.

Every subcommand resolves its settings as defaults < --config JSON <
explicit flags, writes outputs atomically, and drops a sidecar
``<out>.manifest.json`` (input hashes, seed, resolved settings) next to
each artifact. All randomness flows from --seed, so identical invocations
produce byte-identical files.

Exit codes: 0 ok, 1 usage/config, 2 data, 3 internal.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .dataset import Dataset, load_csv, load_features_csv
from .distill import DistillConfig, direct_distill, jackknife_distill
from .errors import ConfigError, DataError
from .evaluate import (
    DEFAULT_ALPHA_GRID,
    ExperimentConfig,
    run_experiment,
)
from .teacher import (
    BUILTIN_RANDOM_FOREST,
    SoftLabelTable,
    TeacherSpec,
    load_external_soft_labels,
)
from .tree import (
    TreeConfig,
    fit,
    load_tree,
    predict_logits_matrix,
    rules_text,
    save_tree,
    tree_from_nodes,
    tree_to_nodes,
)
from .util import atomic_write_text, canonical_json, pretty_json, sha256_file, sha256_text


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems surface as exit code 1
        raise ConfigError(message)


def _add_data_flags(p):
    p.add_argument("--data", help="input CSV with a header row")
    p.add_argument("--label", help="name of the label column")
    p.add_argument("--categorical", help="comma-separated categorical column names")


def _add_common_flags(p):
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--config", help="JSON file with defaults for this subcommand")
    p.add_argument("--jobs", type=int, help="worker processes (default 1; never changes outputs)")


def build_parser() -> _Parser:
    parser = _Parser(prog="softtree", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("distill", parents=[], help="write held-out soft labels for a dataset")
    _add_data_flags(p)
    _add_common_flags(p)
    p.add_argument("--folds", type=int, help="number of jackknife folds (default 5)")
    p.add_argument("--repeats", type=int, help="independent partitions to average (default 5)")
    p.add_argument("--teacher", help="teacher kind; only 'rf' is fittable (default rf)")
    p.add_argument("--n-trees", type=int, help="forest size (default 100)")
    p.add_argument("--min-leaf", type=int, help="teacher minimum leaf size (default 5)")
    p.add_argument("--direct", action="store_const", const=True,
                   help="fit on all rows instead of held-out folds (overfit baseline)")
    p.add_argument("--out", help="output soft-label CSV")
    p.set_defaults(func=cmd_distill, defaults=DISTILL_DEFAULTS)

    p = sub.add_parser("train", help="fit a tree on a dataset plus a soft-label table")
    _add_data_flags(p)
    _add_common_flags(p)
    p.add_argument("--soft-labels", help="CSV of index,p_0,...,p_{K-1}")
    p.add_argument("--temperature", type=float,
                   help="treat soft-label rows as raw scores and soften them")
    p.add_argument("--alpha", type=float, help="hard-label weight in [0,1] (default 0.2)")
    p.add_argument("--min-leaf", type=int, help="minimum splittable node size (default 5)")
    p.add_argument("--criterion", choices=["gini", "entropy"], help="impurity (default gini)")
    p.add_argument("--max-depth", type=int, help="optional depth guard")
    p.add_argument("--out", help="output tree JSON")
    p.set_defaults(func=cmd_train, defaults=TRAIN_DEFAULTS)

    p = sub.add_parser("predict", help="route a feature CSV through a trained tree")
    _add_common_flags(p)
    p.add_argument("--data", help="input CSV; label column, if present, is ignored")
    p.add_argument("--tree", help="tree JSON written by train")
    p.add_argument("--out", help="output CSV of index,prediction,p_0,...")
    p.set_defaults(func=cmd_predict, defaults=PREDICT_DEFAULTS)

    p = sub.add_parser("eval", help="run the repeated-split experiment protocol")
    _add_data_flags(p)
    _add_common_flags(p)
    _add_eval_flags(p)
    p.add_argument("--out", help="output report JSON")
    p.add_argument("--curves", help="also write the per-alpha curve CSV here")
    p.set_defaults(func=cmd_eval, defaults=EVAL_DEFAULTS)

    p = sub.add_parser("gridsearch", help="alpha grid search; emits the per-alpha curve CSV")
    _add_data_flags(p)
    _add_common_flags(p)
    _add_eval_flags(p)
    p.add_argument("--out", help="output curve CSV")
    p.add_argument("--report", help="also write the full report JSON here")
    p.set_defaults(func=cmd_gridsearch, defaults=EVAL_DEFAULTS)

    p = sub.add_parser("export-rules", help="write one decision path per leaf as text")
    _add_common_flags(p)
    p.add_argument("--tree", help="tree JSON written by train")
    p.add_argument("--out", help="output rules text file")
    p.set_defaults(func=cmd_export_rules, defaults=EXPORT_DEFAULTS)

    p = sub.add_parser("export-tree", help="re-emit a tree JSON canonically (round-trip check)")
    _add_common_flags(p)
    p.add_argument("--tree", help="tree JSON written by train")
    p.add_argument("--out", help="output tree JSON")
    p.set_defaults(func=cmd_export_tree, defaults=EXPORT_DEFAULTS)

    return parser


def _add_eval_flags(p):
    p.add_argument("--runs", type=int, help="number of repeated runs (default 10)")
    p.add_argument("--test-fraction", type=float, help="test share per run (default 0.3)")
    p.add_argument("--alpha-grid", help="comma separated, default 0,0.1,...,1")
    p.add_argument("--alpha-selection", choices=["validation", "test_oracle"],
                   help="how the winning alpha is chosen (default validation)")
    p.add_argument("--folds", type=int, help="jackknife folds (default 5)")
    p.add_argument("--repeats", type=int, help="jackknife repeats (default 5)")
    p.add_argument("--n-trees", type=int, help="teacher forest size (default 100)")
    p.add_argument("--min-leaf", type=int, help="minimum splittable node size (default 5)")
    p.add_argument("--criterion", choices=["gini", "entropy"], help="impurity (default gini)")
    p.add_argument("--soft-labels", help="external soft-label CSV instead of a fitted teacher")
    p.add_argument("--temperature", type=float,
                   help="soften external raw scores with this temperature")


DISTILL_DEFAULTS = {
    "data": None, "label": None, "categorical": None, "seed": 0, "jobs": 1,
    "folds": 5, "repeats": 5, "teacher": "rf", "n_trees": 100, "min_leaf": 5,
    "direct": False, "out": None,
}
TRAIN_DEFAULTS = {
    "data": None, "label": None, "categorical": None, "seed": 0, "jobs": 1,
    "soft_labels": None, "temperature": None, "alpha": 0.2, "min_leaf": 5,
    "criterion": "gini", "max_depth": None, "out": None,
}
PREDICT_DEFAULTS = {"data": None, "tree": None, "out": None, "seed": 0, "jobs": 1}
EVAL_DEFAULTS = {
    "data": None, "label": None, "categorical": None, "seed": 0, "jobs": 1,
    "runs": 10, "test_fraction": 0.3, "alpha_grid": None,
    "alpha_selection": "validation", "folds": 5, "repeats": 5, "n_trees": 100,
    "min_leaf": 5, "criterion": "gini", "soft_labels": None, "temperature": None,
    "out": None, "curves": None, "report": None,
}
EXPORT_DEFAULTS = {"tree": None, "out": None, "seed": 0, "jobs": 1}


def resolve_settings(args, defaults: dict) -> dict:
    """defaults < --config file < explicitly passed flags."""
    settings = dict(defaults)
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise ConfigError(f"config file not found: {args.config}")
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                overrides = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from None
        unknown = set(overrides) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        settings.update(overrides)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _require(settings: dict, *keys: str):
    for key in keys:
        if settings.get(key) in (None, ""):
            raise ConfigError(f"--{key.replace('_', '-')} is required")


def _load_dataset(settings) -> Dataset:
    _require(settings, "data", "label")
    categorical = settings.get("categorical")
    if isinstance(categorical, str):
        categorical = [c for c in categorical.split(",") if c]
    return load_csv(settings["data"], settings["label"], categorical)


def _write_manifest(out_path: str, kind: str, settings: dict, inputs: list[str],
                    extra: dict | None = None) -> None:
    manifest = {
        "artifact": os.path.basename(out_path),
        "kind": kind,
        "seed": settings.get("seed"),
        "settings": settings,
        "settings_sha256": sha256_text(canonical_json(settings)),
        "inputs": {p: sha256_file(p) for p in inputs if p},
        "tool": {"name": "softtree", "version": __version__},
    }
    if extra:
        manifest.update(extra)
    atomic_write_text(out_path + ".manifest.json", pretty_json(manifest))


def cmd_distill(args) -> int:
    settings = resolve_settings(args, args.defaults)
    _require(settings, "out")
    if settings["teacher"] not in ("rf", BUILTIN_RANDOM_FOREST):
        raise ConfigError(f"only the built-in forest teacher is fittable, got {settings['teacher']!r}")
    ds = _load_dataset(settings)
    spec = TeacherSpec(n_trees=settings["n_trees"], min_leaf=settings["min_leaf"],
                       seed=settings["seed"])
    if settings["direct"]:
        table = direct_distill(ds, spec, n_jobs=settings["jobs"])
    else:
        cfg = DistillConfig(folds=settings["folds"], repeats=settings["repeats"],
                            teacher=spec, seed=settings["seed"])
        table = jackknife_distill(ds, cfg, n_jobs=settings["jobs"])
    table.save_csv(settings["out"])
    _write_manifest(settings["out"], "soft_labels", settings, [settings["data"]],
                    {"dataset": ds.metadata()})
    return 0


def cmd_train(args) -> int:
    settings = resolve_settings(args, args.defaults)
    _require(settings, "soft_labels", "out")
    ds = _load_dataset(settings)
    table = load_external_soft_labels(settings["soft_labels"], ds, settings["temperature"])
    cfg = TreeConfig(min_leaf=settings["min_leaf"], alpha=settings["alpha"],
                     criterion=settings["criterion"], max_depth=settings["max_depth"],
                     seed=settings["seed"])
    tree = fit(ds, table, cfg)
    save_tree(settings["out"], tree, config=cfg, dataset_meta=ds.metadata())
    _write_manifest(settings["out"], "tree", settings,
                    [settings["data"], settings["soft_labels"]])
    return 0


def cmd_predict(args) -> int:
    settings = resolve_settings(args, args.defaults)
    _require(settings, "data", "tree", "out")
    tree, payload = load_tree(settings["tree"])
    meta = payload.get("dataset")
    if not meta:
        raise DataError("tree file has no dataset metadata; cannot encode input")
    X = load_features_csv(settings["data"], meta)
    logits = predict_logits_matrix(tree, X)
    label_names = meta.get("label_names") or [str(c) for c in range(logits.shape[1])]
    header = "index,prediction," + ",".join(f"p_{k}" for k in range(logits.shape[1]))
    lines = [header]
    for i, row in enumerate(logits):
        pred = label_names[int(np.argmax(row))]
        lines.append(f"{i},{pred}," + ",".join(repr(float(v)) for v in row))
    atomic_write_text(settings["out"], "\n".join(lines) + "\n")
    _write_manifest(settings["out"], "predictions", settings,
                    [settings["data"], settings["tree"]])
    return 0


def _experiment_config(settings) -> ExperimentConfig:
    grid = settings["alpha_grid"]
    if isinstance(grid, str):
        try:
            grid = tuple(float(a) for a in grid.split(",") if a)
        except ValueError:
            raise ConfigError(f"bad alpha grid: {settings['alpha_grid']!r}") from None
    elif isinstance(grid, list):
        grid = tuple(float(a) for a in grid)
    elif grid is None:
        grid = DEFAULT_ALPHA_GRID
    teacher = TeacherSpec(n_trees=settings["n_trees"], min_leaf=settings["min_leaf"])
    return ExperimentConfig(
        distill=DistillConfig(folds=settings["folds"], repeats=settings["repeats"],
                              teacher=teacher),
        tree=TreeConfig(min_leaf=settings["min_leaf"], criterion=settings["criterion"]),
        alpha_grid=grid,
        n_runs=settings["runs"],
        test_fraction=settings["test_fraction"],
        alpha_selection=settings["alpha_selection"],
        seed=settings["seed"],
        external_soft_labels=settings["soft_labels"],
        external_temperature=settings["temperature"],
    )


def cmd_eval(args) -> int:
    settings = resolve_settings(args, args.defaults)
    _require(settings, "out")
    ds = _load_dataset(settings)
    report = run_experiment(ds, _experiment_config(settings), n_jobs=settings["jobs"])
    atomic_write_text(settings["out"], pretty_json(report.to_dict()))
    _write_manifest(settings["out"], "report", settings, [settings["data"]],
                    {"dataset": ds.metadata()})
    if settings.get("curves"):
        report.save_curves_csv(settings["curves"])
        _write_manifest(settings["curves"], "curves", settings, [settings["data"]])
    return 0


def cmd_gridsearch(args) -> int:
    settings = resolve_settings(args, args.defaults)
    _require(settings, "out")
    ds = _load_dataset(settings)
    report = run_experiment(ds, _experiment_config(settings), n_jobs=settings["jobs"])
    report.save_curves_csv(settings["out"])
    _write_manifest(settings["out"], "curves", settings, [settings["data"]])
    if settings.get("report"):
        atomic_write_text(settings["report"], pretty_json(report.to_dict()))
        _write_manifest(settings["report"], "report", settings, [settings["data"]])
    return 0


def cmd_export_rules(args) -> int:
    settings = resolve_settings(args, args.defaults)
    _require(settings, "tree", "out")
    tree, payload = load_tree(settings["tree"])
    meta = payload.get("dataset") or {}
    text = rules_text(tree, meta.get("feature_names"), meta.get("label_names"))
    atomic_write_text(settings["out"], text)
    _write_manifest(settings["out"], "rules", settings, [settings["tree"]])
    return 0


def cmd_export_tree(args) -> int:
    settings = resolve_settings(args, args.defaults)
    _require(settings, "tree", "out")
    tree, payload = load_tree(settings["tree"])
    reencoded = tree_to_nodes(tree_from_nodes(tree_to_nodes(tree)))
    if reencoded != tree_to_nodes(tree):
        raise DataError("tree did not survive a round trip; file may be corrupt")
    payload["nodes"] = reencoded
    atomic_write_text(settings["out"], pretty_json(payload))
    _write_manifest(settings["out"], "tree", settings, [settings["tree"]])
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        _report_error("usage", exc)
        return 1
    except DataError as exc:
        _report_error("data", exc)
        return 2
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # anything unplanned is an internal error
        _report_error("internal", exc)
        return 3


def _report_error(kind: str, exc: BaseException) -> None:
    message = " ".join(str(exc).split())
    print(f"error: {kind}: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
