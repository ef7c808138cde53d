"""Command-line entry point wiring the pipeline stages into reproducible runs.

Every run writes a manifest (config, input/output digests, tool version)
next to its artifacts. All randomness flows from --seed; reruns with the
same arguments produce byte-identical artifacts.

Exit codes: 0 success, 1 usage error, 2 data/format error,
3 numeric/training failure. Diagnostics go to stderr as one JSON line.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import evalkit, featurex, learners, shaptrees, synthgen
from .evalkit import MetricError, ScoredSet, SearchSpace
from .learners import ConvergenceError, ModelFormatError, ParamError, TrainingError
from .scene import PackError, SceneError, read_pack, write_pack
from .synthgen import ConfigError, GenConfig


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise UsageError(message)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _write_manifest(out_dir: Path, command: str, config: dict, inputs: dict, outputs: dict) -> Path:
    manifest = {
        "tool": "plumescreen",
        "version": __version__,
        "command": command,
        "created_utc": datetime.now(timezone.utc).isoformat(),  # not part of any digest
        "config": config,
        "inputs": {k: {"path": str(v), "sha256": _sha256(v)} for k, v in inputs.items()},
        "outputs": {k: {"path": str(v), "sha256": _sha256(v)} for k, v in outputs.items()},
    }
    path = out_dir / f"{command}_manifest.json"
    _write_json(path, manifest)
    return path


def _out_dir(args) -> Path:
    out = Path(getattr(args, "out_dir", ".") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("PLUME_SCREEN_THREADS", "1")),
        help="worker-parallelism cap; results are independent of it",
    )
    p.add_argument("--out-dir", default=".")


def build_parser() -> _Parser:
    parser = _Parser(prog="plumescreen", description=__doc__)
    parser.add_argument("--version", action="version", version=f"plumescreen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic scene pack")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument(
        "--mode",
        choices=("mixed", "score-only"),
        default="mixed",
        help="'score-only' is the diagnostic set where only the encoded CNN score separates classes",
    )
    p.add_argument("--plume-fraction", type=float, default=0.5)
    p.add_argument("--enhancement-scale", type=float, default=40.0)
    p.add_argument("--noise-ppb", type=float, default=12.0)
    p.add_argument("--wind-lo", type=float, default=1.0)
    p.add_argument("--wind-hi", type=float, default=9.0)
    p.add_argument("--artifact-mix", type=str, default=None, help="JSON weights per artifact kind")
    p.add_argument("--config", type=str, default=None, help="full GenConfig as a JSON file")
    p.add_argument("--out", required=True, help="output pack path")

    p = sub.add_parser("extract", help="extract the 41-feature matrix from a pack")
    _add_common(p)
    p.add_argument("--pack", required=True)
    p.add_argument("--out", required=True, help="feature CSV path")
    p.add_argument("--log", default=None, help="extraction log JSONL path")

    p = sub.add_parser("train", help="train one classifier on a feature CSV")
    _add_common(p)
    p.add_argument("--features", required=True)
    p.add_argument("--kind", required=True, choices=learners.MODEL_KINDS)
    p.add_argument("--params", default=None, help="hyperparameter JSON file (default: best-found)")
    p.add_argument("--out", required=True, help="model JSON path")

    for name, descr in (
        ("cv", "random search under stratified k-fold CV"),
        ("search", "alias of cv that prints the best parameters"),
    ):
        p = sub.add_parser(name, help=descr)
        _add_common(p)
        p.add_argument("--features", required=True)
        p.add_argument("--kind", required=True, choices=learners.MODEL_KINDS)
        p.add_argument("--space", default=None, help="search-space JSON (default: packaged)")
        p.add_argument("--trials", type=int, default=60)
        p.add_argument("--k", type=int, default=5)

    p = sub.add_parser("eval", help="score a feature CSV and report metrics")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)

    p = sub.add_parser("explain", help="TreeSHAP attributions for a feature CSV")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--limit", type=int, default=None, help="explain only the first N rows")

    p = sub.add_parser("report", help="combine cv/eval reports into one JSON")
    _add_common(p)
    p.add_argument("inputs", nargs="+", help="report JSON files")
    p.add_argument("--out", required=True)
    return parser


def _load_features(path):
    ids, labels, X = featurex.read_feature_csv(path)
    return ids, labels, X


def _cmd_generate(args) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.mode == "score-only":
        if args.n is None:
            raise UsageError("generate requires --n")
        patches = synthgen.generate_score_only(
            seed=args.seed, n_scenes=args.n, plume_fraction=args.plume_fraction
        )
        write_pack(patches, out)
        cfg = {
            "mode": "score-only",
            "seed": args.seed,
            "n_scenes": args.n,
            "plume_fraction": args.plume_fraction,
        }
        _write_manifest(_out_dir(args), "generate", cfg, {}, {"pack": out})
        return 0
    if args.config:
        config = GenConfig.from_json(args.config)
    else:
        if args.n is None:
            raise UsageError("generate requires --n (or --config)")
        mix = json.loads(args.artifact_mix) if args.artifact_mix else synthgen._default_mix()
        config = GenConfig(
            seed=args.seed,
            n_scenes=args.n,
            plume_fraction=args.plume_fraction,
            artifact_mix=mix,
            enhancement_scale_ppb=args.enhancement_scale,
            noise_ppb=args.noise_ppb,
            wind_speed_range_mps=(args.wind_lo, args.wind_hi),
        )
    patches = synthgen.generate(config)
    write_pack(patches, out)
    cfg = {
        "mode": "mixed",
        "seed": config.seed,
        "n_scenes": config.n_scenes,
        "plume_fraction": config.plume_fraction,
        "artifact_mix": dict(config.artifact_mix),
        "enhancement_scale_ppb": config.enhancement_scale_ppb,
        "noise_ppb": config.noise_ppb,
        "wind_speed_range_mps": list(config.wind_speed_range_mps),
    }
    _write_manifest(_out_dir(args), "generate", cfg, {}, {"pack": out})
    return 0


def _cmd_extract(args) -> int:
    patches = read_pack(args.pack)
    ids, labels, X, log = featurex.extract_matrix(patches)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    featurex.write_feature_csv(out, ids, labels, X)
    log_path = Path(args.log) if args.log else out.with_suffix(".log.jsonl")
    featurex.write_extraction_log(log_path, log)
    _write_manifest(
        _out_dir(args),
        "extract",
        {"pack": str(args.pack)},
        {"pack": args.pack},
        {"features": out, "log": log_path},
    )
    return 0


def _load_params(kind: str, path: str | None):
    if path is None:
        return learners.PARAM_CLASSES[kind]()
    with open(path, "r", encoding="utf-8") as f:
        return learners.params_from_dict(kind, json.load(f))


def _cmd_train(args) -> int:
    ids, labels, X = _load_features(args.features)
    y = featurex.labels_to_binary(labels)
    params = _load_params(args.kind, args.params)
    model = learners.train(
        args.kind, X, y, params, seed=args.seed,
        feature_names=list(featurex.FEATURE_NAMES), threads=args.threads,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    learners.save_model(model, out)
    _write_manifest(
        _out_dir(args),
        "train",
        {"kind": args.kind, "seed": args.seed, "params": learners.params_to_dict(params)},
        {"features": args.features},
        {"model": out},
    )
    return 0


def _make_trainer(kind: str, threads: int):
    def trainer(params_dict, X, y, seed):
        params = learners.params_from_dict(kind, params_dict)
        return learners.train(
            kind, X, y, params, seed=seed,
            feature_names=list(featurex.FEATURE_NAMES), threads=threads,
        )

    return trainer


def _cmd_cv(args, print_best: bool) -> int:
    ids, labels, X = _load_features(args.features)
    y = featurex.labels_to_binary(labels)
    space = SearchSpace.from_json(args.space) if args.space else evalkit.load_space(args.kind)
    trainer = _make_trainer(args.kind, threads=1)
    best_params, trials = evalkit.random_search(
        space, args.trials, trainer, X, y, k=args.k, seed=args.seed, threads=args.threads
    )
    out_dir = _out_dir(args)
    trials_path = out_dir / f"{args.kind}_trials.csv"
    evalkit.write_trial_log_csv(trials_path, trials)
    best = max(
        (t for t in trials if t.error is None),
        key=lambda t: (t.mean_ap, -t.trial),
    )
    report = evalkit.cv_report(args.kind, best.fold_metrics)
    report_path = out_dir / f"{args.kind}_cv_report.json"
    _write_json(report_path, report)
    best_path = out_dir / f"{args.kind}_best_params.json"
    _write_json(best_path, best_params)
    _write_manifest(
        out_dir,
        "cv",
        {"kind": args.kind, "seed": args.seed, "trials": args.trials, "k": args.k},
        {"features": args.features},
        {"trials": trials_path, "report": report_path, "best_params": best_path},
    )
    if print_best:
        print(json.dumps(best_params, sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    model = learners.load_model(args.model)
    ids, labels, X = _load_features(args.features)
    y = featurex.labels_to_binary(labels)
    scored = ScoredSet(scores=model.score(X), labels=y)
    report = evalkit.eval_report(model.kind, scored, model.decision_threshold)
    out_dir = _out_dir(args)
    report_path = out_dir / f"{model.kind}_metrics.json"
    _write_json(report_path, report)
    pr = evalkit.pr_curve(scored)
    roc = evalkit.roc_curve(scored)
    pr_path = out_dir / f"{model.kind}_pr_points.csv"
    roc_path = out_dir / f"{model.kind}_roc_points.csv"
    with open(pr_path, "w", encoding="utf-8") as f:
        f.write("recall,precision\n")
        for r, p in pr:
            f.write(f"{float(r)!r},{float(p)!r}\n")
    with open(roc_path, "w", encoding="utf-8") as f:
        f.write("fpr,tpr\n")
        for x_, y_ in roc:
            f.write(f"{float(x_)!r},{float(y_)!r}\n")
    _write_manifest(
        out_dir,
        "eval",
        {"model": str(args.model)},
        {"model": args.model, "features": args.features},
        {"metrics": report_path, "pr_points": pr_path, "roc_points": roc_path},
    )
    return 0


def _cmd_explain(args) -> int:
    model = learners.load_model(args.model)
    ids, labels, X = _load_features(args.features)
    if args.limit is not None:
        ids, X = ids[: args.limit], X[: args.limit]
    attributions = shaptrees.explain_matrix(model, X)
    stats = shaptrees.summarize(attributions, model.feature_names)
    out_dir = _out_dir(args)
    att_path = out_dir / f"{model.kind}_attributions.csv"
    bee_path = out_dir / f"{model.kind}_beeswarm.csv"
    sum_path = out_dir / f"{model.kind}_shap_summary.csv"
    shaptrees.write_attribution_csv(att_path, ids, attributions, model.feature_names)
    shaptrees.write_beeswarm_csv(bee_path, ids, attributions, model.feature_names)
    shaptrees.write_summary_csv(sum_path, stats)
    _write_manifest(
        out_dir,
        "explain",
        {"model": str(args.model), "limit": args.limit},
        {"model": args.model, "features": args.features},
        {"attributions": att_path, "beeswarm": bee_path, "summary": sum_path},
    )
    return 0


def _cmd_report(args) -> int:
    reports = []
    for path in args.inputs:
        with open(path, "r", encoding="utf-8") as f:
            reports.append(json.load(f))
    combined = evalkit.combine_reports(reports)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_json(out, combined)
    _write_manifest(
        _out_dir(args),
        "report",
        {"inputs": [str(p) for p in args.inputs]},
        {f"input{i}": p for i, p in enumerate(args.inputs)},
        {"combined": out},
    )
    return 0


_DATA_ERRORS = (
    PackError,
    SceneError,
    ConfigError,
    ModelFormatError,
    ParamError,
    MetricError,
    FileNotFoundError,
    json.JSONDecodeError,
    UnicodeDecodeError,
    ValueError,
)
_TRAIN_ERRORS = (ConvergenceError, TrainingError, FloatingPointError, ArithmeticError)


def _diagnose(code: int, exc: BaseException) -> int:
    print(
        json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}),
        file=sys.stderr,
    )
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _diagnose(1, exc)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "extract":
            return _cmd_extract(args)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "cv":
            return _cmd_cv(args, print_best=False)
        if args.command == "search":
            return _cmd_cv(args, print_best=True)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "explain":
            return _cmd_explain(args)
        if args.command == "report":
            return _cmd_report(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        return _diagnose(1, exc)
    except _TRAIN_ERRORS as exc:
        return _diagnose(3, exc)
    except RuntimeError as exc:
        return _diagnose(3, exc)
    except _DATA_ERRORS as exc:
        return _diagnose(2, exc)


if __name__ == "__main__":
    sys.exit(main())
