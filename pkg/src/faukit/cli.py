"""Command-line entry point.

Subcommands: gen-data, train, eval, explain, coverage, inspect. Options can
also come from a JSON config file (--config); explicit flags win over config
values, config values win over the FAUKIT_SEED environment fallback, and
unknown config keys are rejected by name. Paths inside a config file resolve
relative to that file.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FaukitError, UsageError
from .estimator import head_estimator, layer_specs_for_head, load_model
from .experiments import (
    consistency_from_dataset,
    evaluate_au_readout,
    evaluate_emotions,
    explain_records,
)
from .facs import EmotionLabel, coverage, load_rules, load_vocabulary
from .featureio import read_features
from .metrics import EvaluationReport
from .synth import (
    FEATURE_KINDS,
    KIND_HEATMAP,
    KIND_PROBVEC,
    GenConfig,
    generate_dataset,
    load_dataset,
    save_split_manifests,
)

_REQUIRED = object()

_HEADS = ("heatmap5", "probvec1")
_DEFAULT_VOCABS = {KIND_PROBVEC: "disfa8", KIND_HEATMAP: "heatmap10"}


class _Parser(argparse.ArgumentParser):
    """argparse parser that reports usage problems as UsageError (exit 1)."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="faukit", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"faukit {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("gen-data", help="generate a synthetic AU dataset")
    p.add_argument("--n", type=int, help="number of samples (default 700)")
    p.add_argument("--seed", type=int, help="generation seed (default 0 or FAUKIT_SEED)")
    p.add_argument("--noise", type=float, help="additive feature noise sigma (default 0)")
    p.add_argument("--spurious", type=float, help="spurious AU activation rate (default 0)")
    p.add_argument("--kind", choices=FEATURE_KINDS, help="feature kind (default probvec)")
    p.add_argument("--out", help="output directory (required)")
    p.add_argument("--vocab", help="builtin vocabulary name or JSON file (default per kind)")
    p.add_argument("--rules", help="rules file for truth labels (default builtin)")
    p.add_argument("--ratios", help="train,val,test split ratios (default 0.7,0.15,0.15)")
    p.add_argument("--config", help="JSON config file with these keys")

    p = sub.add_parser("train", help="train a classifier head")
    p.add_argument("--manifest", help="training manifest (required)")
    p.add_argument("--val-manifest", dest="val_manifest", help="validation manifest")
    p.add_argument("--head", choices=_HEADS, help="head variant (default per feature kind)")
    p.add_argument("--lr", type=float, help="learning rate (default 1e-3)")
    p.add_argument("--epochs", type=int, help="training epochs (default 100)")
    p.add_argument("--batch-size", dest="batch_size", type=int, help="minibatch size (default 32)")
    p.add_argument("--optimizer", choices=("adam", "sgd"), help="optimizer (default adam)")
    p.add_argument("--l2", type=float, help="L2 weight penalty (default 0)")
    p.add_argument("--patience", type=int, help="early-stop patience (default 10)")
    p.add_argument("--seed", type=int, help="training seed (default 0 or FAUKIT_SEED)")
    p.add_argument("--out", help="checkpoint output path (required)")
    p.add_argument("--config", help="JSON config file with these keys")

    p = sub.add_parser("eval", help="evaluate a trained model")
    p.add_argument("--model", help="checkpoint path (required)")
    p.add_argument("--manifest", help="evaluation manifest (required)")
    p.add_argument("--report", help="JSON report output path (required)")
    p.add_argument("--rules", help="rules file for the AU threshold (default builtin)")
    p.add_argument("--config", help="JSON config file with these keys")

    p = sub.add_parser("explain", help="dual-output audit of a model")
    p.add_argument("--model", help="checkpoint path (required)")
    p.add_argument("--manifest", help="manifest with AU truth (required)")
    p.add_argument("--rules", help="rules file (default builtin)")
    p.add_argument("--report", help="JSON report output path (required)")
    p.add_argument("--emotion", help="target emotion for consistency (default Happiness)")
    p.add_argument("--config", help="JSON config file with these keys")

    p = sub.add_parser("coverage", help="emotions covered by a vocabulary")
    p.add_argument("--rules", help="rules file or 'default'")
    p.add_argument("--vocab", help="builtin vocabulary name or JSON file (default disfa8)")
    p.add_argument("--config", help="JSON config file with these keys")

    p = sub.add_parser("inspect", help="summarize a feature file")
    p.add_argument("file", help="feature file path")

    return parser


def _load_config(path: str | None) -> tuple[dict, Path | None]:
    if not path:
        return {}, None
    p = Path(path)
    try:
        payload = json.loads(p.read_text())
    except FileNotFoundError:
        raise UsageError(f"config file not found: {p}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {p} is not valid JSON: {exc}") from None
    if not isinstance(payload, dict):
        raise UsageError(f"config file {p} must hold a JSON object")
    return payload, p.parent


def _merge_options(args, defaults: dict, path_keys: set[str]) -> dict:
    """flags > config file > FAUKIT_SEED (seed only) > builtin default."""
    config, config_dir = _load_config(getattr(args, "config", None))
    for key in config:
        if key not in defaults:
            raise UsageError(f"unknown config key: {key}")
    merged = {}
    for key, default in defaults.items():
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            value = flag_value
        elif key in config:
            value = config[key]
            if key in path_keys and isinstance(value, str) and config_dir is not None:
                value = str((config_dir / value).resolve())
        elif key == "seed" and os.environ.get("FAUKIT_SEED"):
            raw = os.environ["FAUKIT_SEED"]
            try:
                value = int(raw)
            except ValueError:
                raise UsageError(f"FAUKIT_SEED must be an integer, got {raw!r}") from None
        else:
            value = default
        if value is _REQUIRED:
            raise UsageError(f"missing required option --{key.replace('_', '-')}")
        merged[key] = value
    return merged


def _parse_ratios(value) -> tuple[float, float, float]:
    if isinstance(value, str):
        parts = value.split(",")
    else:
        parts = list(value)
    try:
        ratios = tuple(float(v) for v in parts)
    except (TypeError, ValueError):
        raise UsageError(f"cannot parse split ratios from {value!r}") from None
    if len(ratios) != 3:
        raise UsageError(f"expected 3 split ratios, got {len(ratios)}")
    return ratios


def _cmd_gen_data(args) -> int:
    opts = _merge_options(
        args,
        {
            "n": 700,
            "seed": 0,
            "noise": 0.0,
            "spurious": 0.0,
            "kind": KIND_PROBVEC,
            "out": _REQUIRED,
            "vocab": None,
            "rules": "default",
            "ratios": "0.7,0.15,0.15",
        },
        path_keys={"out", "vocab", "rules"},
    )
    if opts["kind"] not in FEATURE_KINDS:
        raise UsageError(f"kind must be one of {FEATURE_KINDS}, got {opts['kind']!r}")
    ratios = _parse_ratios(opts["ratios"])
    rules = load_rules(opts["rules"])
    vocab = load_vocabulary(opts["vocab"] or _DEFAULT_VOCABS[opts["kind"]])
    cfg = GenConfig(
        n_samples=int(opts["n"]),
        seed=int(opts["seed"]),
        noise_sigma=float(opts["noise"]),
        spurious_rate=float(opts["spurious"]),
    )
    ds = generate_dataset(cfg, rules, vocab, opts["kind"])
    written = save_split_manifests(ds, opts["out"], ratios, cfg.seed)
    print(f"generated {len(ds)} {ds.kind} samples over {len(vocab)} AUs")
    for name in ("full", "train", "val", "test"):
        print(f"  {name}: {written[name]}")
    return 0


def _cmd_train(args) -> int:
    opts = _merge_options(
        args,
        {
            "manifest": _REQUIRED,
            "val_manifest": None,
            "head": None,
            "lr": 1e-3,
            "epochs": 100,
            "batch_size": 32,
            "optimizer": "adam",
            "l2": 0.0,
            "patience": 10,
            "seed": 0,
            "out": _REQUIRED,
        },
        path_keys={"manifest", "val_manifest", "out"},
    )
    train = load_dataset(opts["manifest"])
    X, y = train.as_xy()
    head = opts["head"] or ("heatmap5" if train.kind == KIND_HEATMAP else "probvec1")
    if head not in _HEADS:
        raise UsageError(f"head must be one of {_HEADS}, got {head!r}")
    layer_specs_for_head(head, X.shape[1])
    X_val = y_val = None
    if opts["val_manifest"]:
        val = load_dataset(opts["val_manifest"])
        X_val, y_val = val.as_xy()
    est = head_estimator(
        head,
        learning_rate=float(opts["lr"]),
        optimizer=opts["optimizer"],
        batch_size=int(opts["batch_size"]),
        epochs=int(opts["epochs"]),
        l2_weight=float(opts["l2"]),
        patience=int(opts["patience"]) if opts["patience"] is not None else None,
        seed=int(opts["seed"]),
    )
    est.fit(X, y, X_val=X_val, y_val=y_val)
    est.save(opts["out"])
    epochs_run = len(est.history_["train_loss"])
    print(f"trained {head} for {epochs_run} epochs; checkpoint: {opts['out']}")
    if X_val is not None and est.history_["val_accuracy"]:
        best = est.history_["val_accuracy"][est.best_epoch_]
        print(f"best validation accuracy {best:.4f} at epoch {est.best_epoch_}")
    return 0


def _cmd_eval(args) -> int:
    opts = _merge_options(
        args,
        {"model": _REQUIRED, "manifest": _REQUIRED, "report": _REQUIRED, "rules": "default"},
        path_keys={"model", "manifest", "report", "rules"},
    )
    model = load_model(opts["model"])
    ds = load_dataset(opts["manifest"])
    rules = load_rules(opts["rules"])
    report = evaluate_emotions(model, ds)
    if ds.has_au_truth:
        au = evaluate_au_readout(ds, rules.threshold)
        report = EvaluationReport(
            emotion_accuracy=report.emotion_accuracy,
            confusion=report.confusion,
            au=au.au,
            threshold=au.threshold,
        )
    Path(opts["report"]).write_text(report.to_json())
    print(report.render_text(), end="")
    print(f"report written to {opts['report']}")
    return 0


def _cmd_explain(args) -> int:
    opts = _merge_options(
        args,
        {
            "model": _REQUIRED,
            "manifest": _REQUIRED,
            "rules": "default",
            "report": _REQUIRED,
            "emotion": "Happiness",
        },
        path_keys={"model", "manifest", "report", "rules"},
    )
    model = load_model(opts["model"])
    ds = load_dataset(opts["manifest"])
    rules = load_rules(opts["rules"])
    emotion = EmotionLabel.from_name(opts["emotion"])
    consistency = consistency_from_dataset(ds, rules, emotion)
    records = explain_records(model, ds, rules)
    report = EvaluationReport(consistency=consistency, threshold=rules.threshold)
    payload = report.to_dict()
    payload["records"] = [r.to_dict() for r in records]
    Path(opts["report"]).write_text(json.dumps(payload, indent=2) + "\n")
    full = sum(1 for r in records if r.match.value == "full")
    print(report.render_text(), end="")
    print(f"records: {len(records)} samples, {full} full prototype matches")
    print(f"report written to {opts['report']}")
    return 0


def _cmd_coverage(args) -> int:
    opts = _merge_options(
        args,
        {"rules": "default", "vocab": "disfa8"},
        path_keys={"rules", "vocab"},
    )
    rules = load_rules(opts["rules"])
    vocab = load_vocabulary(opts["vocab"])
    covered = coverage(rules, vocab)
    for label in sorted(covered):
        print(label.display_name)
    return 0


def _cmd_inspect(args) -> int:
    values = read_features(args.file)
    dims = "×".join(str(d) for d in values.shape)
    print(f"shape: {dims} ({values.size} values)")
    if values.ndim >= 3:
        for k in range(values.shape[0]):
            chan = values[k]
            print(
                f"channel {k}: min={chan.min():.6f} max={chan.max():.6f} mean={chan.mean():.6f}"
            )
    else:
        print(f"values: min={values.min():.6f} max={values.max():.6f} mean={values.mean():.6f}")
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "explain": _cmd_explain,
    "coverage": _cmd_coverage,
    "inspect": _cmd_inspect,
}


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("no command given")
        handler = _COMMANDS[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        print("run 'faukit --help' for details", file=sys.stderr)
        return exc.exit_code
    except FaukitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SystemExit as exc:  # argparse --help/--version
        code = exc.code if exc.code is not None else 0
        return int(code) if isinstance(code, int) else 1
    except np.linalg.LinAlgError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
