"""Experiment runners: emotion fine-tuning, AU retention, dual-output audit.

Three desk-scale experiments over synthetic (or user-supplied) AU features:

* e1: train a head on the train split, report test emotion accuracy and the
  confusion matrix.
* e2: per-AU F1/accuracy of the feature read-out against the recorded truth,
  reported before and after head training. The feature extractor is a frozen
  black box here, so the two sections coincide by construction; the report
  states that explicitly.
* e3: dual-output audit. For every test sample, record the predicted emotion
  and the AU read-out, flag whether the read-out matches the predicted
  emotion's prototype, and summarize AND/OR consistency over the samples of
  one target emotion (Happiness by default).

The AU read-out is the discrete activation set recovered from the features
themselves: thresholding for probability vectors, per-channel peak >=
threshold for heatmap stacks. Runs are deterministic per seed, and a run
owns its output directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from collections.abc import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .estimator import (
    HEAD_HEATMAP5,
    HEAD_NAMES,
    HEAD_PROBVEC1,
    BottleneckClassifier,
    head_estimator,
    layer_specs_for_head,
)
from .facs import (
    AUVocabulary,
    EmotionLabel,
    EmotionRuleSet,
    MatchResult,
    load_rules,
    load_vocabulary,
    match_emotion,
    threshold_activations,
)
from .metrics import (
    ConsistencyRates,
    EvaluationReport,
    au_consistency,
    au_metric_table,
    confusion_matrix,
    emotion_accuracy,
)
from .synth import (
    KIND_HEATMAP,
    KIND_PROBVEC,
    Dataset,
    GenConfig,
    generate_dataset,
    load_dataset,
    split_dataset,
)

DEFAULT_RATIOS = (0.7, 0.15, 0.15)

_DEFAULT_VOCAB_FOR_KIND = {KIND_PROBVEC: "disfa8", KIND_HEATMAP: "heatmap10"}
_DEFAULT_HEAD_FOR_KIND = {KIND_PROBVEC: HEAD_PROBVEC1, KIND_HEATMAP: HEAD_HEATMAP5}


def feature_activation_sets(ds: Dataset, tau: float) -> list[frozenset[int]]:
    """Discrete AU read-out per sample: active iff the feature crosses tau."""
    sets: list[frozenset[int]] = []
    if ds.kind == KIND_PROBVEC:
        for row in ds.features:
            sets.append(threshold_activations(np.clip(row, 0.0, 1.0), ds.vocab, tau))
    else:
        peaks = ds.features.max(axis=(2, 3))
        for row in peaks:
            sets.append(
                frozenset(code for code, peak in zip(ds.vocab, row) if peak >= tau)
            )
    return sets


def truth_activation_sets(ds: Dataset) -> list[frozenset[int]]:
    if not ds.has_au_truth:
        raise DataError("dataset carries no AU truth annotations")
    return [frozenset(t) for t in ds.au_truth]


def evaluate_emotions(model: BottleneckClassifier, ds: Dataset) -> EvaluationReport:
    X, y = ds.as_xy()
    preds = model.predict(X)
    return EvaluationReport(
        emotion_accuracy=emotion_accuracy(y, preds),
        confusion=confusion_matrix(y, preds),
    )


def evaluate_au_readout(ds: Dataset, tau: float) -> EvaluationReport:
    truth = truth_activation_sets(ds)
    preds = feature_activation_sets(ds, tau)
    return EvaluationReport(au=au_metric_table(truth, preds, ds.vocab), threshold=tau)


@dataclass(frozen=True)
class ExplainabilityRecord:
    """Dual outputs for one sample plus the rule-consistency flag."""

    index: int
    true_emotion: EmotionLabel
    predicted_emotion: EmotionLabel
    predicted_aus: frozenset[int]
    match: MatchResult

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "true_emotion": self.true_emotion.display_name,
            "predicted_emotion": self.predicted_emotion.display_name,
            "predicted_aus": sorted(self.predicted_aus),
            "match": self.match.value,
        }


def explain_records(
    model: BottleneckClassifier, ds: Dataset, rules: EmotionRuleSet
) -> list[ExplainabilityRecord]:
    """Predicted emotion + AU read-out per sample, matched against the rules."""
    X, y = ds.as_xy()
    pred_emotions = model.predict(X)
    au_sets = feature_activation_sets(ds, rules.threshold)
    records = []
    for i in range(len(ds)):
        predicted = EmotionLabel(int(pred_emotions[i]))
        records.append(
            ExplainabilityRecord(
                index=i,
                true_emotion=EmotionLabel(int(y[i])),
                predicted_emotion=predicted,
                predicted_aus=au_sets[i],
                match=match_emotion(au_sets[i], rules, predicted),
            )
        )
    return records


def consistency_from_dataset(
    ds: Dataset,
    rules: EmotionRuleSet,
    emotion: EmotionLabel = EmotionLabel.HAPPINESS,
) -> ConsistencyRates:
    """AND/OR consistency of the AU read-out for one emotion's samples.

    The prototype is restricted to the dataset vocabulary so the rates stay
    attainable for vocabularies that only partially cover the emotion.
    """
    proto = rules.prototype(EmotionLabel(emotion)) & frozenset(ds.vocab)
    if not proto:
        raise DataError(
            f"prototype for {EmotionLabel(emotion).display_name} has no AUs "
            "inside the dataset vocabulary"
        )
    preds = feature_activation_sets(ds, rules.threshold)
    return au_consistency(ds.emotions, preds, proto, emotion)


@dataclass
class ExperimentConfig:
    """Configuration shared by the three experiment runners.

    Either point manifest_dir at a directory holding train.json / val.json /
    test.json, or leave it None to generate a synthetic dataset in memory.
    """

    experiment: str = "e1"
    kind: str = KIND_PROBVEC
    head: str | None = None
    n_samples: int = 700
    seed: int = 42
    noise_sigma: float = 0.0
    spurious_rate: float = 0.0
    vocab: str | Sequence[int] | None = None
    rules: str | EmotionRuleSet = "default"
    ratios: tuple[float, float, float] = DEFAULT_RATIOS
    emotion: EmotionLabel = EmotionLabel.HAPPINESS
    out_dir: str | Path | None = None
    manifest_dir: str | Path | None = None
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    batch_size: int = 32
    epochs: int = 100
    l2_weight: float = 0.0
    patience: int | None = 10

    def resolved_rules(self) -> EmotionRuleSet:
        if isinstance(self.rules, EmotionRuleSet):
            return self.rules
        return load_rules(self.rules)

    def resolved_head(self) -> str:
        head = self.head or _DEFAULT_HEAD_FOR_KIND[self.kind]
        if head not in HEAD_NAMES:
            raise ConfigError(f"unknown head {head!r} (expected one of {HEAD_NAMES})")
        if head == HEAD_HEATMAP5 and self.kind != KIND_HEATMAP:
            raise ConfigError("head heatmap5 requires heatmap features")
        if head == HEAD_PROBVEC1 and self.kind != KIND_PROBVEC:
            raise ConfigError("head probvec1 requires probability-vector features")
        return head

    def estimator(self) -> BottleneckClassifier:
        return head_estimator(
            self.resolved_head(),
            learning_rate=self.learning_rate,
            optimizer=self.optimizer,
            batch_size=self.batch_size,
            epochs=self.epochs,
            l2_weight=self.l2_weight,
            patience=self.patience,
            seed=self.seed,
        )


@dataclass
class ExperimentResult:
    report: dict
    model: BottleneckClassifier | None = None
    records: list[ExplainabilityRecord] | None = None
    written: dict[str, Path] = field(default_factory=dict)


def _prepare_splits(cfg: ExperimentConfig) -> tuple[Dataset, Dataset, Dataset]:
    if cfg.manifest_dir is not None:
        base = Path(cfg.manifest_dir)
        return tuple(load_dataset(base / f"{name}.json") for name in ("train", "val", "test"))
    vocab_src = cfg.vocab if cfg.vocab is not None else _DEFAULT_VOCAB_FOR_KIND[cfg.kind]
    if isinstance(vocab_src, (str, Path)):
        vocab = load_vocabulary(vocab_src)
    else:
        vocab = AUVocabulary(vocab_src)
    gen = GenConfig(
        n_samples=cfg.n_samples,
        seed=cfg.seed,
        noise_sigma=cfg.noise_sigma,
        spurious_rate=cfg.spurious_rate,
    )
    full = generate_dataset(gen, cfg.resolved_rules(), vocab, cfg.kind)
    return split_dataset(full, cfg.ratios, cfg.seed)


def _train_head(cfg: ExperimentConfig, train: Dataset, val: Dataset) -> BottleneckClassifier:
    X_train, y_train = train.as_xy()
    X_val, y_val = val.as_xy()
    layer_specs_for_head(cfg.resolved_head(), X_train.shape[1])  # fail fast on shape drift
    est = cfg.estimator()
    return est.fit(X_train, y_train, X_val=X_val, y_val=y_val)


def _write(cfg: ExperimentConfig, name: str, payload: dict, text: str | None) -> dict[str, Path]:
    written: dict[str, Path] = {}
    if cfg.out_dir is None:
        return written
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / f"{name}.json"
    json_path.write_text(json.dumps(payload, indent=2) + "\n")
    written["json"] = json_path
    if text is not None:
        txt_path = out / f"{name}.txt"
        txt_path.write_text(text)
        written["text"] = txt_path
    return written


def run_e1(cfg: ExperimentConfig) -> ExperimentResult:
    """Train the selected head and report test emotion accuracy."""
    train, val, test = _prepare_splits(cfg)
    model = _train_head(cfg, train, val)
    report = evaluate_emotions(model, test)
    payload = report.to_dict()
    payload["head"] = cfg.resolved_head()
    payload["seed"] = cfg.seed
    written = _write(cfg, "e1_report", payload, report.render_text())
    return ExperimentResult(report=payload, model=model, written=written)


def run_e2(cfg: ExperimentConfig) -> ExperimentResult:
    """AU retention: read-out F1/accuracy before and after head training."""
    train, val, test = _prepare_splits(cfg)
    rules = cfg.resolved_rules()
    before = evaluate_au_readout(test, rules.threshold)
    model = _train_head(cfg, train, val)
    after = evaluate_au_readout(test, rules.threshold)
    emotions = evaluate_emotions(model, test)
    payload = {
        "threshold": rules.threshold,
        "readout_frozen": True,
        "before_finetune": before.to_dict()["au"],
        "after_finetune": after.to_dict()["au"],
        "emotion_accuracy_after": emotions.emotion_accuracy,
        "seed": cfg.seed,
    }
    text = "Before head training:\n" + before.render_text() + "\nAfter head training:\n" + after.render_text()
    written = _write(cfg, "e2_report", payload, text)
    return ExperimentResult(report=payload, model=model, written=written)


def run_e3(cfg: ExperimentConfig) -> ExperimentResult:
    """Dual-output audit with AND/OR consistency on the target emotion."""
    train, val, test = _prepare_splits(cfg)
    rules = cfg.resolved_rules()
    model = _train_head(cfg, train, val)
    consistency = consistency_from_dataset(test, rules, cfg.emotion)
    records = explain_records(model, test, rules)
    report = EvaluationReport(consistency=consistency, threshold=rules.threshold)
    payload = report.to_dict()
    payload["records"] = [r.to_dict() for r in records]
    payload["seed"] = cfg.seed
    written = _write(cfg, "e3_report", payload, report.render_text())
    return ExperimentResult(report=payload, model=model, records=records, written=written)


_RUNNERS = {"e1": run_e1, "e2": run_e2, "e3": run_e3}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    try:
        runner = _RUNNERS[cfg.experiment]
    except KeyError:
        raise ConfigError(f"unknown experiment {cfg.experiment!r} (expected e1, e2 or e3)") from None
    return runner(cfg)
