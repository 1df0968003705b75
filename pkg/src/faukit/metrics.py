"""Evaluation metrics: emotion accuracy, confusion, per-AU F1, consistency.

Conventions, fixed here and relied on by the report renderers:

* F1 = 2tp / (2tp + fp + fn), defined as 0 when the denominator is 0.
* Per-AU accuracy counts inactive samples as true negatives over all
  evaluated samples.
* Averages over the vocabulary are unweighted means.
* Consistency over an emotion's samples: both_rate requires the whole
  prototype inside the predicted set, either_rate any overlap, so
  both_rate <= either_rate always.

All reductions are integer counting, so results are order-independent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from collections.abc import Collection, Sequence

import numpy as np

from .errors import DataError, DimensionError
from .facs import EMOTION_NAMES, EmotionLabel, N_EMOTIONS
from .validation import check_labels


def confusion_matrix(y_true, y_pred, n_classes: int = N_EMOTIONS) -> np.ndarray:
    """Counts with rows indexed by true label and columns by prediction."""
    t = check_labels(y_true, n_classes, name="y_true")
    p = check_labels(y_pred, n_classes, name="y_pred")
    if t.shape[0] != p.shape[0]:
        raise DimensionError(f"{t.shape[0]} truths but {p.shape[0]} predictions")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return counts


def emotion_accuracy(y_true, y_pred) -> float:
    t = check_labels(y_true, N_EMOTIONS, name="y_true")
    p = check_labels(y_pred, N_EMOTIONS, name="y_pred")
    if t.shape[0] != p.shape[0]:
        raise DimensionError(f"{t.shape[0]} truths but {p.shape[0]} predictions")
    if t.shape[0] == 0:
        raise DataError("cannot compute accuracy of an empty prediction set")
    return float(np.mean(t == p))


@dataclass(frozen=True)
class AUCounts:
    """Binary confusion counts for one AU."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def au_binary_counts(
    truth_sets: Sequence[Collection[int]],
    pred_sets: Sequence[Collection[int]],
    vocab: Collection[int],
) -> dict[int, AUCounts]:
    if len(truth_sets) != len(pred_sets):
        raise DimensionError(f"{len(truth_sets)} truth sets but {len(pred_sets)} predictions")
    counts: dict[int, AUCounts] = {}
    for code in vocab:
        tp = fp = fn = tn = 0
        for truth, pred in zip(truth_sets, pred_sets):
            in_truth = code in truth
            in_pred = code in pred
            if in_truth and in_pred:
                tp += 1
            elif in_pred:
                fp += 1
            elif in_truth:
                fn += 1
            else:
                tn += 1
        counts[int(code)] = AUCounts(tp, fp, fn, tn)
    return counts


def au_f1(counts: AUCounts) -> float:
    denom = 2 * counts.tp + counts.fp + counts.fn
    if denom == 0:
        return 0.0
    return 2.0 * counts.tp / denom


def au_accuracy(counts: AUCounts) -> float:
    if counts.total == 0:
        raise DataError("cannot compute accuracy from zero counts")
    return (counts.tp + counts.tn) / counts.total


@dataclass(frozen=True)
class AUMetricTable:
    """Per-AU F1/accuracy plus their unweighted vocabulary averages."""

    per_au: dict[int, AUCounts]

    @property
    def f1(self) -> dict[int, float]:
        return {code: au_f1(c) for code, c in self.per_au.items()}

    @property
    def accuracy(self) -> dict[int, float]:
        return {code: au_accuracy(c) for code, c in self.per_au.items()}

    @property
    def f1_avg(self) -> float:
        values = list(self.f1.values())
        return float(np.mean(values)) if values else 0.0

    @property
    def acc_avg(self) -> float:
        values = list(self.accuracy.values())
        return float(np.mean(values)) if values else 0.0

    def to_dict(self) -> dict:
        return {
            "f1_avg": self.f1_avg,
            "acc_avg": self.acc_avg,
            "per_au": {
                f"AU{code}": {
                    "f1": au_f1(c),
                    "accuracy": au_accuracy(c),
                    "tp": c.tp,
                    "fp": c.fp,
                    "fn": c.fn,
                    "tn": c.tn,
                }
                for code, c in sorted(self.per_au.items())
            },
        }


def au_metric_table(truth_sets, pred_sets, vocab) -> AUMetricTable:
    return AUMetricTable(au_binary_counts(truth_sets, pred_sets, vocab))


@dataclass(frozen=True)
class ConsistencyRates:
    """AND/OR prototype recovery rates over one emotion's samples."""

    emotion: EmotionLabel
    prototype: frozenset[int]
    both_rate: float
    either_rate: float
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "emotion": self.emotion.display_name,
            "prototype": sorted(self.prototype),
            "both_rate": self.both_rate,
            "either_rate": self.either_rate,
            "n_samples": self.n_samples,
        }


def au_consistency(
    truth_emotions,
    pred_sets: Sequence[Collection[int]],
    prototype: Collection[int],
    emotion: EmotionLabel = EmotionLabel.HAPPINESS,
) -> ConsistencyRates:
    """Rates at which predictions recover the whole prototype (both) or any
    part of it (either), over samples whose true emotion matches."""
    emotion = EmotionLabel(emotion)
    proto = frozenset(int(c) for c in prototype)
    if not proto:
        raise DataError(f"prototype for {emotion.display_name} is empty")
    truths = check_labels(truth_emotions, N_EMOTIONS, name="truth_emotions")
    if truths.shape[0] != len(pred_sets):
        raise DimensionError(f"{truths.shape[0]} emotions but {len(pred_sets)} prediction sets")
    selected = [pred_sets[i] for i in range(truths.shape[0]) if truths[i] == int(emotion)]
    if not selected:
        raise DataError(f"no samples with true emotion {emotion.display_name}")
    both = sum(1 for pred in selected if proto <= frozenset(pred))
    either = sum(1 for pred in selected if proto & frozenset(pred))
    n = len(selected)
    return ConsistencyRates(emotion, proto, both / n, either / n, n)


@dataclass
class EvaluationReport:
    """Bundle of the evaluation sections; any section may be absent."""

    emotion_accuracy: float | None = None
    confusion: np.ndarray | None = None
    au: AUMetricTable | None = None
    consistency: ConsistencyRates | None = None
    threshold: float | None = None

    def to_dict(self) -> dict:
        out: dict = {}
        if self.emotion_accuracy is not None:
            out["emotion"] = {
                "accuracy": self.emotion_accuracy,
                "labels": list(EMOTION_NAMES),
                "confusion": self.confusion.tolist() if self.confusion is not None else None,
            }
        if self.au is not None:
            au = self.au.to_dict()
            if self.threshold is not None:
                au["threshold"] = self.threshold
            out["au"] = au
        if self.consistency is not None:
            out["consistency"] = self.consistency.to_dict()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def render_text(self) -> str:
        return render_report_text(self)


def _format_grid(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(header[j]), *(len(r[j]) for r in rows)) for j in range(len(header))]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    for row in rows:
        lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines)


def render_report_text(report: EvaluationReport) -> str:
    """Human-readable tables mirroring the JSON report sections."""
    blocks: list[str] = []
    if report.emotion_accuracy is not None:
        blocks.append(f"Emotion accuracy: {report.emotion_accuracy:.4f}")
        if report.confusion is not None:
            header = ["true \\ pred", *EMOTION_NAMES]
            rows = [
                [EMOTION_NAMES[i], *(str(int(v)) for v in report.confusion[i])]
                for i in range(len(EMOTION_NAMES))
            ]
            blocks.append(_format_grid(header, rows))
    if report.au is not None:
        codes = sorted(report.au.per_au)
        tau = f" (threshold {report.threshold:.2f})" if report.threshold is not None else ""
        header = ["F1 Avg", *(f"F1 AU{c}" for c in codes), "Acc Avg", *(f"Acc AU{c}" for c in codes)]
        f1 = report.au.f1
        acc = report.au.accuracy
        row = [
            f"{report.au.f1_avg:.3f}",
            *(f"{f1[c]:.3f}" for c in codes),
            f"{report.au.acc_avg:.3f}",
            *(f"{acc[c]:.3f}" for c in codes),
        ]
        blocks.append(f"AU detection{tau}:\n" + _format_grid(header, [row]))
    if report.consistency is not None:
        cons = report.consistency
        labels = [f"AU{c}" for c in sorted(cons.prototype)]
        both_name = " and ".join(labels)
        either_name = " or ".join(labels)
        blocks.append(
            f"Consistency on {cons.emotion.display_name} (n={cons.n_samples}): "
            f"{both_name}: {cons.both_rate:.3f}   {either_name}: {cons.either_rate:.3f}"
        )
    return "\n\n".join(blocks) + "\n"
