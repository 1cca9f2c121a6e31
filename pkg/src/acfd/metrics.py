"""Confusion matrices and accuracy / precision / recall / F1 reporting.

Reports cover per-class, macro-averaged, and binary fault-vs-rest views
(ExtruderFault positive, the other two classes negative).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import Label
from .errors import AcfdError

N_CLASSES = 3


class LengthMismatch(AcfdError):
    pass


class Empty(AcfdError):
    pass


def confusion(truths, preds) -> np.ndarray:
    """3x3 counts; rows = true class, columns = predicted class."""
    truths = np.asarray(truths, dtype=int)
    preds = np.asarray(preds, dtype=int)
    if len(truths) != len(preds):
        raise LengthMismatch(f"{len(truths)} truths vs {len(preds)} preds")
    if len(truths) == 0:
        raise Empty("no examples")
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=int)
    np.add.at(cm, (truths, preds), 1)
    return cm


def _f1(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    precision_defined: bool  # False when the class was never predicted
    recall_defined: bool     # False when the class never occurred

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "precision_defined": self.precision_defined,
            "recall_defined": self.recall_defined,
        }


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    per_class: tuple[ClassMetrics, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    binary_fault: ClassMetrics
    confusion: np.ndarray

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class": {
                Label(i).tag: cm.to_dict() for i, cm in enumerate(self.per_class)
            },
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "binary_fault": self.binary_fault.to_dict(),
            "confusion": self.confusion.tolist(),
        }


def binary_metrics(p: float, r: float) -> float:
    """F1 from a precision/recall pair (harmonic mean, 0 when both 0)."""
    return _f1(p, r)


def metrics_from_confusion(cm: np.ndarray) -> MetricsReport:
    cm = np.asarray(cm, dtype=int)
    total = cm.sum()
    if total == 0:
        raise Empty("empty confusion matrix")
    accuracy = float(np.trace(cm)) / total

    per_class = []
    for i in range(N_CLASSES):
        col = cm[:, i].sum()
        row = cm[i, :].sum()
        p = float(cm[i, i]) / col if col > 0 else 0.0
        r = float(cm[i, i]) / row if row > 0 else 0.0
        per_class.append(ClassMetrics(p, r, _f1(p, r), bool(col > 0), bool(row > 0)))

    macro_p = float(np.mean([c.precision for c in per_class]))
    macro_r = float(np.mean([c.recall for c in per_class]))
    macro_f1 = float(np.mean([c.f1 for c in per_class]))

    # 2x2 collapse: ExtruderFault positive, other two classes negative
    fault = int(Label.EXTRUDER_FAULT)
    tp = int(cm[fault, fault])
    fp = int(cm[:, fault].sum() - tp)
    fn = int(cm[fault, :].sum() - tp)
    bp = tp / (tp + fp) if tp + fp > 0 else 0.0
    br = tp / (tp + fn) if tp + fn > 0 else 0.0
    binary = ClassMetrics(bp, br, _f1(bp, br), tp + fp > 0, tp + fn > 0)

    return MetricsReport(
        accuracy=accuracy,
        per_class=tuple(per_class),
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f1,
        binary_fault=binary,
        confusion=cm,
    )
