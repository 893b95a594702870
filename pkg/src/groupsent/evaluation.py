"""Accuracy, confusion matrices and the binary intensity remap."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

CHANCE = {"four_way": 0.25, "binary": 0.5}


def remap_binary(labels):
    """Intensities 1-2 become 0, 3-4 become 1."""
    arr = np.asarray(labels)
    if arr.size and (arr.min() < 1 or arr.max() > 4):
        raise ValueError(f"intensity labels must lie in [1, 4], got {sorted(set(arr.ravel().tolist()))}")
    out = (arr >= 3).astype(int)
    return int(out) if np.ndim(labels) == 0 else out


@dataclass
class EvalReport:
    classes: list
    confusion: np.ndarray
    n_test: int
    accuracy: float
    precision: List[float] = field(default_factory=list)
    recall: List[float] = field(default_factory=list)

    @property
    def error(self) -> float:
        return 1.0 - self.accuracy

    def to_dict(self) -> dict:
        return {
            "classes": [c.item() if isinstance(c, np.generic) else c for c in self.classes],
            "confusion": self.confusion.tolist(),
            "n_test": self.n_test,
            "accuracy": self.accuracy,
            "error": self.error,
            "precision": self.precision,
            "recall": self.recall,
        }

    def grid(self) -> str:
        """Plain-text confusion matrix; rows are true labels, columns predictions."""
        labels = [str(c) for c in self.classes]
        width = max([len(s) for s in labels] + [len(str(self.confusion.max(initial=0))), 4])
        lines = ["true\\pred".ljust(width + 2) + " ".join(s.rjust(width) for s in labels)]
        for lab, row in zip(labels, self.confusion):
            lines.append(lab.ljust(width + 2) + " ".join(str(v).rjust(width) for v in row))
        return "\n".join(lines)


def confusion_matrix(true_labels: Sequence, predicted: Sequence) -> EvalReport:
    true_labels = list(np.asarray(true_labels).tolist())
    predicted = list(np.asarray(predicted).tolist())
    if len(true_labels) != len(predicted):
        raise ValueError(f"length mismatch: {len(true_labels)} true vs {len(predicted)} predicted")
    if not true_labels:
        raise ValueError("need at least one prediction")
    classes = sorted(set(true_labels) | set(predicted))
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=int)
    for t, p in zip(true_labels, predicted):
        cm[index[t], index[p]] += 1
    n = len(true_labels)
    diag = np.diag(cm)
    col = cm.sum(axis=0)
    row = cm.sum(axis=1)
    precision = [float(d / c) if c else 0.0 for d, c in zip(diag, col)]
    recall = [float(d / r) if r else 0.0 for d, r in zip(diag, row)]
    return EvalReport(classes, cm, n, float(diag.sum() / n), precision, recall)
