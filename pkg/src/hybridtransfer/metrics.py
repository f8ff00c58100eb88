"""Binary classification metrics with class 1 as the positive (rare) class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset


def _ratio(num, den):
    # zero denominator -> 0 by convention
    return num / den if den else 0.0


def _f1(p, r):
    return _ratio(2 * p * r, p + r)


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def confusion(self):
        """[[TN, FP], [FN, TP]] with rows = truth, columns = prediction."""
        return np.array([[self.tn, self.fp], [self.fn, self.tp]])

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    @property
    def precision(self):
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self):
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1_positive(self):
        return _f1(self.precision, self.recall)

    @property
    def f1_negative(self):
        return _f1(_ratio(self.tn, self.tn + self.fn), _ratio(self.tn, self.tn + self.fp))

    @property
    def macro_f1(self):
        return (self.f1_positive + self.f1_negative) / 2

    @property
    def accuracy(self):
        return _ratio(self.tp + self.tn, self.total)

    def as_dict(self):
        return {
            "precision": self.precision,
            "recall": self.recall,
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
        }


def confusion_counts(y_true, y_pred) -> Metrics:
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    if y_true.shape != y_pred.shape:
        raise ValueError("truth and prediction lengths differ")
    return Metrics(
        int(np.sum(y_true & y_pred)),
        int(np.sum(~y_true & y_pred)),
        int(np.sum(y_true & ~y_pred)),
        int(np.sum(~y_true & ~y_pred)),
    )


def evaluate(model, test: Dataset) -> Metrics:
    return confusion_counts(test.y, model.predict(test.X))


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the rank statistic (ties count half)."""
    from scipy.stats import rankdata

    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))
