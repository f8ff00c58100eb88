"""Signed task-relevance weights from a model trained on source + target."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, Hyperparams, check_same_dim
from .weighted_learner import LearnerKind, Model, train


@dataclass(frozen=True, eq=False)
class TaskWeightReport:
    weights: np.ndarray
    predicted: np.ndarray
    correct: np.ndarray
    union_model: Model
    margin_kind: str = "geometric"
    meta: dict = field(default_factory=dict)

    @property
    def fraction_negative(self) -> float:
        return float(np.mean(self.weights < 0))

    def __len__(self):
        return self.weights.shape[0]


def fit_union_model(source: Dataset, target: Dataset, hp: Hyperparams, learner=LearnerKind.STUMPS) -> Model:
    """Unweighted fit on the pooled source and target rows.

    Realised as the blended objective with unit weights at
    alpha = N_T / (N_T + N_S), where both coefficients reduce to 1/(N_T + N_S).
    """
    check_same_dim(source, target)
    alpha = target.n / (target.n + source.n)
    return train(learner, target, source, np.ones(source.n), hp.replace(alpha=alpha))


def signed_distance(margin, y, predicted):
    """|margin| with a plus sign where the prediction is right, minus where wrong."""
    sign = np.where(predicted == y, 1.0, -1.0)
    return sign * np.abs(margin)


def task_weight(model: Model, x, y: int) -> float:
    x = np.asarray(x, dtype=np.float64)
    m = model.margin(x[None, :])
    pred = model.predict(x[None, :])
    return float(signed_distance(m, np.array([y]), pred)[0])


def task_weights_for_source(model: Model, source: Dataset) -> TaskWeightReport:
    # sign and magnitude both come from the margin, never from probabilities
    margin = model.margin(source.X)
    pred = model.predict(source.X)
    w = signed_distance(margin, source.y, pred)
    kind = "geometric" if model.kind is LearnerKind.LOGREG else "additive_score"
    return TaskWeightReport(w, pred, pred == source.y, model, kind)


def write_task_report_csv(report: TaskWeightReport, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("w_task,predicted,correct\n")
        for w, p, c in zip(report.weights, report.predicted, report.correct):
            fh.write(f"{float(w)!r},{int(p)},{int(bool(c))}\n")
