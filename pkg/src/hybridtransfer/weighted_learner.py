"""Instance-weighted base learners for the blended target/source objective.

Both learners minimise

    alpha/N_T * sum_i loss(x_i) + (1 - alpha)/N_S * sum_j w_j * loss(x_j)

with binary log loss. Internally each sample carries a *mass* (its
coefficient above); masses are normalised to sum to one and samples with
zero mass are dropped before training. Rows are then put in a canonical
order, so a trained model depends only on the multiset of
(features, label, mass) triples: permuting the source together with its
weights, appending zero-weight samples, or rescaling all masses by a power
of two leaves the model bit-identical.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .core import DataError, Dataset, Hyperparams, check_same_dim
from .optim import fit_logistic_gd, log1pexp, matvec, sigmoid

MODEL_FORMAT_VERSION = 1


class LearnerKind(str, enum.Enum):
    LOGREG = "logreg"
    STUMPS = "stumps"


class Provenance(str, enum.Enum):
    ONES = "ones"
    GAUSSIAN = "gaussian"
    HYBRID = "hybrid"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class WeightVector:
    values: np.ndarray
    provenance: Provenance = Provenance.CUSTOM
    clip_max: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise DataError("weights must be a finite 1-D vector")
        if self.clip_max is not None and (v.min(initial=0) < 0 or v.max(initial=0) > self.clip_max):
            raise DataError("clipped weight vector out of [0, clip_max]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    def __len__(self):
        return self.values.shape[0]

    @classmethod
    def ones(cls, n):
        return cls(np.ones(n), Provenance.ONES)

    @classmethod
    def clipped(cls, values, clip_max, provenance=Provenance.CUSTOM, **meta):
        v = np.clip(np.asarray(values, dtype=np.float64), 0.0, clip_max)
        return cls(v, provenance, clip_max, meta)


def _as_weights(w, n_source):
    if w is None:
        w = np.ones(n_source)
    v = w.values if isinstance(w, WeightVector) else np.asarray(w, dtype=np.float64)
    if v.shape != (n_source,):
        raise DataError(f"weight vector length {v.shape[0]} != source size {n_source}")
    if not np.all(np.isfinite(v)):
        raise DataError("non-finite source weight")
    return v


def eq3_masses(n_target, source_weights, alpha):
    """Per-sample coefficients of the blended objective: (target, source)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    n_source = source_weights.shape[0]
    mt = np.full(n_target, alpha / n_target) if n_target else np.empty(0)
    ms = (1.0 - alpha) * source_weights / n_source if n_source else np.empty(0)
    return mt, ms


@dataclass
class TrainingSet:
    """Canonically ordered, mass-normalised training rows."""

    X: np.ndarray
    y: np.ndarray
    mass: np.ndarray
    total_mass: float


def training_set(target: Dataset | None, source: Dataset | None, w=None, alpha=1.0, class_prior=False) -> TrainingSet:
    parts = [ds for ds in (target, source) if ds is not None]
    if not parts:
        raise DataError("no training data")
    check_same_dim(*parts)
    d = parts[0].d
    n_t = target.n if target is not None else 0
    ws = _as_weights(w, source.n) if source is not None else np.empty(0)
    mt, ms = eq3_masses(n_t, ws, alpha)
    X = np.vstack([target.X if target is not None else np.empty((0, d)), source.X if source is not None else np.empty((0, d))])
    y = np.concatenate([target.y if target is not None else [], source.y if source is not None else []]).astype(np.float64)
    mass = np.concatenate([mt, ms])
    if class_prior:
        mass = _balance_classes(mass, y)
    return _canonical(X, y, mass)


def _balance_classes(mass, y):
    # each class ends up with half of the total mass; zero-mass rows are
    # left out of the sums so they cannot change the summation order
    out = mass.copy()
    for c in (0.0, 1.0):
        sel = (y == c) & (mass != 0)
        tot = np.sum(mass[sel])
        if tot > 0:
            out[sel] = mass[sel] / tot
    return out


def training_set_from_masses(X, y, mass) -> TrainingSet:
    return _canonical(np.asarray(X, np.float64), np.asarray(y, np.float64), np.asarray(mass, np.float64))


def _canonical(X, y, mass):
    keep = mass != 0
    X, y, mass = X[keep], y[keep], mass[keep]
    if X.shape[0] == 0:
        raise DataError("all sample weights are zero; nothing to train on")
    total = float(np.sum(mass))
    if not np.isfinite(total) or total <= 0:
        raise DataError(f"total sample mass must be finite and positive, got {total}")
    # lexsort keys: last is primary
    keys = [mass, y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    order = np.lexsort(keys)
    X, y, mass = X[order], y[order], mass[order]
    total = float(np.sum(mass))
    return TrainingSet(np.ascontiguousarray(X), y, mass / total, total)


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


class Model:
    kind: LearnerKind

    def score(self, X) -> np.ndarray:
        raise NotImplementedError

    def margin(self, X) -> np.ndarray:
        raise NotImplementedError

    def _rows(self, X):
        X = np.asarray(X, dtype=np.float64)
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.d:
            raise DataError(f"dimension mismatch: model d={self.d}, input d={X2.shape[1]}")
        return X2

    def predict(self, X) -> np.ndarray:
        # score exactly 0 maps to class 0
        return (self.score(X) > 0).astype(np.int64)


@dataclass(eq=False)
class LogRegModel(Model):
    coef: np.ndarray
    intercept: float
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    converged: bool = True
    grad_norm: float = 0.0
    n_iter: int = 0
    objective: float = float("nan")
    meta: dict = field(default_factory=dict)
    kind = LearnerKind.LOGREG

    @property
    def d(self):
        return self.coef.shape[0]

    def score(self, X):
        return matvec(self._rows(X), self.coef) + self.intercept

    def margin(self, X):
        # geometric distance to the separating hyperplane
        norm = float(np.sqrt(np.dot(self.coef, self.coef)))
        s = self.score(X)
        if norm == 0.0:
            return np.zeros_like(s)
        return s / norm

    def params(self):
        return {"coef": [float(v) for v in self.coef], "intercept": float(self.intercept)}


@dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float
    left: float
    right: float
    gain: float = 0.0


@dataclass(eq=False)
class StumpModel(Model):
    """F(x) = base_score + learning_rate * sum_k stump_k(x); x <= threshold goes left."""

    d_: int
    base_score: float
    learning_rate: float
    stumps: list
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    objective: float = float("nan")
    objective_history: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    kind = LearnerKind.STUMPS

    @property
    def d(self):
        return self.d_

    def score(self, X):
        X = self._rows(X)
        F = np.full(X.shape[0], self.base_score)
        for s in self.stumps:
            F = F + self.learning_rate * np.where(X[:, s.feature] <= s.threshold, s.left, s.right)
        return F

    margin = score

    def params(self):
        return {
            "base_score": float(self.base_score),
            "learning_rate": float(self.learning_rate),
            "stumps": [[s.feature, s.threshold, s.left, s.right, s.gain] for s in self.stumps],
        }


def predict_score(model: Model, x):
    s = model.score(x)
    return float(s[0]) if np.ndim(x) == 1 else s


def predict_label(model: Model, x):
    s = model.predict(x)
    return int(s[0]) if np.ndim(x) == 1 else s


def decision_margin(model: Model, x):
    s = model.margin(x)
    return float(s[0]) if np.ndim(x) == 1 else s


def feature_importance(model: Model) -> np.ndarray:
    """Total split gain per feature (stumps) or |coef| (logistic)."""
    if isinstance(model, StumpModel):
        imp = np.zeros(model.d)
        for s in model.stumps:
            imp[s.feature] += s.gain
        return imp
    return np.abs(model.coef)


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------


def per_sample_logloss(model: Model, ds: Dataset) -> np.ndarray:
    s = model.score(ds.X)
    return log1pexp(s) - ds.y * s


def weighted_objective(model: Model, target: Dataset, source: Dataset, w, alpha: float) -> float:
    """Blended target/source mean log loss (no regularization term).

    See :func:`l2_penalty` for the logistic model's penalty.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    ws = _as_weights(w, source.n)
    lt = per_sample_logloss(model, target)
    ls = per_sample_logloss(model, source)
    val = alpha * (np.sum(lt) / target.n) + (1.0 - alpha) * (np.sum(ls * ws) / source.n)
    if not np.isfinite(val):
        raise FloatingPointError("non-finite objective value")
    return float(val)


def l2_penalty(model: Model) -> float:
    if isinstance(model, LogRegModel):
        return 0.5 * model.hyperparams.l2_reg * float(np.dot(model.coef, model.coef))
    return 0.0


# ---------------------------------------------------------------------------
# Logistic regression
# ---------------------------------------------------------------------------


def fit_logreg(ts: TrainingSet, hp: Hyperparams, tol=1e-8, max_iter=10000) -> LogRegModel:
    if hp.l2_reg <= 0:
        raise ValueError("l2_reg must be > 0 for the weighted logistic learner")
    res = fit_logistic_gd(ts.X, ts.y, ts.mass, hp.l2_reg, tol=tol, max_iter=max_iter)
    return LogRegModel(
        res.w,
        res.c,
        hp,
        res.converged,
        res.grad_norm,
        res.n_iter,
        res.objective,
        {"total_mass": ts.total_mass},
    )


def train_weighted_logreg(target, source, w, hp: Hyperparams, **kw) -> LogRegModel:
    """Minimise the normalised blended log loss + l2_reg/2 * |coef|^2.

    The data term is divided by its total mass before the penalty is
    added, so the regularisation strength is independent of weight scale.
    """
    return fit_logreg(training_set(target, source, w, hp.alpha, hp.class_prior), hp, **kw)


def logreg_objective(ts: TrainingSet, l2, theta):
    """Training objective and gradient at theta = (coef..., intercept)."""
    from .optim import logistic_grad, logistic_loss

    theta = np.asarray(theta, dtype=np.float64)
    w, c = theta[:-1], float(theta[-1])
    a, b = logistic_loss(ts.X, ts.y, ts.mass, w, c, l2)
    gw, gc = logistic_grad(ts.X, ts.y, ts.mass, w, c, l2)
    return a + b, np.append(gw, gc)


# ---------------------------------------------------------------------------
# Boosted stumps
# ---------------------------------------------------------------------------


def _weighted_logloss(F, y, mass):
    return float(np.sum(mass * (log1pexp(F) - y * F)))


def fit_stumps(ts: TrainingSet, hp: Hyperparams, min_child_hessian=1e-6, split_fn=None) -> StumpModel:
    """Second-order gradient boosting with depth-1 trees.

    A round whose Newton step would raise the training loss is retried with
    the leaf values halved (up to 30 times), so the loss never increases.
    """
    split_fn = split_fn or kernels.best_split
    X, y, m = ts.X, ts.y, ts.mass
    n, d = X.shape
    pos = float(np.sum(m * y))
    neg = float(np.sum(m * (1.0 - y)))
    if pos <= 0 or neg <= 0:
        # one class only: the log-odds is infinite, cap it
        base = 10.0 if neg <= 0 else -10.0
    else:
        base = float(np.log(pos / neg))
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))
    vals = np.ascontiguousarray(np.take_along_axis(X, order.T, axis=0).T)

    F = np.full(n, base)
    loss = _weighted_logloss(F, y, m)
    history = [loss]
    stumps = []
    nu = hp.learning_rate
    for _ in range(int(hp.boosting_rounds)):
        p = sigmoid(F)
        g = m * (p - y)
        h = m * (p * (1.0 - p))
        f, k, gain = split_fn(vals, order, g, h, min_child_hessian)
        if f < 0:
            break
        idx = order[f]
        GL = float(np.cumsum(g[idx])[k])
        HL = float(np.cumsum(h[idx])[k])
        G = float(np.cumsum(g[idx])[-1])
        H = float(np.cumsum(h[idx])[-1])
        left, right = -GL / HL, -(G - GL) / (H - HL)
        thr = vals[f, k] + (vals[f, k + 1] - vals[f, k]) / 2.0
        goes_left = X[:, f] <= thr
        for _halving in range(31):
            F_new = F + nu * np.where(goes_left, left, right)
            new_loss = _weighted_logloss(F_new, y, m)
            if new_loss <= loss:
                break
            left, right = left / 2.0, right / 2.0
        else:
            break
        stumps.append(Stump(int(f), float(thr), float(left), float(right), float(gain)))
        F, loss = F_new, new_loss
        history.append(loss)
    return StumpModel(d, base, nu, stumps, hp, loss, history, {"total_mass": ts.total_mass})


def train_weighted_boosted_stumps(target, source, w, hp: Hyperparams, **kw) -> StumpModel:
    return fit_stumps(training_set(target, source, w, hp.alpha, hp.class_prior), hp, **kw)


def train(kind, target, source, w, hp: Hyperparams) -> Model:
    kind = LearnerKind(kind)
    if kind is LearnerKind.LOGREG:
        return train_weighted_logreg(target, source, w, hp)
    return train_weighted_boosted_stumps(target, source, w, hp)


def train_unweighted(kind, ds: Dataset, hp: Hyperparams) -> Model:
    """Plain fit on one dataset (every row weighted equally)."""
    return train(kind, ds, None, None, hp.replace(alpha=1.0))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def model_to_dict(model: Model) -> dict:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind.value,
        "d": model.d,
        "parameters": model.params(),
        "hyperparams": asdict(model.hyperparams),
        "seed": model.hyperparams.seed,
        "objective": model.objective,
    }
    if isinstance(model, LogRegModel):
        doc["training"] = {"converged": model.converged, "grad_norm": model.grad_norm, "n_iter": model.n_iter}
    return doc


def model_from_dict(doc: dict) -> Model:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise DataError(f"unsupported model format version {doc.get('format_version')!r}")
    hp = Hyperparams(**doc["hyperparams"])
    p = doc["parameters"]
    if doc["kind"] == LearnerKind.LOGREG.value:
        tr = doc.get("training", {})
        return LogRegModel(
            np.array(p["coef"], dtype=np.float64),
            float(p["intercept"]),
            hp,
            tr.get("converged", True),
            tr.get("grad_norm", 0.0),
            tr.get("n_iter", 0),
            doc.get("objective", float("nan")),
        )
    if doc["kind"] == LearnerKind.STUMPS.value:
        stumps = [Stump(int(a), float(b), float(c), float(e), float(g)) for a, b, c, e, g in p["stumps"]]
        return StumpModel(int(doc["d"]), float(p["base_score"]), float(p["learning_rate"]), stumps, hp, doc.get("objective", float("nan")))
    raise DataError(f"unknown model kind {doc['kind']!r}")


def save_model(model: Model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
