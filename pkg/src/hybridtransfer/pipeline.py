"""Baselines, hybrid weight combination, and alpha selection."""

from __future__ import annotations

import enum
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import DataError, Dataset, Hyperparams, check_same_dim, rng_for
from .density_ratio import domain_weights, fit_domain_discriminator, fit_gaussian_model, gaussian_weights
from .metrics import Metrics, evaluate
from .task_relevance import fit_union_model, task_weights_for_source
from .weighted_learner import LearnerKind, Provenance, WeightVector, train, train_unweighted

log = logging.getLogger(__name__)


class BaselineKind(str, enum.Enum):
    TARGET_ONLY = "target_only"
    SOURCE_ONLY = "source_only"
    UNION = "union"
    ALL_ONES = "all_ones"
    GAUSSIAN = "gaussian"
    HYBRID = "hybrid"

    @property
    def weighted(self):
        return self in (BaselineKind.ALL_ONES, BaselineKind.GAUSSIAN, BaselineKind.HYBRID)


ALL_BASELINES = tuple(BaselineKind)


class NegativePolicy(str, enum.Enum):
    CLAMP_ZERO = "clamp_zero"
    ALLOW = "allow"


class CombineScale(str, enum.Enum):
    RAW_SUM = "raw_sum"
    STANDARDIZED_SUM = "standardized_sum"


@dataclass(frozen=True)
class HybridConfig:
    clip_max: float = 10.0
    negative_policy: NegativePolicy = NegativePolicy.CLAMP_ZERO
    combine_scale: CombineScale = CombineScale.RAW_SUM
    discriminator_l2: float = 1e-2
    balance: bool = True
    ridge_eps: float = 1e-3

    def __post_init__(self):
        if self.clip_max < 1:
            raise ValueError("clip_max must be >= 1")
        object.__setattr__(self, "negative_policy", NegativePolicy(self.negative_policy))
        object.__setattr__(self, "combine_scale", CombineScale(self.combine_scale))

    def to_dict(self):
        out = asdict(self)
        out["negative_policy"] = self.negative_policy.value
        out["combine_scale"] = self.combine_scale.value
        return out


def hybrid_weights(domain_w, task_w, cfg: HybridConfig = HybridConfig()) -> WeightVector:
    """Elementwise domain + task weight, then the sign and clip policy."""
    dw = np.asarray(domain_w, dtype=np.float64)
    tw = np.asarray(task_w, dtype=np.float64)
    if dw.shape != tw.shape or dw.ndim != 1:
        raise DataError(f"weight length mismatch: {dw.shape} vs {tw.shape}")
    if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(tw))):
        raise DataError("non-finite entries in hybrid weight inputs")
    if np.any(dw <= 0):
        raise DataError("domain weights must be strictly positive")
    if cfg.combine_scale is CombineScale.STANDARDIZED_SUM:
        dw = dw / dw.mean()
        tm = tw.mean()
        # a zero-mean task vector cannot be put on a unit-mean scale
        tw = tw / tm if tm != 0 else tw
    raw = dw + tw
    meta = {
        "combine_scale": cfg.combine_scale.value,
        "negative_policy": cfg.negative_policy.value,
        "fraction_clamped": float(np.mean(raw < 0)),
        "fraction_clipped": float(np.mean(raw > cfg.clip_max)),
    }
    if cfg.negative_policy is NegativePolicy.CLAMP_ZERO:
        return WeightVector.clipped(raw, cfg.clip_max, Provenance.HYBRID, **meta)
    return WeightVector(np.minimum(raw, cfg.clip_max), Provenance.HYBRID, None, meta)


@dataclass
class WeightDetails:
    weights: WeightVector
    components: dict = field(default_factory=dict)


def source_weights(kind, source: Dataset, target: Dataset, hp: Hyperparams, learner, cfg: HybridConfig) -> WeightDetails:
    """Source weights for a weighted baseline (computed without reference to alpha)."""
    kind = BaselineKind(kind)
    check_same_dim(source, target)
    if kind is BaselineKind.ALL_ONES:
        return WeightDetails(WeightVector.ones(source.n))
    if kind is BaselineKind.GAUSSIAN:
        gm = fit_gaussian_model(source, target, cfg.ridge_eps)
        gw = gaussian_weights(gm, source.X)
        wv = WeightVector.clipped(
            gw.values,
            cfg.clip_max,
            Provenance.GAUSSIAN,
            fraction_clipped=float(np.mean(gw.values > cfg.clip_max)),
            fraction_saturated=float(np.mean(gw.saturated)),
        )
        return WeightDetails(wv, {"w_gaussian": gw.values})
    if kind is BaselineKind.HYBRID:
        disc = fit_domain_discriminator(source, target, cfg.discriminator_l2, cfg.balance)
        dw = domain_weights(disc, source.X)
        union = fit_union_model(source, target, hp, learner)
        rep = task_weights_for_source(union, source)
        wv = hybrid_weights(dw.values, rep.weights, cfg)
        wv.meta.update(
            discriminator_converged=disc.converged,
            fraction_saturated=float(np.mean(dw.saturated)),
            task_margin=rep.margin_kind,
            task_fraction_negative=rep.fraction_negative,
        )
        return WeightDetails(wv, {"w_domain": dw.values, "w_task": rep.weights, "discriminator": disc, "task_report": rep})
    raise ValueError(f"{kind.value} does not use source weights")


def build_baseline(
    kind,
    source: Dataset,
    target: Dataset,
    hp: Hyperparams,
    learner=LearnerKind.STUMPS,
    cfg: HybridConfig = HybridConfig(),
    weights: WeightVector | None = None,
):
    """Train one baseline. Weighted kinds use ``hp.alpha``.

    ``weights`` short-circuits weight estimation for weighted kinds (the
    weights do not depend on alpha, so sweeps compute them once).
    """
    kind = BaselineKind(kind)
    if kind is BaselineKind.TARGET_ONLY:
        return train_unweighted(learner, target, hp)
    if kind is BaselineKind.SOURCE_ONLY:
        return train_unweighted(learner, source, hp)
    if kind is BaselineKind.UNION:
        return fit_union_model(source, target, hp, learner)
    if weights is None:
        weights = source_weights(kind, source, target, hp, learner, cfg).weights
    return train(learner, target, source, weights, hp)


# ---------------------------------------------------------------------------
# Alpha selection
# ---------------------------------------------------------------------------


def stratified_folds(y, k, seed):
    """Assign each row to one of k folds, classes spread evenly."""
    y = np.asarray(y)
    counts = [int(np.sum(y == c)) for c in (0, 1)]
    if min(counts) == 0:
        raise DataError("a class is absent from the target training set; alpha cannot be cross-validated")
    if min(counts) < k:
        if min(counts) < 2:
            raise DataError(f"only {min(counts)} sample(s) in the minority class; reduce folds to run CV")
        log.warning("minority class has %d samples < %d folds; using %d folds", min(counts), k, min(counts))
        k = min(counts)
    rng = rng_for(seed, "cv-folds")
    fold = np.empty(y.shape[0], dtype=np.int64)
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        fold[idx] = np.arange(idx.size) % k
    return fold, k


@dataclass
class AlphaSelection:
    alpha: float
    grid: list
    fold_scores: list  # fold_scores[i][f] = macro-F1 of grid[i] on fold f
    folds: int

    @property
    def mean_scores(self):
        return [float(np.mean(s)) for s in self.fold_scores]


def pick_alpha(grid, mean_scores):
    """Grid point with the best mean score; ties go to the larger alpha."""
    best = None
    for a, s in sorted(zip(grid, mean_scores)):
        if best is None or s >= best[1]:
            best = (a, s)
    return float(best[0])


def select_alpha(
    source: Dataset,
    target_train: Dataset,
    grid,
    folds: int,
    hp: Hyperparams,
    learner=LearnerKind.STUMPS,
    kind=BaselineKind.HYBRID,
    cfg: HybridConfig = HybridConfig(),
) -> AlphaSelection:
    """Cross-validate alpha on stratified folds of the target training set.

    Each fold trains on the remaining target rows plus the weighted source
    (weights re-estimated from those target rows) and scores macro-F1 on
    the held-out target rows.
    """
    grid = [float(a) for a in grid]
    if not grid or any(not 0.0 <= a <= 1.0 for a in grid):
        raise ValueError("alpha grid must be a nonempty subset of [0, 1]")
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if len(grid) == 1:
        return AlphaSelection(grid[0], grid, [[]], 0)
    fold, k = stratified_folds(target_train.y, folds, hp.seed)
    scores = [[0.0] * k for _ in grid]
    for f in range(k):
        tr = target_train.subset(np.flatnonzero(fold != f))
        va = target_train.subset(np.flatnonzero(fold == f))
        w = source_weights(kind, source, tr, hp, learner, cfg).weights
        for i, a in enumerate(grid):
            m = build_baseline(kind, source, tr, hp.replace(alpha=a), learner, cfg, weights=w)
            scores[i][f] = evaluate(m, va).macro_f1
    means = [float(np.mean(s)) for s in scores]
    return AlphaSelection(pick_alpha(grid, means), grid, scores, k)


# ---------------------------------------------------------------------------
# Alpha sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepPoint:
    alpha: float
    metrics: Metrics


def alpha_sweep(
    source: Dataset,
    target_train: Dataset,
    target_test: Dataset,
    grid,
    hp: Hyperparams,
    learner=LearnerKind.STUMPS,
    cfg: HybridConfig = HybridConfig(),
    kind=BaselineKind.HYBRID,
    weights: WeightVector | None = None,
):
    grid = [float(a) for a in grid]
    if grid != sorted(grid):
        raise ValueError("alpha grid must be sorted ascending")
    if weights is None:
        weights = source_weights(kind, source, target_train, hp, learner, cfg).weights
    curve = []
    for a in grid:
        m = build_baseline(kind, source, target_train, hp.replace(alpha=a), learner, cfg, weights=weights)
        curve.append(SweepPoint(a, evaluate(m, target_test)))
    return curve
