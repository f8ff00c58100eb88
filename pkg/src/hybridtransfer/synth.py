"""Synthetic source/target domain-shift generators."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass

import numpy as np

from .core import Dataset, Domain, rng_for


class ShiftKind(str, enum.Enum):
    MEAN_SHIFT = "mean-shift"
    COVARIANCE_SHIFT = "covariance-shift"
    LABEL_RATIO_SHIFT = "label-ratio-shift"
    MISSING_SUBCLASS = "missing-subclass"


@dataclass(frozen=True)
class ShiftScenario:
    """Two-class Gaussian problem observed in a source and a target domain.

    Negatives are N(0, I); positives are N(class_sep * u, s^2 I) with
    s = ``positive_scale``, for a random unit vector u (two clusters for
    ``missing-subclass``). The default separation leaves the classes
    overlapping, so no learner gets near-perfect scores. ``shift_magnitude``
    is interpreted per kind, see :func:`synth_shift`. ``source_label_noise``
    flips each source label independently with that probability.
    """

    kind: ShiftKind = ShiftKind.MEAN_SHIFT
    d: int = 10
    n_source: int = 5000
    n_target_train: int = 200
    n_target_test: int = 2000
    shift_magnitude: float = 1.5
    positive_rate_source: float = 0.05
    positive_rate_target: float = 0.05
    class_sep: float = 2.0
    positive_scale: float = 1.0
    source_label_noise: float = 0.0
    flip_source_labels: bool = False
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ShiftKind(self.kind))
        for name in ("d", "n_source", "n_target_train", "n_target_test"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
        for name in ("positive_rate_source", "positive_rate_target"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if not 0.0 <= self.source_label_noise < 0.5:
            raise ValueError("source_label_noise must lie in [0, 0.5)")
        if self.shift_magnitude < 0:
            raise ValueError("shift_magnitude must be >= 0")
        if self.kind is ShiftKind.COVARIANCE_SHIFT and self.shift_magnitude <= -1:
            raise ValueError("covariance scale must stay positive")

    def to_dict(self):
        out = asdict(self)
        out["kind"] = self.kind.value
        return out

    def replace(self, **kw):
        doc = self.to_dict()
        doc.update(kw)
        return ShiftScenario(**doc)


def _unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _draw(rng, n, rate, pos_means, offset, scale, names, domain, pos_cluster_probs=None, pos_scale=1.0):
    # exact class counts keep the imbalance identical across seeds
    n_pos = int(round(n * rate))
    n_pos = min(max(n_pos, 1 if n > 1 else 0), n)
    y = np.zeros(n, dtype=np.int64)
    y[:n_pos] = 1
    y = rng.permutation(y)
    X = rng.standard_normal((n, len(offset))) * scale
    X += offset
    pos = np.flatnonzero(y == 1)
    X[pos] = (X[pos] - offset) * pos_scale + offset
    probs = pos_cluster_probs if pos_cluster_probs is not None else np.full(len(pos_means), 1 / len(pos_means))
    cluster = rng.choice(len(pos_means), size=pos.size, p=probs)
    X[pos] += np.asarray(pos_means)[cluster]
    return Dataset(X, y, domain, names)


def synth_shift(scn: ShiftScenario):
    """Return (source, target_train, target_test), deterministic in ``scn.seed``.

    mean-shift
        every target class mean moves by ``shift_magnitude`` along a random
        unit vector.
    covariance-shift
        target covariances are scaled by ``(1 + shift_magnitude)``.
    label-ratio-shift
        identical class conditionals; only the positive rates differ.
    missing-subclass
        positives form two clusters; source positives come from the first
        only, target positives from both.

    ``flip_source_labels`` inverts every source label (an adversarial source).
    """
    rng = rng_for(scn.seed, "synth", "geometry")
    d = scn.d
    names = tuple(f"f{j + 1}" for j in range(d))
    u = _unit(rng, d)
    v = _unit(rng, d)
    u2 = _unit(rng, d)
    zero = np.zeros(d)
    pos_means = [scn.class_sep * u]
    src_probs = tgt_probs = None
    src_offset = tgt_offset = zero
    src_scale = tgt_scale = 1.0
    if scn.kind is ShiftKind.MEAN_SHIFT:
        tgt_offset = scn.shift_magnitude * v
    elif scn.kind is ShiftKind.COVARIANCE_SHIFT:
        tgt_scale = float(np.sqrt(1.0 + scn.shift_magnitude))
    elif scn.kind is ShiftKind.MISSING_SUBCLASS:
        pos_means = [scn.class_sep * u, scn.class_sep * u2]
        src_probs = np.array([1.0, 0.0])
        tgt_probs = np.array([0.5, 0.5])

    draws = []
    for role, n, rate, offset, scale, probs, dom in (
        ("source", scn.n_source, scn.positive_rate_source, src_offset, src_scale, src_probs, Domain.SOURCE),
        ("target_train", scn.n_target_train, scn.positive_rate_target, tgt_offset, tgt_scale, tgt_probs, Domain.TARGET),
        ("target_test", scn.n_target_test, scn.positive_rate_target, tgt_offset, tgt_scale, tgt_probs, Domain.TARGET),
    ):
        r = rng_for(scn.seed, "synth", role)
        draws.append(_draw(r, n, rate, pos_means, offset, scale, names, dom, probs, scn.positive_scale))
    source, target_train, target_test = draws
    if scn.source_label_noise > 0:
        r = rng_for(scn.seed, "synth", "source-noise")
        flip = r.random(source.n) < scn.source_label_noise
        source = source.with_labels(np.where(flip, 1 - source.y, source.y))
    if scn.flip_source_labels:
        source = source.with_labels(1 - source.y)
    return source, target_train, target_test
