"""Domain-similarity weights P_T(x) / P_S(x).

Two estimators are provided: a logistic source-vs-target discriminator
(the one the hybrid scheme uses) and a ratio of two fitted Gaussians.
Both evaluate in log space and saturate instead of overflowing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular

from .core import DataError, Dataset, check_same_dim
from .optim import fit_logistic_gd, logistic_grad, logistic_loss, matvec

# exp(700) is finite in float64; anything larger saturates here
LOG_SATURATION = 700.0


class RatioWeights(NamedTuple):
    values: np.ndarray
    saturated: np.ndarray  # bool mask of entries clamped at exp(LOG_SATURATION)

    @property
    def any_saturated(self) -> bool:
        return bool(self.saturated.any())


def _exp_saturating(logw):
    logw = np.asarray(logw, dtype=np.float64)
    sat = logw > LOG_SATURATION
    return RatioWeights(np.exp(np.minimum(logw, LOG_SATURATION)), sat)


def _as_rows(x, d):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != d:
        raise DataError(f"dimension mismatch: model d={d}, input d={X.shape[1]}")
    return X, single


# ---------------------------------------------------------------------------
# Discriminative route
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearDiscriminator:
    """Logistic model of P(source | x); label 1 = source, 0 = target."""

    w_lr: np.ndarray
    c_lr: float
    converged: bool = True
    final_grad_norm: float = 0.0
    l2_reg: float = 0.0
    balanced: bool = True
    loss_history: tuple = ()

    @property
    def d(self):
        return self.w_lr.shape[0]


def discriminator_problem(source: Dataset, target: Dataset, balance: bool = True):
    """Pooled design, domain labels and per-sample loss masses.

    Masses sum to one. With ``balance`` each domain carries total mass 1/2,
    i.e. per-class inverse-frequency weighting.
    """
    check_same_dim(source, target)
    X = np.vstack([source.X, target.X])
    lab = np.concatenate([np.ones(source.n), np.zeros(target.n)])
    if balance:
        mass = np.concatenate([np.full(source.n, 0.5 / source.n), np.full(target.n, 0.5 / target.n)])
    else:
        mass = np.full(source.n + target.n, 1.0 / (source.n + target.n))
    return X, lab, mass


def fit_domain_discriminator(
    source: Dataset,
    target: Dataset,
    l2_reg: float = 1e-2,
    balance: bool = True,
    tol: float = 1e-8,
    max_iter: int = 5000,
) -> LinearDiscriminator:
    if l2_reg <= 0:
        raise ValueError("l2_reg must be > 0 for a unique discriminator")
    X, lab, mass = discriminator_problem(source, target, balance)
    res = fit_logistic_gd(X, lab, mass, l2_reg, tol=tol, max_iter=max_iter)
    return LinearDiscriminator(
        res.w,
        res.c,
        res.converged,
        res.grad_norm,
        l2_reg,
        balance,
        tuple(res.history),
    )


def discriminator_objective(source, target, w, c, l2_reg, balance=True):
    """Regularized discriminator loss and its gradient at (w, c)."""
    X, lab, mass = discriminator_problem(source, target, balance)
    data, pen = logistic_loss(X, lab, mass, np.asarray(w, float), float(c), l2_reg)
    gw, gc = logistic_grad(X, lab, mass, np.asarray(w, float), float(c), l2_reg)
    return data + pen, np.append(gw, gc)


def log_domain_weights(disc: LinearDiscriminator, X) -> np.ndarray:
    X, _ = _as_rows(X, disc.d)
    return -(matvec(X, disc.w_lr) + disc.c_lr)


def domain_weights(disc: LinearDiscriminator, X) -> RatioWeights:
    """exp(-(x.w_lr + c_lr)) for every row of X, unclipped."""
    return _exp_saturating(log_domain_weights(disc, X))


def domain_weight(disc: LinearDiscriminator, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("domain_weight takes a single feature vector")
    return float(domain_weights(disc, x[None, :]).values[0])


# ---------------------------------------------------------------------------
# Generative route
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaussianDomainModel:
    mu_T: np.ndarray
    mu_S: np.ndarray
    sigma_T: np.ndarray
    sigma_S: np.ndarray
    ridge_eps: float

    def __post_init__(self):
        for name in ("sigma_T", "sigma_S"):
            S = getattr(self, name)
            if not np.allclose(S, S.T, rtol=0, atol=1e-10):
                raise ValueError(f"{name} is not symmetric")
        # Cholesky factors double as the positive-definiteness check
        object.__setattr__(self, "_chol_T", np.linalg.cholesky(self.sigma_T))
        object.__setattr__(self, "_chol_S", np.linalg.cholesky(self.sigma_S))

    @property
    def d(self):
        return self.mu_T.shape[0]


def _population_cov(X):
    Z = X - X.mean(axis=0)
    C = np.einsum("ij,ik->jk", Z, Z) / X.shape[0]
    return 0.5 * (C + C.T)


def fit_gaussian_model(source: Dataset, target: Dataset, ridge_eps: float = 1e-3) -> GaussianDomainModel:
    """Sample means and population covariances (+ ridge on the diagonal)."""
    check_same_dim(source, target)
    if ridge_eps <= 0:
        raise ValueError("ridge_eps must be > 0")
    eye = np.eye(source.d)
    return GaussianDomainModel(
        target.X.mean(axis=0),
        source.X.mean(axis=0),
        _population_cov(target.X) + ridge_eps * eye,
        _population_cov(source.X) + ridge_eps * eye,
        ridge_eps,
    )


def _gauss_logpdf(X, mu, L):
    # solve L z = (x - mu) row-wise
    Z = solve_triangular(L, (X - mu).T, lower=True).T
    d = X.shape[1]
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return -0.5 * (np.einsum("ij,ij->i", Z, Z) + logdet + d * np.log(2 * np.pi))


def log_gaussian_weights(model: GaussianDomainModel, X) -> np.ndarray:
    X, _ = _as_rows(X, model.d)
    return _gauss_logpdf(X, model.mu_T, model._chol_T) - _gauss_logpdf(X, model.mu_S, model._chol_S)


def gaussian_weights(model: GaussianDomainModel, X) -> RatioWeights:
    return _exp_saturating(log_gaussian_weights(model, X))


def gaussian_weight(model: GaussianDomainModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("gaussian_weight takes a single feature vector")
    return float(gaussian_weights(model, x[None, :]).values[0])


def write_weights_csv(path, values, header="weight"):
    values = np.asarray(values, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for v in values:
            fh.write(repr(float(v)) + "\n")


def read_weights_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "weight":
        raise DataError(f"{path}: expected single-column CSV with header 'weight'")
    return np.array([float(v) for v in lines[1:]])
