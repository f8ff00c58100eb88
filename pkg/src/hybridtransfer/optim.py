"""Mass-weighted L2-regularized logistic regression by gradient descent.

Shared by the domain discriminator and the weighted logistic learner.
Reductions go through ``einsum`` rather than BLAS so results do not
depend on the BLAS thread count.
"""

from dataclasses import dataclass

import numpy as np


def matvec(X, w):
    return np.einsum("ij,j->i", X, w)


def rmatvec(X, r):
    return np.einsum("i,ij->j", r, X)


def log1pexp(s):
    return np.logaddexp(0.0, s)


def sigmoid(s):
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    e = np.exp(s[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logistic_loss(X, y, mass, w, c, l2):
    """Return (data term, penalty) of sum_i m_i * logloss_i + l2/2 |w|^2."""
    s = matvec(X, w) + c
    data = float(np.sum(mass * (log1pexp(s) - y * s)))
    return data, 0.5 * l2 * float(np.dot(w, w))


def logistic_grad(X, y, mass, w, c, l2):
    s = matvec(X, w) + c
    r = mass * (sigmoid(s) - y)
    return rmatvec(X, r) + l2 * w, float(np.sum(r))


@dataclass
class GDResult:
    w: np.ndarray
    c: float
    converged: bool
    grad_norm: float
    n_iter: int
    objective: float
    history: list


def fit_logistic_gd(X, y, mass, l2, tol=1e-8, max_iter=10000, armijo=0.5):
    """Full-batch gradient descent with backtracking line search.

    Starts from zero. The trial step doubles after every accepted step and
    halves until the Armijo condition holds, so the objective is
    non-increasing across iterations.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mass = np.asarray(mass, dtype=np.float64)
    d = X.shape[1]
    w = np.zeros(d)
    c = 0.0

    def f(w, c):
        a, b = logistic_loss(X, y, mass, w, c, l2)
        return a + b

    fval = f(w, c)
    if not np.isfinite(fval):
        raise FloatingPointError("non-finite logistic loss at initialization")
    # 1/L for the smooth part, from the curvature bound 0.25 * sum m |x|^2
    lip = 0.25 * float(np.sum(mass * (1.0 + np.einsum("ij,ij->i", X, X)))) + l2
    t = 1.0 / lip if lip > 0 else 1.0
    history = [fval]
    gnorm = np.inf
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        gw, gc = logistic_grad(X, y, mass, w, c, l2)
        gsq = float(np.dot(gw, gw)) + gc * gc
        gnorm = np.sqrt(gsq)
        if gnorm < tol:
            converged = True
            it -= 1
            break
        while True:
            w_new = w - t * gw
            c_new = c - t * gc
            f_new = f(w_new, c_new)
            if not np.isfinite(f_new):
                raise FloatingPointError("non-finite logistic loss during optimization")
            if f_new <= fval - armijo * t * gsq:
                break
            t *= 0.5
            if t < 1e-300:
                # no representable descent step left
                f_new = fval
                w_new, c_new = w, c
                break
        stalled = f_new == fval and w_new is w
        w, c, fval = w_new, c_new, f_new
        history.append(fval)
        if stalled:
            break
        t *= 2.0
    else:
        gw, gc = logistic_grad(X, y, mass, w, c, l2)
        gnorm = float(np.sqrt(np.dot(gw, gw) + gc * gc))
        converged = gnorm < tol
    return GDResult(w, float(c), converged, float(gnorm), it, fval, history)
