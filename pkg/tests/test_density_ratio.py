import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import multivariate_normal

from hybridtransfer.core import DataError, Dataset
from hybridtransfer.density_ratio import (
    LOG_SATURATION,
    GaussianDomainModel,
    LinearDiscriminator,
    discriminator_objective,
    discriminator_problem,
    domain_weight,
    domain_weights,
    fit_domain_discriminator,
    fit_gaussian_model,
    gaussian_weight,
    gaussian_weights,
    read_weights_csv,
    write_weights_csv,
)


def _ds(X, domain):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return Dataset(X, np.zeros(X.shape[0], dtype=int), domain)


def _gauss_pair(n, seed):
    rng = np.random.default_rng(seed)
    return _ds(rng.normal(0.0, 1.0, n), "source"), _ds(rng.normal(1.0, 1.0, n), "target")


# ---------------------------------------------------------------------------
# domain_weight closed forms
# ---------------------------------------------------------------------------


def test_uninformative_discriminator_gives_unit_weights():
    disc = LinearDiscriminator(np.zeros(3), 0.0)
    X = np.random.default_rng(0).normal(size=(10, 3))
    np.testing.assert_array_equal(domain_weights(disc, X).values, np.ones(10))


def test_domain_weight_closed_form():
    disc = LinearDiscriminator(np.array([1.0]), 0.0)
    assert domain_weight(disc, [0.0]) == 1.0
    assert domain_weight(disc, [-1.0]) == pytest.approx(2.718281828, abs=1e-9)


@pytest.mark.parametrize("x", [0.0, 0.5, 2.0])
def test_bayes_discriminator_matches_true_ratio(x):
    # P(source|x) for N(0,1) vs N(1,1) has log-odds -x + 1/2
    disc = LinearDiscriminator(np.array([-1.0]), 0.5)
    true_ratio = math.exp(-((x - 1) ** 2) / 2) / math.exp(-(x**2) / 2)
    assert domain_weight(disc, [x]) == pytest.approx(true_ratio, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=2, max_size=2),
    st.lists(st.floats(-5, 5), min_size=2, max_size=2),
    st.lists(st.floats(-5, 5), min_size=2, max_size=2),
    st.floats(-5, 5),
)
def test_domain_weight_is_log_linear(x1, x2, w, c):
    disc = LinearDiscriminator(np.array(w), c)
    x1, x2 = np.array(x1), np.array(x2)
    lw = np.log(domain_weights(disc, np.vstack([x1, x2, (x1 + x2) / 2])).values)
    assert lw[0] + lw[1] == pytest.approx(2 * lw[2], abs=1e-9)


def test_domain_weight_saturates_and_flags():
    disc = LinearDiscriminator(np.array([-1.0]), 0.0)
    rw = domain_weights(disc, np.array([[800.0], [1.0]]))
    assert np.isfinite(rw.values).all()
    assert rw.values[0] == math.exp(LOG_SATURATION)
    np.testing.assert_array_equal(rw.saturated, [True, False])
    assert rw.any_saturated


def test_domain_weight_dimension_mismatch():
    with pytest.raises(DataError):
        domain_weight(LinearDiscriminator(np.zeros(2), 0.0), [1.0])


# ---------------------------------------------------------------------------
# discriminator training
# ---------------------------------------------------------------------------


def test_identical_distributions_shrink_to_zero():
    norms = []
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        src = _ds(rng.normal(size=(500, 3)), "source")
        tgt = _ds(rng.normal(size=(500, 3)), "target")
        disc = fit_domain_discriminator(src, tgt, l2_reg=1.0)
        norms.append(np.linalg.norm(disc.w_lr))
    assert np.percentile(norms, 95) < 0.15


def test_gaussian_pair_recovers_bayes_discriminator():
    src, tgt = _gauss_pair(5000, 0)
    disc = fit_domain_discriminator(src, tgt, l2_reg=1e-4)
    assert disc.w_lr[0] == pytest.approx(-1.0, abs=0.15)
    assert disc.c_lr == pytest.approx(0.5, abs=0.15)
    assert disc.converged


def test_loss_history_is_monotone():
    src, tgt = _gauss_pair(500, 1)
    disc = fit_domain_discriminator(src, tgt, l2_reg=1e-3)
    h = np.array(disc.loss_history)
    assert len(h) > 2
    assert np.all(np.diff(h) <= 0)


def test_single_target_sample_balanced_masses():
    rng = np.random.default_rng(2)
    src = _ds(rng.normal(size=(1000, 2)), "source")
    tgt = _ds(rng.normal(size=(1, 2)), "target")
    _, lab, mass = discriminator_problem(src, tgt, balance=True)
    assert mass[lab == 1].sum() == pytest.approx(mass[lab == 0].sum(), rel=1e-12)
    # the lone target row carries as much as 1000 source rows
    assert mass[lab == 0][0] == pytest.approx(1000 * mass[lab == 1][0], rel=1e-12)
    disc = fit_domain_discriminator(src, tgt, l2_reg=1e-2)
    assert np.all(np.isfinite(disc.w_lr)) and np.isfinite(disc.c_lr)


def test_unbalanced_fit_shifts_intercept_by_log_size_ratio():
    rng = np.random.default_rng(3)
    src = _ds(rng.normal(size=(4000, 1)), "source")
    tgt = _ds(rng.normal(size=(1000, 1)), "target")
    bal = fit_domain_discriminator(src, tgt, l2_reg=1e-4, balance=True)
    unb = fit_domain_discriminator(src, tgt, l2_reg=1e-4, balance=False)
    assert unb.c_lr - bal.c_lr == pytest.approx(math.log(4.0), abs=0.02)


def test_discriminator_gradient_matches_finite_differences():
    rng = np.random.default_rng(4)
    src = _ds(rng.normal(size=(60, 3)), "source")
    tgt = _ds(rng.normal(0.5, 1.0, size=(20, 3)), "target")
    for _ in range(10):
        theta = rng.normal(size=4)
        f, g = discriminator_objective(src, tgt, theta[:3], theta[3], 0.1)
        h = 1e-6
        fd = np.array(
            [
                (
                    discriminator_objective(src, tgt, (theta + h * e)[:3], (theta + h * e)[3], 0.1)[0]
                    - discriminator_objective(src, tgt, (theta - h * e)[:3], (theta - h * e)[3], 0.1)[0]
                )
                / (2 * h)
                for e in np.eye(4)
            ]
        )
        assert np.linalg.norm(fd - g) / np.linalg.norm(g) < 1e-6


def test_discriminator_requires_positive_l2():
    src, tgt = _gauss_pair(10, 0)
    with pytest.raises(ValueError):
        fit_domain_discriminator(src, tgt, l2_reg=0.0)


def test_discriminator_dimension_mismatch():
    with pytest.raises(DataError):
        fit_domain_discriminator(_ds(np.zeros((3, 2)), "source"), _ds(np.zeros((3, 1)), "target"))


def test_heldout_source_mean_weight_is_one():
    src, tgt = _gauss_pair(5000, 5)
    disc = fit_domain_discriminator(src, tgt, l2_reg=1e-4)
    held = np.random.default_rng(99).normal(0.0, 1.0, size=(5000, 1))
    assert domain_weights(disc, held).values.mean() == pytest.approx(1.0, abs=0.15)


# ---------------------------------------------------------------------------
# Gaussian route
# ---------------------------------------------------------------------------


def _model_1d(mu_t, mu_s, var=1.0):
    return GaussianDomainModel(np.array([mu_t]), np.array([mu_s]), np.array([[var]]), np.array([[var]]), 1e-3)


def test_gaussian_identical_densities_exactly_one():
    rng = np.random.default_rng(6)
    A = rng.normal(size=(3, 3))
    S = A @ A.T + np.eye(3)
    m = GaussianDomainModel(np.ones(3), np.ones(3), S, S.copy(), 1e-3)
    X = rng.normal(size=(50, 3)) * 4
    assert np.all(gaussian_weights(m, X).values == 1.0)


def test_gaussian_midpoint_symmetry():
    assert gaussian_weight(_model_1d(1.0, 0.0), [0.5]) == 1.0


def test_gaussian_hand_evaluated_ratio():
    # exp((2x - 1) / 2) at x = 1.5
    assert gaussian_weight(_model_1d(1.0, 0.0), [1.5]) == pytest.approx(math.e, rel=1e-12)


def test_gaussian_matches_direct_density_ratio():
    rng = np.random.default_rng(7)
    src = _ds(rng.normal(size=(300, 3)), "source")
    tgt = _ds(rng.normal(0.3, 1.4, size=(40, 3)), "target")
    m = fit_gaussian_model(src, tgt)
    X = rng.normal(size=(100, 3))
    direct = multivariate_normal(m.mu_T, m.sigma_T).pdf(X) / multivariate_normal(m.mu_S, m.sigma_S).pdf(X)
    np.testing.assert_allclose(gaussian_weights(m, X).values, direct, rtol=1e-9)


def test_gaussian_single_target_sample_covariance_is_ridge():
    src = _ds(np.random.default_rng(0).normal(size=(10, 2)), "source")
    tgt = _ds([[1.0, 2.0]], "target")
    m = fit_gaussian_model(src, tgt, ridge_eps=1e-3)
    np.testing.assert_array_equal(m.sigma_T, 1e-3 * np.eye(2))


def test_gaussian_two_point_population_variance():
    m = fit_gaussian_model(_ds([[0.0], [2.0]], "source"), _ds([[0.0]], "target"), ridge_eps=1e-3)
    assert m.mu_S[0] == 1.0
    assert m.sigma_S[0, 0] == 1.0 + 1e-3


def test_gaussian_recovers_generating_parameters():
    rng = np.random.default_rng(8)
    mu = np.array([1.0, -2.0, 0.5])
    A = np.array([[1.0, 0.0, 0.0], [0.5, 1.0, 0.0], [0.2, -0.3, 0.8]])
    cov = A @ A.T
    X = rng.multivariate_normal(mu, cov, size=5000)
    m = fit_gaussian_model(_ds(X, "source"), _ds(X[:10], "target"), ridge_eps=1e-3)
    assert np.max(np.abs(m.mu_S - mu)) < 0.05
    assert np.max(np.abs(m.sigma_S - cov)) < 0.1


def test_gaussian_model_invariants():
    m = fit_gaussian_model(_ds(np.zeros((4, 2)), "source"), _ds(np.ones((2, 2)), "target"), ridge_eps=0.01)
    for S in (m.sigma_T, m.sigma_S):
        np.testing.assert_allclose(S, S.T, atol=1e-10)
        assert np.linalg.eigvalsh(S).min() >= 0.01 - 1e-15
    with pytest.raises(ValueError):
        fit_gaussian_model(_ds(np.zeros((4, 2)), "source"), _ds(np.ones((2, 2)), "target"), ridge_eps=0.0)


def test_gaussian_overflow_saturates():
    m = GaussianDomainModel(np.zeros(1), np.zeros(1), np.array([[1.0]]), np.array([[1e-3]]), 1e-3)
    rw = gaussian_weights(m, np.array([[100.0]]))
    assert rw.saturated[0] and np.isfinite(rw.values[0])


def test_weights_csv_round_trip(tmp_path):
    w = np.array([0.5, 1e-300, 3.14159, 7.0])
    p = tmp_path / "w.csv"
    write_weights_csv(p, w)
    assert p.read_text().splitlines()[0] == "weight"
    np.testing.assert_array_equal(read_weights_csv(p), w)
