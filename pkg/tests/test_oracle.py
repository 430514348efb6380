import numpy as np
import pytest
from scipy.spatial.distance import cdist
from scipy.stats import kstest

from conftest import random_params
from sunlib.core import cdf, validate
from sunlib.errors import AcceptanceTooLow, DegenerateSample
from sunlib.moments import mardia, sun_moments
from sunlib.oracle import McEstimate, chunk_sizes, draw, mc_cdf, mc_mardia, mc_moments, sample_by_conditioning


def energy_statistic(X, Y):
    return 2 * cdist(X, Y).mean() - cdist(X, X).mean() - cdist(Y, Y).mean()


def energy_test(X, Y, n_perm=200, seed=0):
    r = np.random.default_rng(seed)
    obs = energy_statistic(X, Y)
    Z = np.vstack([X, Y])
    n = len(X)
    hits = 0
    for _ in range(n_perm):
        idx = r.permutation(len(Z))
        hits += energy_statistic(Z[idx[:n]], Z[idx[n:]]) >= obs
    return (hits + 1) / (n_perm + 1)


def test_conditioning_sampler_gaussian_case(rng):
    p = random_params(rng, 2, 2)
    g = validate(p.xi, p.Omega, np.zeros((2, 2)), p.tau, p.Gamma)
    Y = sample_by_conditioning(g, 20000, seed=1)
    for j in range(2):
        assert kstest(Y[:, j], "norm", args=(g.xi[j], g.omega[j])).pvalue > 0.001


def test_conditioning_acceptance_rate(rng):
    # the rejection step keeps a fraction pi = Phi_m(tau; Gamma) of joint draws
    p = random_params(rng, 2, 2)
    n = 10**6
    r = np.random.default_rng(4)
    Z = r.standard_normal((n, 4)) @ np.linalg.cholesky(p.Omega_star).T
    f = np.mean(np.all(Z[:, 2:] + p.tau > 0, axis=1))
    assert abs(f - p.prob) <= 4 * np.sqrt(f * (1 - f) / n)


def test_samplers_agree_in_distribution():
    p = random_params(np.random.default_rng(3), 2, 2)
    X = draw(p, 1000, seed=1, method="additive")
    Y = draw(p, 1000, seed=2, method="conditioning")
    assert energy_test(X, Y) > 0.001


def test_samplers_agree_in_moments():
    p = random_params(np.random.default_rng(5), 2, 1)
    ea, sa = mc_moments(draw(p, 10**6, seed=1, method="additive"))
    ec, sc = mc_moments(draw(p, 10**6, seed=2, method="conditioning"))
    for key in ("m1", "m2", "m3", "m4"):
        diff = np.abs(getattr(ea, key) - getattr(ec, key))
        assert np.all(diff <= 4 * np.hypot(getattr(sa, key), getattr(sc, key))), key


@pytest.mark.parametrize("method", ["additive", "conditioning"])
def test_draw_reproducible_and_thread_independent(rng, method):
    p = random_params(rng, 3, 2)
    a = draw(p, 5000, seed=11, method=method, chunk=1024)
    b = draw(p, 5000, seed=11, method=method, chunk=1024, threads=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, draw(p, 5000, seed=12, method=method, chunk=1024))


def test_chunk_sizes():
    assert chunk_sizes(10, 4) == [4, 4, 2]
    assert chunk_sizes(8, 4) == [4, 4]
    assert sum(chunk_sizes(10**6)) == 10**6


def test_draw_unknown_method(rng):
    with pytest.raises(ValueError):
        draw(random_params(rng, 2, 1), 10, seed=0, method="gibbs")


def test_acceptance_too_low():
    p = validate([0.0], [[1.0]], [[0.5]], [-4.5], [[1.0]])
    with pytest.raises(AcceptanceTooLow):
        sample_by_conditioning(p, 10, seed=0)


def test_minimum_sample_size():
    with pytest.raises(ValueError):
        McEstimate(0.0, 1.0, 999)
    with pytest.raises(ValueError):
        mc_moments(np.zeros((10, 2)))


def test_degenerate_sample():
    with pytest.raises(DegenerateSample):
        mc_mardia(np.ones((2000, 2)))
    X = np.random.default_rng(0).standard_normal((2000, 1))
    with pytest.raises(DegenerateSample):
        mc_mardia(np.hstack([X, 2 * X]))


def test_mardia_of_normal_sample():
    X = np.random.default_rng(2).standard_normal((10**6, 2))
    b1, b2 = mc_mardia(X, seed=2)
    assert b1.z_score(0.0) <= 4
    assert b2.z_score(8.0) <= 4


def test_mc_mardia_vs_deterministic():
    p = random_params(np.random.default_rng(9), 2, 2)
    b1, b2 = mc_mardia(draw(p, 10**6, seed=3), seed=3)
    t1, t2 = mardia(p)
    assert b1.z_score(t1) <= 4 and b2.z_score(t2) <= 4


def test_standard_error_scaling():
    p = random_params(np.random.default_rng(1), 2, 1)
    _, s1 = mc_moments(draw(p, 50000, seed=1))
    _, s4 = mc_moments(draw(p, 200000, seed=2))
    for key in ("m1", "m2", "m3", "m4"):
        ratio = getattr(s1, key) / getattr(s4, key)
        assert np.all((ratio >= 1.6) & (ratio <= 2.4)), key


def test_mc_moments_vs_deterministic():
    p = random_params(np.random.default_rng(6), 3, 2)
    est, se = mc_moments(draw(p, 10**6, seed=8))
    det = sun_moments(p)
    for key in ("m1", "m2", "m3", "m4"):
        assert np.all(np.abs(getattr(est, key) - getattr(det, key)) <= 4 * getattr(se, key)), key


def test_mc_cdf(rng):
    p = random_params(rng, 2, 2)
    y = p.xi + 0.3 * p.omega
    est = mc_cdf(draw(p, 10**6, seed=5), y, seed=5)
    assert est.z_score(cdf(p, y)) <= 4
    assert est.n_samples == 10**6 and est.seed == 5


def test_z_score_zero_error():
    e = McEstimate(np.array([1.0, 2.0]), np.array([0.0, 0.0]), 1000)
    assert e.z_score([1.0, 3.0]).tolist() == [0.0, np.inf]
