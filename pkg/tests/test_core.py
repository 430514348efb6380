import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar
from scipy.stats import kstest, multivariate_normal, norm

from conftest import random_params
from sunlib import core
from sunlib.core import OrthantCondition, affine, cdf, cgf, condition_orthant, logpdf, marginal, mode, pdf, sample, validate
from sunlib.errors import NotCorrelation, NotPositiveDefinite, RankDeficient, ShapeMismatch
from sunlib.moments import sun_mean, sun_moments
from sunlib.mvn import cdf as phi_m
from sunlib.oracle import mc_moments

seeds = st.integers(0, 2**32 - 1)


def sn_params(delta, xi=0.0, w=1.0, tau=0.0):
    return validate([xi], [[w * w]], [[delta]], [tau], [[1.0]])


def gaussian_params(rng, d, m):
    p = random_params(rng, d, m)
    return validate(p.xi, p.Omega, np.zeros((d, m)), p.tau, p.Gamma)


# ---------------------------------------------------------------------------
# validation


def test_validate_scalar_case():
    p = validate([0.0], [[1.0]], [[0.5]], [0.0], [[1.0]])
    assert np.allclose(np.linalg.eigvalsh(p.Omega_star), [0.5, 1.5])
    assert np.allclose(p.Omega_tilde, [[1.0, -0.5], [-0.5, 1.0]])
    assert np.isclose(p.prob, 0.5)


def test_validate_errors():
    with pytest.raises(NotPositiveDefinite) as e:
        validate([0.0], [[1.0]], [[1.0]], [0.0], [[1.0]])
    assert e.value.which == "Omega_star"
    with pytest.raises(NotCorrelation):
        validate([0, 0], np.eye(2), np.zeros((2, 2)), [0, 0], [[1.0, 1.2], [1.2, 1.0]])
    with pytest.raises(NotPositiveDefinite) as e:
        validate([0, 0], [[1.0, 2.0], [2.0, 1.0]], np.zeros((2, 1)), [0.0], [[1.0]])
    assert e.value.which == "Omega"
    with pytest.raises(ShapeMismatch):
        validate([0, 0], np.eye(2), np.zeros((3, 1)), [0.0], [[1.0]])
    with pytest.raises(ShapeMismatch):
        validate([0, 0], np.eye(3), np.zeros((2, 1)), [0.0], [[1.0]])


@given(seeds, st.integers(1, 4), st.integers(1, 3))
def test_derived_quantities(seed, d, m):
    p = random_params(np.random.default_rng(seed), d, m)
    Lam, Psi = p.conv.Lambda, p.conv.Psi
    assert np.allclose(np.diag(p.Omega_bar), 1.0)
    assert np.allclose(p.omega[:, None] * p.Omega_bar * p.omega[None, :], p.Omega)
    assert np.linalg.eigvalsh(Psi)[0] > 0
    assert np.allclose(p.conv.Psi_half @ p.conv.Psi_half, Psi, atol=1e-12)
    assert np.allclose(Lam @ p.Gamma, p.omega[:, None] * p.Delta, atol=1e-12)
    q = core.from_dict(p.to_dict())
    for name in ("xi", "Omega", "Delta", "tau", "Gamma"):
        assert np.array_equal(getattr(q, name), getattr(p, name))


# ---------------------------------------------------------------------------
# density


@given(seeds, st.integers(1, 4), st.integers(1, 3))
def test_logpdf_gaussian_collapse(seed, d, m):
    r = np.random.default_rng(seed)
    p = gaussian_params(r, d, m)
    x = r.standard_normal(d)
    assert abs(logpdf(p, x) - multivariate_normal(p.xi, p.Omega).logpdf(x)) <= 1e-12 * (1 + abs(logpdf(p, x)))


@pytest.mark.parametrize("x", [-1.0, 0.0, 1.0])
def test_pdf_skew_normal(x):
    d = 0.7
    ref = 2 * norm.pdf(x) * norm.cdf(d * x / np.sqrt(1 - d * d))
    assert np.isclose(pdf(sn_params(d), [x]), ref, rtol=1e-13)


@pytest.mark.parametrize("seed", [0, 1])
def test_density_normalisation(seed):
    p = random_params(np.random.default_rng(seed), 2, 2)
    X = np.random.default_rng(seed + 10).multivariate_normal(p.xi, p.Omega, size=10**5)
    ratio = np.exp(logpdf(p, X) - multivariate_normal(p.xi, p.Omega).logpdf(X))
    assert abs(ratio.mean() - 1) <= 4 * ratio.std() / np.sqrt(len(X))


def test_logpdf_vectorised(rng):
    p = random_params(rng, 3, 2)
    X = rng.standard_normal((5, 3))
    assert np.allclose(logpdf(p, X), [logpdf(p, x) for x in X], atol=1e-14)
    with pytest.raises(ShapeMismatch):
        logpdf(p, np.zeros(2))


# ---------------------------------------------------------------------------
# distribution function and cgf


def test_cdf_gaussian_factorises(rng):
    p = gaussian_params(rng, 2, 2)
    y = rng.standard_normal(2)
    assert abs(cdf(p, y) - phi_m((y - p.xi) / p.omega, p.Omega_bar)) <= 1e-13


def test_cdf_upper_limit(rng):
    p = random_params(rng, 2, 2)
    assert abs(cdf(p, p.xi + 12 * p.omega) - 1) <= 1e-8


def test_cdf_vs_sampler():
    p = random_params(np.random.default_rng(4), 2, 1)
    n = 10**6
    Y = sample(p, n, seed=5)
    f = np.mean(np.all(Y <= p.xi, axis=1))
    assert abs(cdf(p, p.xi) - f) <= 4 * np.sqrt(f * (1 - f) / n)


@given(seeds, st.integers(0, 1))
def test_cdf_monotone(seed, j):
    r = np.random.default_rng(seed)
    p = random_params(r, 2, 2)
    y = p.xi + r.standard_normal(2)
    z = y.copy()
    z[j] += 0.1
    assert cdf(p, z) >= cdf(p, y) - 1e-12


@given(seeds)
def test_marginal_cdf_derivative_is_pdf(seed):
    r = np.random.default_rng(seed)
    p = random_params(r, 3, 2)
    q = marginal(p, [int(r.integers(3))])
    y = q.xi + q.omega * r.standard_normal(1)
    h = 1e-4
    dcdf = (cdf(q, y + h) - cdf(q, y - h)) / (2 * h)
    assert abs(dcdf - pdf(q, y)) <= 1e-4


def test_cgf_basics(rng):
    p = random_params(rng, 3, 2)
    assert cgf(p, np.zeros(3)) == 0.0
    g = gaussian_params(rng, 3, 2)
    t = rng.standard_normal(3)
    assert np.isclose(cgf(g, t), g.xi @ t + 0.5 * t @ g.Omega @ t, atol=1e-14)


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_cgf_gradient_is_mean(seed, d, m):
    p = random_params(np.random.default_rng(seed), d, m)
    h = 1e-5
    E = np.eye(d) * h
    g = np.array([(cgf(p, E[i]) - cgf(p, -E[i])) / (2 * h) for i in range(d)])
    assert np.max(np.abs(g - sun_mean(p))) <= 1e-5


# ---------------------------------------------------------------------------
# affine maps


def test_affine_identity(rng):
    p = random_params(rng, 3, 2)
    q = affine(p, None, np.eye(3))
    for name in ("xi", "Omega", "Delta", "tau", "Gamma"):
        assert np.allclose(getattr(q, name), getattr(p, name), atol=1e-15)


def test_affine_permutation(rng):
    p = random_params(rng, 3, 2)
    perm = [2, 0, 1]
    q = affine(p, None, np.eye(3)[:, perm])
    assert np.allclose(q.xi, p.xi[perm])
    assert np.allclose(q.Omega, p.Omega[np.ix_(perm, perm)])
    assert np.allclose(q.Delta, p.Delta[perm])


def test_affine_push_forward_moments():
    r = np.random.default_rng(31)
    p = random_params(r, 3, 2)
    A = r.standard_normal((3, 2))
    a = r.standard_normal(2)
    q = affine(p, a, A)
    Y = sample(p, 10**6, seed=9)
    est, se = mc_moments(a + Y @ A)
    det = sun_moments(q)
    for key in ("m1", "m2", "m3", "m4"):
        assert np.all(np.abs(getattr(est, key) - getattr(det, key)) <= 4 * getattr(se, key)), key


@given(seeds)
def test_affine_composition(seed):
    r = np.random.default_rng(seed)
    p = random_params(r, 3, 2)
    A, B = r.standard_normal((3, 3)), r.standard_normal((3, 2))
    a, b = r.standard_normal(3), r.standard_normal(2)
    two_step = affine(affine(p, a, A), b, B)
    one_step = affine(p, b + B.T @ a, A @ B)
    for name in ("xi", "Omega", "Delta"):
        assert np.allclose(getattr(two_step, name), getattr(one_step, name), atol=1e-10)


def test_affine_rank_deficient(rng):
    p = random_params(rng, 3, 1)
    with pytest.raises(RankDeficient):
        affine(p, None, np.ones((3, 2)))
    with pytest.raises(RankDeficient):
        affine(p, None, rng.standard_normal((3, 4)))
    with pytest.raises(ShapeMismatch):
        marginal(p, [0, 0])


# ---------------------------------------------------------------------------
# sampling


def test_sample_gaussian_margins_ks(rng):
    p = gaussian_params(rng, 3, 2)
    Y = sample(p, 10**5, seed=3)
    for j in range(3):
        assert kstest(Y[:, j], "norm", args=(p.xi[j], p.omega[j])).pvalue > 0.001


def test_sample_mean():
    p = random_params(np.random.default_rng(6), 2, 2)
    n = 10**6
    Y = sample(p, n, seed=12)
    assert np.all(np.abs(Y.mean(0) - sun_mean(p)) <= 4 * Y.std(0) / np.sqrt(n))


def test_sample_deterministic(rng):
    p = random_params(rng, 2, 2)
    assert np.array_equal(sample(p, 1000, seed=1), sample(p, 1000, seed=1))


# ---------------------------------------------------------------------------
# orthant conditioning


@pytest.mark.parametrize("y1,direction", [(0.3, "greater"), (-1.0, "less"), (2.0, "greater")])
def test_condition_independent(y1, direction):
    p = validate([0.3, -0.5], np.eye(2), np.zeros((2, 1)), [0.2], [[1.0]])
    q = condition_orthant(p, OrthantCondition([0], [y1], direction))
    for y in (-1.0, 0.0, 0.8):
        assert abs(cdf(q, [y]) - norm.cdf(y, -0.5, 1.0)) <= 1e-12


@given(seeds, st.sampled_from(["greater", "less"]))
def test_condition_shapes(seed, direction):
    r = np.random.default_rng(seed)
    p = random_params(r, 3, 2)
    q = condition_orthant(p, OrthantCondition([1], [0.2], direction))
    assert (q.d, q.m) == (2, 3)
    assert np.allclose(q.xi, p.xi[[0, 2]])


def test_condition_far_threshold_recovers_marginal(rng):
    p = random_params(rng, 3, 1)
    q = condition_orthant(p, OrthantCondition([0], [40 * p.omega[0] - p.xi[0]], "greater"))
    marg = marginal(p, [1, 2])
    for _ in range(5):
        y = marg.xi + marg.omega * rng.standard_normal(2)
        assert abs(cdf(q, y) - cdf(marg, y)) <= p.cfg.abs_tol


def test_condition_errors(rng):
    p = random_params(rng, 2, 1)
    with pytest.raises(ShapeMismatch):
        condition_orthant(p, OrthantCondition([0, 1], [0.0, 0.0]))
    with pytest.raises(ShapeMismatch):
        OrthantCondition([0, 0], [0.0, 0.0])
    with pytest.raises(ValueError):
        OrthantCondition([0], [0.0], "sideways")


# ---------------------------------------------------------------------------
# mode and log-concavity


def test_mode_gaussian(rng):
    p = gaussian_params(rng, 3, 2)
    assert np.allclose(mode(p), p.xi, atol=1e-10)


def test_mode_skew_normal_golden_section():
    p = sn_params(0.99)
    ref = minimize_scalar(lambda x: -logpdf(p, [x]), bracket=(-1.0, 0.5, 2.0), method="golden", tol=1e-10).x
    assert abs(mode(p)[0] - ref) <= 1e-6


def test_mode_beats_random_probes():
    r = np.random.default_rng(17)
    p = random_params(r, 3, 2)
    x = mode(p)
    _, g, _ = core.logpdf_derivatives(p, x)
    f = logpdf(p, x)
    assert np.linalg.norm(g) <= 1e-8 * (1 + abs(f))
    probes = x + r.standard_normal((10**4, 3)) * p.omega
    assert np.all(logpdf(p, probes) <= f)


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_logpdf_hessian_negative_definite(seed, d, m):
    r = np.random.default_rng(seed)
    p = random_params(r, d, m)
    x = p.xi + p.omega * r.standard_normal(d)
    _, _, H = core.logpdf_derivatives(p, x)
    assert np.linalg.eigvalsh(H)[-1] < 0


def test_measure_log_concavity():
    p = random_params(np.random.default_rng(8), 2, 2)
    n = 10**6
    Y = sample(p, n, seed=2)
    r = np.random.default_rng(3)

    def prob(lo, hi):
        inside = np.all((Y >= lo) & (Y <= hi), axis=1)
        return inside.mean()

    for _ in range(5):
        loA = p.xi + p.omega * r.uniform(-2, 0.5, 2)
        hiA = loA + p.omega * r.uniform(0.2, 2, 2)
        loB = p.xi + p.omega * r.uniform(-1, 1.5, 2)
        hiB = loB + p.omega * r.uniform(0.2, 2, 2)
        pA, pB = prob(loA, hiA), prob(loB, hiB)
        pM = prob(0.5 * (loA + loB), 0.5 * (hiA + hiB))
        se = np.sqrt(pM * (1 - pM) / n) + np.sqrt(pA * (1 - pA) / n) + np.sqrt(pB * (1 - pB) / n)
        assert pM >= np.sqrt(pA * pB) - 4 * se
