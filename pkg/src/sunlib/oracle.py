"""Brute-force Monte Carlo estimators used as ground truth.

Samples are produced in fixed-size chunks, each with its own generator spawned
from the master seed, so results do not depend on how many workers run.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kronalg as ka
from .core import SunParams, sample as additive_sample
from .errors import AcceptanceTooLow, DegenerateSample
from .momentset import MomentAccumulator
from .mvn import conditional_gaussian
from .truncmvn import inside

MIN_ACCEPTANCE = 1e-4
MIN_SAMPLES = 1000
CHUNK = 2**16


@dataclass(frozen=True)
class McEstimate:
    value: float | np.ndarray
    std_error: float | np.ndarray
    n_samples: int
    seed: int | None = None

    def __post_init__(self):
        if self.n_samples < MIN_SAMPLES:
            raise ValueError(f"need at least {MIN_SAMPLES} samples, got {self.n_samples}")
        if np.any(np.asarray(self.std_error) < 0):
            raise ValueError("standard errors must be non-negative")

    def z_score(self, target):
        se = np.asarray(self.std_error, dtype=float)
        diff = np.abs(np.asarray(self.value) - np.asarray(target))
        return np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 0, np.inf, 0.0))


def sample_by_conditioning(p: SunParams, n: int, seed=None, rng=None):
    """Selection on the joint normal (X0, X1) ~ N(0, Omega*): draw X1, keep the
    rows with X1 + tau > 0, draw X0 given X1, return xi + omega X0."""
    if p.prob < MIN_ACCEPTANCE:
        raise AcceptanceTooLow(f"acceptance probability {p.prob:.3g} below {MIN_ACCEPTANCE:g}")
    rng = np.random.default_rng(seed) if rng is None else rng
    d, m = p.d, p.m
    S = p.Omega_star
    L1 = np.linalg.cholesky(S[d:, d:])
    X1 = np.empty((n, m))
    filled = 0
    while filled < n:
        need = n - filled
        batch = int(min(max(1.2 * need / p.prob + 64, 1024), 2**21))
        Z = rng.standard_normal((batch, m)) @ L1.T
        ok = Z[inside(Z, p.tau)]
        take = min(len(ok), need)
        X1[filled : filled + take] = ok[:take]
        filled += take
    _, mean, ccov = conditional_gaussian(S, range(d, d + m), X1)
    X0 = mean + rng.standard_normal((n, d)) @ np.linalg.cholesky(ccov).T
    return p.xi + X0 * p.omega


_SAMPLERS = {"additive": additive_sample, "conditioning": sample_by_conditioning}


def chunk_sizes(n: int, chunk: int = CHUNK):
    full, rest = divmod(n, chunk)
    return [chunk] * full + ([rest] if rest else [])


def draw(p: SunParams, n: int, seed: int, method="additive", threads: int = 1, chunk: int = CHUNK):
    """``n`` draws using per-chunk generators spawned from ``seed``."""
    if method not in _SAMPLERS:
        raise ValueError(f"unknown sampling method {method!r}")
    sampler = _SAMPLERS[method]
    sizes = chunk_sizes(n, chunk)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def job(k):
        return sampler(p, sizes[k], rng=np.random.default_rng(seeds[k]))

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(job, range(len(sizes))))
    else:
        parts = [job(k) for k in range(len(sizes))]
    return np.vstack(parts) if parts else np.empty((0, p.d))


def _check_n(X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {X.shape[0]}")
    return X


def mc_moments(samples, chunk: int = CHUNK):
    """Plug-in raw moments and entrywise standard errors."""
    X = _check_n(samples)
    acc = MomentAccumulator(X.shape[1])
    for start in range(0, len(X), chunk):
        acc.add(X[start : start + chunk])
    return acc.result()


def mc_cdf(samples, y, seed=None) -> McEstimate:
    X = _check_n(samples)
    ind = inside(-X, np.asarray(y, dtype=float))
    f = ind.mean()
    return McEstimate(float(f), float(np.sqrt(f * (1 - f) / len(X))), len(X), seed)


def _standardize(X):
    mu = X.mean(axis=0)
    S = np.cov(X, rowvar=False, bias=True).reshape(X.shape[1], X.shape[1])
    w = np.linalg.eigvalsh(S)
    if w[-1] <= 0 or w[0] <= 1e-12 * w[-1]:
        raise DegenerateSample("empirical covariance is singular")
    return (X - mu) @ ka.sym_inv_sqrt(S)


def mc_mardia(samples, seed=None):
    """Mardia skewness from independent half-sample pairs and kurtosis from
    all draws, each with a standard error."""
    X = _check_n(samples)
    Z = _standardize(X)
    h = len(Z) // 2
    s = np.einsum("ij,ij->i", Z[:h], Z[h : 2 * h]) ** 3
    k = np.einsum("ij,ij->i", Z, Z) ** 2
    b1 = McEstimate(float(s.mean()), float(s.std(ddof=1) / np.sqrt(h)), len(X), seed)
    b2 = McEstimate(float(k.mean()), float(k.std(ddof=1) / np.sqrt(len(k))), len(X), seed)
    return b1, b2

