"""Multivariate normal primitives: density, orthant probabilities and the
first/second partial derivatives of the distribution function.

Two engines compute ``Phi_m(u; R)``:

* ``quadrature`` (default for m <= 4): exact ``ndtr`` for m=1, a Gauss-Legendre
  rule on the arcsine form of the bivariate integral for m=2, and for m>=3 the
  correlation-path reduction ``R(t) = (1-t) I + t R`` which writes
  ``Phi_m`` as the independent product plus a one-dimensional integral over
  ``t`` of pairwise densities times ``Phi_{m-2}`` of the conditional law.
  Nodes are fixed, so the estimate is a smooth function of ``u``.
* ``qmc``: separation-of-variables integrand with variable prioritisation,
  evaluated on a randomly shifted Kronecker (Richtmyer) lattice with a tent
  periodisation.  Shifts come from ``numpy.random.default_rng(seed)``.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DimensionMismatch, NotCorrelationMatrix, NotPositiveDefinite, ToleranceNotReached

LOG_2PI = np.log(2.0 * np.pi)
INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class IntegrationConfig:
    abs_tol: float = 1e-8
    max_points: int = 2**20
    seed: int = 20240917
    threads: int = 1
    engine: str = "auto"  # auto | quadrature | qmc
    quad_max_dim: int = 4
    n_shifts: int = 12

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_points < 2**10:
            raise ValueError("max_points must be at least 2**10")
        if self.engine not in ("auto", "quadrature", "qmc"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


DEFAULT_CONFIG = IntegrationConfig()


@dataclass(frozen=True)
class GaussianSpec:
    covariance: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if S.shape[0] != S.shape[1]:
            raise DimensionMismatch(f"covariance must be square, got {S.shape}")
        if np.max(np.abs(S - S.T)) > 1e-12 * max(1.0, np.max(np.abs(S))):
            raise NotPositiveDefinite("covariance not symmetric", which="covariance")
        if np.linalg.eigvalsh(S)[0] <= 0:
            raise NotPositiveDefinite("covariance not positive definite", which="covariance")
        object.__setattr__(self, "covariance", S)
        object.__setattr__(self, "dim", S.shape[0])


@dataclass(frozen=True)
class ReducedGamma:
    """Quantities obtained by removing component ``j`` of a correlation matrix."""

    j: int
    tau_minus: np.ndarray
    Gamma_minus: np.ndarray
    gamma_col: np.ndarray
    Gamma_tilde: np.ndarray


def reduced_gamma(tau, Gamma, j: int) -> ReducedGamma:
    tau = np.asarray(tau, dtype=float)
    keep = np.delete(np.arange(len(tau)), j)
    G_minus = Gamma[np.ix_(keep, keep)]
    # column j of Gamma with its j-th entry removed
    g = Gamma[keep, j]
    return ReducedGamma(j, tau[keep], G_minus, g, G_minus - np.outer(g, g))


# ---------------------------------------------------------------------------
# densities


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return INV_SQRT_2PI * np.exp(-0.5 * x * x)


def mvn_logpdf(x, spec: GaussianSpec):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.dim:
        raise DimensionMismatch(f"x has length {x.shape[-1]}, expected {spec.dim}")
    L = np.linalg.cholesky(spec.covariance)
    z = np.linalg.solve(L, x.T if x.ndim > 1 else x)
    quad = np.sum(z * z, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return -0.5 * (spec.dim * LOG_2PI + logdet + quad)


def mvn_pdf(x, spec: GaussianSpec):
    return np.exp(mvn_logpdf(x, spec))


def bvn_pdf(x, y, rho):
    r2 = 1.0 - rho * rho
    return np.exp(-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * r2)) / (2.0 * np.pi * np.sqrt(r2))


# ---------------------------------------------------------------------------
# helpers


def as_correlation(cov):
    """Return ``(R, s)`` with ``cov = diag(s) R diag(s)``."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    s = np.sqrt(np.diag(cov))
    R = cov / np.outer(s, s)
    np.fill_diagonal(R, 1.0)
    return R, s


def check_correlation(Gamma, name="Gamma"):
    G = np.atleast_2d(np.asarray(Gamma, dtype=float))
    if G.shape[0] != G.shape[1]:
        raise DimensionMismatch(f"{name} must be square")
    if np.max(np.abs(np.diag(G) - 1.0)) > 1e-12:
        raise NotCorrelationMatrix(f"{name} must have unit diagonal")
    if np.max(np.abs(G - G.T)) > 1e-12:
        raise NotCorrelationMatrix(f"{name} must be symmetric")
    if G.shape[0] > 1 and np.linalg.eigvalsh(G)[0] < 1e-10:
        raise NotCorrelationMatrix(f"{name} is not positive definite")
    return G


def conditional_gaussian(cov, given, values):
    """Mean shift matrix and covariance of the remaining coordinates of
    ``N(0, cov)`` when coordinates ``given`` are fixed at ``values``.

    Returns ``(rest, mean, ccov)`` where ``values`` may be a batch (n, k).
    """
    m = cov.shape[0]
    given = list(given)
    rest = [i for i in range(m) if i not in given]
    Sgg = cov[np.ix_(given, given)]
    Srg = cov[np.ix_(rest, given)]
    W = np.linalg.solve(Sgg, Srg.T).T
    mean = np.asarray(values, dtype=float) @ W.T
    ccov = cov[np.ix_(rest, rest)] - W @ Srg.T
    return rest, mean, 0.5 * (ccov + ccov.T)


# ---------------------------------------------------------------------------
# quadrature engine


@lru_cache(maxsize=None)
def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _gl_interval(a, b, n):
    x, w = _gl(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


_BVN_SWITCH = 0.925
_BVN_NODES = 48


def bvn_cdf(h, k, rho):
    """P(X <= h, Y <= k) for a standard bivariate normal with correlation rho.

    Vectorised over broadcastable ``h``, ``k``, ``rho``.  Uses the arcsine
    substitution of the correlation integral, integrated from 0 for
    ``|rho| <= 0.925`` and from the perfectly correlated end otherwise.
    """
    h, k, rho = np.broadcast_arrays(
        np.asarray(h, dtype=float), np.asarray(k, dtype=float), np.asarray(rho, dtype=float)
    )
    shape = h.shape
    h = np.clip(h.ravel(), -40.0, 40.0)
    k = np.clip(k.ravel(), -40.0, 40.0)
    rho = np.clip(rho.ravel(), -1.0 + 1e-15, 1.0 - 1e-15)
    neg = rho < 0
    # Phi2(h, k; rho) = Phi(h) - Phi2(h, -k; -rho)
    kk = np.where(neg, -k, k)
    rr = np.abs(rho)
    out = np.empty_like(h)

    lo = rr <= _BVN_SWITCH
    x, w = _gl(_BVN_NODES)
    if np.any(lo):
        hl, kl, rl = h[lo], kk[lo], rr[lo]
        ub = np.arcsin(rl)
        th = 0.5 * ub[:, None] * (x[None, :] + 1.0)
        out[lo] = ndtr(hl) * ndtr(kl) + _arcsine_integral(hl, kl, th, 0.5 * ub[:, None] * w) / (2 * np.pi)
    hi = ~lo
    if np.any(hi):
        hh, kh, rh = h[hi], kk[hi], rr[hi]
        out[hi] = ndtr(np.minimum(hh, kh)) - _high_corr_tail(hh, kh, rh)
    out = np.where(neg, ndtr(h) - out, out)
    return np.clip(out, 0.0, 1.0).reshape(shape)


def _arcsine_integral(h, k, th, wts):
    s = np.sin(th)
    c2 = np.cos(th) ** 2
    hs = h[:, None]
    ks = k[:, None]
    # (h^2 + k^2 - 2hk sin) = (h - k)^2 + 2hk(1 - sin), written to keep accuracy near sin -> 1
    num = (hs - ks) ** 2 + 2.0 * hs * ks * (1.0 - s)
    return np.sum(wts * np.exp(-num / (2.0 * c2)), axis=1)


_TAIL_PANELS = 40
_TAIL_NODES = 8


def _high_corr_tail(h, k, rho):
    """Integral of the bivariate density over correlations in [rho, 1].

    With ``x = sqrt(1 - r^2)`` the integrand is
    ``exp(-(h-k)^2 / (2 x^2)) exp(-hk / (1 + r)) / (2 pi r)`` on ``[0, sqrt(1-rho^2)]``;
    the first factor can switch on at any scale, so the panels are graded
    geometrically towards ``x = 0``.
    """
    a = np.sqrt((1.0 - rho) * (1.0 + rho))
    edges = 0.5 ** np.arange(_TAIL_PANELS, -1, -1)  # 2^-40 .. 1
    xg, wg = _gl(_TAIL_NODES)
    lo, hi_ = edges[:-1], edges[1:]
    frac = (0.5 * (hi_ - lo)[:, None] * (xg[None, :] + 1.0) + lo[:, None]).ravel()
    wfrac = (0.5 * (hi_ - lo)[:, None] * wg[None, :]).ravel()
    x = a[:, None] * frac[None, :]
    wts = a[:, None] * wfrac[None, :]
    r = np.sqrt(1.0 - x * x)
    bs = (h - k)[:, None] ** 2
    hk = (h * k)[:, None]
    f = np.exp(-bs / (2.0 * x * x) - hk / (1.0 + r)) / r
    return np.sum(wts * f, axis=1) / (2.0 * np.pi)


# t-panels for the correlation path, graded towards t = 1
_PATH_PANELS = (0.0, 0.5, 0.8, 0.95, 1.0)
_PATH_NODES = 20


@lru_cache(maxsize=None)
def _path_rule(nodes):
    ts, ws = [], []
    for a, b in zip(_PATH_PANELS[:-1], _PATH_PANELS[1:]):
        t, w = _gl_interval(a, b, nodes)
        ts.append(t)
        ws.append(w)
    return np.concatenate(ts), np.concatenate(ws)


def _quad_cdf(U, R, nodes=_PATH_NODES):
    """Batched ``Phi_m`` for rows of ``U`` (n, m) with per-row correlations ``R`` (n, m, m)."""
    n, m = U.shape
    if m == 0:
        return np.ones(n)
    if m == 1:
        return ndtr(U[:, 0])
    if m == 2:
        return bvn_cdf(U[:, 0], U[:, 1], R[:, 0, 1])
    t, wt = _path_rule(nodes)
    T = len(t)
    total = np.prod(ndtr(U), axis=1)
    for i, j in combinations(range(m), 2):
        rho = R[:, i, j]
        if not np.any(rho != 0.0):
            continue
        rest = [r for r in range(m) if r not in (i, j)]
        # rows are (n, T)
        tr = t[None, :] * rho[:, None]
        det = 1.0 - tr * tr
        ui = U[:, i][:, None]
        uj = U[:, j][:, None]
        dens = np.exp(-(ui * ui - 2 * tr * ui * uj + uj * uj) / (2 * det)) / (2 * np.pi * np.sqrt(det))
        B = R[:, rest][:, :, [i, j]]  # (n, k, 2), scaled by t below
        # P^{-1} u for the pair block [[1, tr], [tr, 1]]
        a1 = (ui - tr * uj) / det
        a2 = (uj - tr * ui) / det
        tt = t[None, :, None]
        mean = tt * (B[:, None, :, 0] * a1[:, :, None] + B[:, None, :, 1] * a2[:, :, None])  # (n, T, k)
        Rrest = R[:, rest][:, :, rest]
        k = len(rest)
        eye = np.eye(k)
        # B P^{-1} B^T with B scaled by t
        b0 = B[:, None, :, 0]
        b1 = B[:, None, :, 1]
        inv11 = (1.0 / det)[:, :, None, None]
        inv12 = (-tr / det)[:, :, None, None]
        BPB = inv11 * (b0[..., :, None] * b0[..., None, :] + b1[..., :, None] * b1[..., None, :]) + inv12 * (
            b0[..., :, None] * b1[..., None, :] + b1[..., :, None] * b0[..., None, :]
        )
        cov = (1.0 - tt[..., None]) * eye + tt[..., None] * Rrest[:, None] - (tt**2)[..., None] * BPB
        sd = np.sqrt(np.einsum("ntkk->ntk", cov))
        Z = (U[:, rest][:, None, :] - mean) / sd
        Rc = cov / (sd[..., :, None] * sd[..., None, :])
        idx = np.arange(k)
        Rc[..., idx, idx] = 1.0
        inner = _quad_cdf(Z.reshape(n * T, k), Rc.reshape(n * T, k, k), nodes).reshape(n, T)
        total = total + rho * np.sum(wt[None, :] * dens * inner, axis=1)
    return total


# ---------------------------------------------------------------------------
# QMC engine

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61)
_BLOCK = 2**13


def _prioritised_cholesky(u, R):
    """Reorder variables (smallest conditional probability first) and return
    the permuted bounds with the lower Cholesky factor."""
    m = len(u)
    u = u.copy()
    C = R.copy()
    L = np.zeros((m, m))
    y = np.zeros(m)
    order = np.arange(m)
    for i in range(m):
        best, best_p = i, np.inf
        for j in range(i, m):
            v = C[j, j] - L[j, :i] @ L[j, :i]
            s = np.sqrt(max(v, 1e-300))
            p = ndtr((u[j] - L[j, :i] @ y[:i]) / s)
            if p < best_p:
                best, best_p = j, p
        if best != i:
            u[[i, best]] = u[[best, i]]
            C[[i, best]] = C[[best, i]]
            C[:, [i, best]] = C[:, [best, i]]
            L[[i, best]] = L[[best, i]]
            order[[i, best]] = order[[best, i]]
        v = C[i, i] - L[i, :i] @ L[i, :i]
        if v <= 0:
            raise NotPositiveDefinite("covariance lost positive definiteness in QMC setup")
        L[i, i] = np.sqrt(v)
        for j in range(i + 1, m):
            L[j, i] = (C[j, i] - L[j, :i] @ L[i, :i]) / L[i, i]
        b = (u[i] - L[i, :i] @ y[:i]) / L[i, i]
        pb = ndtr(b)
        y[i] = -norm_pdf(b) / pb if pb > 1e-300 else b
    return u, L


def _sov_values(w, u, L):
    """Separation-of-variables integrand at points ``w`` (n, m-1) in [0, 1]."""
    n = w.shape[0]
    m = len(u)
    y = np.zeros((n, m))
    e = np.full(n, ndtr(u[0] / L[0, 0]))
    f = e.copy()
    for i in range(1, m):
        wi = np.clip(w[:, i - 1] * e, 1e-300, 1.0 - 1e-16)
        y[:, i - 1] = ndtri(wi)
        e = ndtr((u[i] - y[:, :i] @ L[i, :i]) / L[i, i])
        f = f * e
    return f


def _qmc_block(args):
    start, stop, q, shift, u, L = args
    k = np.arange(start, stop, dtype=float)[:, None]
    x = np.mod(k * q[None, :] + shift[None, :], 1.0)
    w = np.abs(2.0 * x - 1.0)
    return float(np.sum(_sov_values(w, u, L)))


def _qmc_cdf(u, R, cfg: IntegrationConfig):
    m = len(u)
    if m > len(_PRIMES) - 1:
        raise DimensionMismatch("qmc engine supports m <= 16")
    up, L = _prioritised_cholesky(u, R)
    if m == 1:
        return float(ndtr(up[0])), 0.0
    q = np.sqrt(np.array(_PRIMES[: m - 1], dtype=float))
    rng = np.random.default_rng(int(cfg.seed))
    shifts = rng.random((cfg.n_shifts, m - 1))
    sums = np.zeros(cfg.n_shifts)
    n_done = 0
    n_target = 2**10
    est, err = 0.0, np.inf
    per_shift_budget = max(cfg.max_points // cfg.n_shifts, 2**10)
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    try:
        while True:
            blocks = []
            for s in range(cfg.n_shifts):
                for b0 in range(n_done, n_target, _BLOCK):
                    blocks.append((s, (b0, min(b0 + _BLOCK, n_target), q, shifts[s], up, L)))
            mapper = pool.map if pool is not None else map
            results = list(mapper(_qmc_block, [a for _, a in blocks]))
            for (s, _), r in zip(blocks, results):
                sums[s] += r
            n_done = n_target
            means = sums / n_done
            est = float(np.mean(means))
            err = float(np.std(means, ddof=1) / np.sqrt(cfg.n_shifts))
            if err <= cfg.abs_tol or 2 * n_target > per_shift_budget:
                break
            n_target *= 2
    finally:
        if pool is not None:
            pool.shutdown()
    if err > cfg.abs_tol:
        warnings.warn(
            ToleranceNotReached(f"QMC error estimate {err:.3g} exceeds abs_tol {cfg.abs_tol:.3g} (m={m})"),
            stacklevel=3,
        )
    return min(max(est, 0.0), 1.0), err


# ---------------------------------------------------------------------------
# public distribution function


def _prepare(u, cov):
    """Standardise, drop +inf coordinates, flag any -inf coordinate."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape != (len(u), len(u)):
        raise DimensionMismatch(f"u has length {len(u)} but covariance is {cov.shape}")
    R, s = as_correlation(cov)
    z = u / s
    if np.any(np.isnan(z)):
        raise ValueError("nan in integration limits")
    if np.any(z == -np.inf):
        return None, None
    keep = np.isfinite(z)
    return z[keep], R[np.ix_(keep, keep)]


def _use_quadrature(m, cfg):
    if cfg.engine == "quadrature":
        return True
    if cfg.engine == "qmc":
        return m <= 2
    return m <= cfg.quad_max_dim


def cdf_with_error(u, cov, cfg: IntegrationConfig | None = None):
    """``(Phi_m(u; cov), error_estimate)`` for a general covariance."""
    cfg = cfg or DEFAULT_CONFIG
    z, R = _prepare(u, cov)
    if z is None:
        return 0.0, 0.0
    m = len(z)
    if m == 0:
        return 1.0, 0.0
    if _use_quadrature(m, cfg):
        p = float(_quad_cdf(z[None, :], R[None])[0])
        # error proxy: change against a rule with half the path nodes
        err = 1e-14 if m <= 2 else abs(p - float(_quad_cdf(z[None, :], R[None], _PATH_NODES // 2)[0]))
        return min(max(p, 0.0), 1.0), err
    return _qmc_cdf(z, R, cfg)


def cdf(u, cov, cfg: IntegrationConfig | None = None) -> float:
    return cdf_with_error(u, cov, cfg)[0]


def cdf_batch(U, cov, cfg: IntegrationConfig | None = None):
    """``Phi_m`` at every row of ``U`` sharing one covariance."""
    cfg = cfg or DEFAULT_CONFIG
    U = np.atleast_2d(np.asarray(U, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    m = cov.shape[0]
    if U.shape[1] != m:
        raise DimensionMismatch("batch width does not match covariance")
    if m == 0:
        return np.ones(U.shape[0])
    R, s = as_correlation(cov)
    Z = U / s
    if _use_quadrature(m, cfg) and np.all(np.isfinite(Z)):
        return np.clip(_quad_cdf(Z, np.broadcast_to(R, (len(Z), m, m))), 0.0, 1.0)
    return np.array([cdf(row, cov, cfg) for row in U])


def mvn_cdf(u, spec: GaussianSpec, cfg: IntegrationConfig | None = None):
    """P(X <= u) for X ~ N(0, spec.covariance); returns ``(probability, error_estimate)``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if len(u) != spec.dim:
        raise DimensionMismatch(f"u has length {len(u)}, expected {spec.dim}")
    if spec.dim > 16:
        raise DimensionMismatch("mvn_cdf supports dimension <= 16")
    return cdf_with_error(u, spec.covariance, cfg)


# ---------------------------------------------------------------------------
# derivatives of Phi_m


def cdf_grad_cov(u, cov, cfg: IntegrationConfig | None = None):
    """Gradient of ``u -> Phi_m(u; cov)`` for a general covariance."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    m = len(u)
    g = np.empty(m)
    for j in range(m):
        sj = np.sqrt(cov[j, j])
        rest, mean, ccov = conditional_gaussian(cov, [j], [u[j]])
        g[j] = norm_pdf(u[j] / sj) / sj * (cdf(u[rest] - mean, ccov, cfg) if rest else 1.0)
    return g


def cdf_hess_cov(u, cov, cfg: IntegrationConfig | None = None):
    """Hessian of ``u -> Phi_m(u; cov)`` for a general covariance.

    Off-diagonal entries are the pairwise density times ``Phi_{m-2}`` of the
    conditional law; diagonal entries follow from differentiating
    ``phi(u_j) Phi_{m-1}(u_-j - c u_j; .)`` by the chain rule.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    m = len(u)
    H = np.zeros((m, m))
    for j, k in combinations(range(m), 2):
        pair = [j, k]
        S2 = cov[np.ix_(pair, pair)]
        dens = np.exp(-0.5 * u[pair] @ np.linalg.solve(S2, u[pair])) / (2 * np.pi * np.sqrt(np.linalg.det(S2)))
        if m > 2:
            rest, mean, ccov = conditional_gaussian(cov, pair, u[pair])
            dens *= cdf(u[rest] - mean, ccov, cfg)
        H[j, k] = H[k, j] = dens
    for j in range(m):
        sj2 = cov[j, j]
        others = [k for k in range(m) if k != j]
        dj = norm_pdf(u[j] / np.sqrt(sj2)) / np.sqrt(sj2)
        if others:
            rest, mean, ccov = conditional_gaussian(cov, [j], [u[j]])
            base = cdf(u[rest] - mean, ccov, cfg)
        else:
            base = 1.0
        # d/du_j of the conditional Phi_{m-1} factor: -sum_k c_k d_k Phi_{m-1}
        c = cov[others, j] / sj2
        chain = -np.sum(c * H[j, others]) if others else 0.0
        H[j, j] = -u[j] / sj2 * dj * base + chain
    return H


def mvn_cdf_grad(tau, Gamma, cfg: IntegrationConfig | None = None):
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    G = check_correlation(Gamma)
    if G.shape[0] != len(tau):
        raise DimensionMismatch("tau and Gamma disagree in size")
    return cdf_grad_cov(tau, G, cfg)


def mvn_cdf_hess(tau, Gamma, cfg: IntegrationConfig | None = None):
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    G = check_correlation(Gamma)
    if G.shape[0] != len(tau):
        raise DimensionMismatch("tau and Gamma disagree in size")
    return cdf_hess_cov(tau, G, cfg)


def log_cdf_hess(tau, Gamma, cfg: IntegrationConfig | None = None):
    """Hessian of ``log Phi_m`` at ``tau``."""
    P = cdf(tau, Gamma, cfg)
    g = cdf_grad_cov(tau, Gamma, cfg)
    return cdf_hess_cov(tau, Gamma, cfg) / P - np.outer(g, g) / P**2
