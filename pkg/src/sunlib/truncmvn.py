"""Hidden truncation: U = (W | W + tau > 0) with W ~ N_m(0, Gamma).

The deterministic engine computes the unnormalised moments
``F_k = E[W^k 1{W > a}]`` (``a = -tau``) with the Gaussian integration by
parts recurrence

    F_{k+e_i} = mu_i F_k + sum_j C_ij [k_j F_{k-e_j} + a_j^{k_j} f_j(a_j) F^{(j)}_{k without j}]

where ``f_j`` is the marginal density of coordinate ``j`` and ``F^{(j)}``
refers to the law of the remaining coordinates given ``W_j = a_j``.  Every
leaf is an orthant probability of a lower-dimensional conditional normal.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.optimize import minimize

from . import kronalg as ka
from .errors import AcceptanceTooLow, ShapeMismatch, ToleranceNotReached
from .momentset import MomentAccumulator, MomentSet, from_product_moments
from .mvn import DEFAULT_CONFIG, IntegrationConfig, cdf, check_correlation, conditional_gaussian, norm_pdf

MIN_ACCEPTANCE = 1e-6
REJECTION_FLOOR = 1e-3
# Phi_m is accurate to ~1e-17 absolute, so moment errors grow like 1e-17 / pi
DETERMINISTIC_FLOOR = 1e-8


@dataclass(frozen=True)
class TruncSpec:
    Gamma: np.ndarray
    tau: np.ndarray
    cfg: IntegrationConfig = field(default=DEFAULT_CONFIG, compare=False)

    def __post_init__(self):
        G = check_correlation(self.Gamma)
        tau = np.atleast_1d(np.asarray(self.tau, dtype=float))
        if G.shape[0] != tau.shape[0]:
            raise ShapeMismatch(f"Gamma is {G.shape} but tau has length {tau.shape[0]}")
        object.__setattr__(self, "Gamma", G)
        object.__setattr__(self, "tau", tau)

    @property
    def m(self) -> int:
        return self.tau.shape[0]

    @cached_property
    def prob(self) -> float:
        """Acceptance probability Phi_m(tau; Gamma)."""
        return cdf(self.tau, self.Gamma, self.cfg)


@dataclass(frozen=True)
class TruncMoments(MomentSet):
    engine: str = "deterministic"
    std_errors: MomentSet | None = None


def inside(W, tau):
    """Row mask of ``W + tau > 0``; column loop is much faster than a
    reduction over a short trailing axis."""
    ok = W[:, 0] > -tau[0]
    for j in range(1, W.shape[1]):
        ok &= W[:, j] > -tau[j]
    return ok


def sample_truncated(spec: TruncSpec, n: int, seed=None, rng=None):
    """Exact draws of U; rows satisfy ``u + tau > 0``.

    Rejection from the shifted proposal N(Gamma c, Gamma) with c >= 0: on the
    region w >= -tau the density ratio is bounded by exp(c'tau + c'Gamma c / 2),
    so a proposal inside the region is kept with probability
    exp(-c'(w + tau)) <= 1.  With c = 0 this is plain rejection.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if spec.prob < MIN_ACCEPTANCE:
        raise AcceptanceTooLow(f"acceptance probability {spec.prob:.3g} below {MIN_ACCEPTANCE:g}")
    rng = np.random.default_rng(seed) if rng is None else rng
    G = spec.Gamma
    L = np.linalg.cholesky(G)
    c = np.zeros(spec.m) if np.all(spec.tau > 0) else np.maximum(np.linalg.solve(G, _tilt_point(spec)), 0.0)
    shift = G @ c
    # acceptance rate of the whole scheme
    rate = spec.prob * np.exp(min(-0.5 * c @ shift - c @ spec.tau, 700.0))
    out = np.empty((n, spec.m))
    filled = 0
    while filled < n:
        need = n - filled
        batch = int(min(max(1.2 * need / rate + 64, 1024), 2**22))
        W = shift + rng.standard_normal((batch, spec.m)) @ L.T
        E = rng.standard_exponential(batch)
        ok = W[inside(W, spec.tau) & (E > (W + spec.tau) @ c)]
        take = min(len(ok), need)
        out[filled : filled + take] = ok[:take]
        filled += take
    return out


def _tilt_point(spec: TruncSpec):
    """Most likely point of N(0, Gamma) inside {w > -tau}."""
    a = -spec.tau
    P = np.linalg.inv(spec.Gamma)
    res = minimize(
        lambda w: 0.5 * w @ P @ w,
        np.maximum(a, 0.0) + 1e-3,
        jac=lambda w: P @ w,
        bounds=[(ai, None) for ai in a],
        method="L-BFGS-B",
    )
    return res.x


def tilted_samples(spec: TruncSpec, n: int, rng):
    """Draws of W from N(shift, Gamma) with importance weights for U."""
    shift = _tilt_point(spec)
    L = np.linalg.cholesky(spec.Gamma)
    P = np.linalg.inv(spec.Gamma)
    W = shift + rng.standard_normal((n, spec.m)) @ L.T
    logw = -(W @ P @ shift) + 0.5 * shift @ P @ shift
    wts = np.where(inside(W, spec.tau), np.exp(logw), 0.0)
    return W, wts


# ---------------------------------------------------------------------------
# deterministic engine


def _product_moment_function(spec: TruncSpec, order: int):
    m = spec.m
    a = -spec.tau
    G = spec.Gamma
    cfg = spec.cfg

    @lru_cache(maxsize=None)
    def law(S):
        if S:
            rest, mean, ccov = conditional_gaussian(G, list(S), a[list(S)])
        else:
            rest, mean, ccov = list(range(m)), np.zeros(m), G
        pos = {r: i for i, r in enumerate(rest)}
        prob = cdf(mean - a[rest], ccov, cfg) if rest else 1.0
        return pos, mean, ccov, prob

    @lru_cache(maxsize=None)
    def F(S, k):
        pos, mean, C, prob = law(S)
        if sum(k) == 0:
            return prob
        i = next(idx for idx, e in enumerate(k) if e > 0)
        kp = list(k)
        kp[i] -= 1
        kp = tuple(kp)
        pi = pos[i]
        val = mean[pi] * F(S, kp)
        for j, pj in pos.items():
            c = C[pi, pj]
            if c == 0.0:
                continue
            term = 0.0
            if kp[j] > 0:
                km = list(kp)
                km[j] -= 1
                term += kp[j] * F(S, tuple(km))
            sd = np.sqrt(C[pj, pj])
            dens = norm_pdf((a[j] - mean[pj]) / sd) / sd
            kz = list(kp)
            kz[j] = 0
            term += a[j] ** kp[j] * dens * F(tuple(sorted(S + (j,))), tuple(kz))
            val += c * term
        return val

    root = F((), (0,) * m)

    def moment(idx):
        k = [0] * m
        for i in idx:
            k[i] += 1
        return F((), tuple(k)) / root

    return moment


def _deterministic_moments(spec: TruncSpec):
    if spec.prob < DETERMINISTIC_FLOOR:
        warnings.warn(
            ToleranceNotReached(
                f"truncation probability {spec.prob:.3g} is below {DETERMINISTIC_FLOOR:g}; "
                "deterministic moments lose relative accuracy here, use engine='montecarlo'"
            ),
            stacklevel=3,
        )
    moment = _product_moment_function(spec, 4)
    return TruncMoments(*from_product_moments(spec.m, moment), kind="raw", engine="deterministic")


def _montecarlo_moments(spec: TruncSpec, n: int, seed, chunk=2**16):
    rng = np.random.default_rng(seed)
    acc = MomentAccumulator(spec.m)
    done = 0
    while done < n:
        size = min(chunk, n - done)
        if spec.prob >= REJECTION_FLOOR:
            acc.add(sample_truncated(spec, size, rng=rng))
        else:
            acc.add(*tilted_samples(spec, size, rng))
        done += size
    est, se = acc.result()
    return TruncMoments(est.m1, est.m2, est.m3, est.m4, kind="raw", engine="montecarlo", std_errors=se)


def trunc_moments(spec: TruncSpec, cfg: IntegrationConfig | None = None, engine="deterministic", n=10**6, seed=0):
    """Raw moments mu_1..mu_4 of U."""
    if cfg is not None and cfg is not spec.cfg:
        spec = TruncSpec(spec.Gamma, spec.tau, cfg)
    if engine == "deterministic":
        if spec.m > 6:
            raise ShapeMismatch("deterministic truncated moments support m <= 6")
        return _deterministic_moments(spec)
    if engine == "montecarlo":
        return _montecarlo_moments(spec, n, seed)
    raise ValueError(f"unknown engine {engine!r}")


def central_moments(raw: MomentSet) -> MomentSet:
    """Moments of U - E[U] from raw moments of U."""
    if raw.kind != "raw":
        raise ValueError("central_moments expects raw moments")
    q = raw.dim
    m = raw.m1[:, None]
    mu2, mu3, mu4 = raw.m2, raw.m3, raw.m4
    IK = np.eye(q * q) + ka.commutation_matrix(q)
    Iq = np.eye(q)
    mm = m @ m.T
    v2 = ka.vec(mu2)[:, None]
    mkm = np.kron(m, m)
    c3 = IK @ (np.kron(m, mm) - np.kron(m, mu2)) - v2 @ m.T + mu3
    c4 = (
        -3.0 * np.kron(mm, mm)
        + IK @ (np.kron(mm, mu2) + np.kron(mu2, mm) - np.kron(m, Iq) @ mu3.T)
        # the commutation factor sits on the right of this term (transpose of the one above)
        - mu3 @ np.kron(m.T, Iq) @ IK
        + v2 @ mkm.T
        + mkm @ v2.T
        + mu4
    )
    c2 = mu2 - mm
    out = MomentSet(np.zeros(q), 0.5 * (c2 + c2.T), c3, 0.5 * (c4 + c4.T), kind="central")
    if isinstance(raw, TruncMoments):
        return TruncMoments(out.m1, out.m2, out.m3, out.m4, kind="central", engine=raw.engine, std_errors=None)
    return out
