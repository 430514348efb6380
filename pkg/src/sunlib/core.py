"""The SUN distribution object and its basic operations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr

from . import kronalg as ka
from .errors import MaxIterations, NotPositiveDefinite, RankDeficient, ShapeMismatch
from .mvn import (
    DEFAULT_CONFIG,
    IntegrationConfig,
    cdf as mvn_cdf_value,
    cdf_batch,
    cdf_grad_cov,
    cdf_hess_cov,
    check_correlation,
)
from .truncmvn import TruncSpec, sample_truncated

PD_TOL = 1e-10


@dataclass(frozen=True)
class ConvolutionForm:
    """Y = xi + Lambda U + Psi^{1/2} V with U truncated normal, V standard normal."""

    Lambda: np.ndarray
    Psi: np.ndarray
    Psi_half: np.ndarray


@dataclass(frozen=True)
class SunParams:
    """Validated SUN_{d,m}(xi, Omega, Delta, tau, Gamma) parameter set.

    ``omega`` holds the scale vector diag(Omega)^{1/2}; derived matrices are
    computed once at construction.
    """

    xi: np.ndarray
    Omega: np.ndarray
    Delta: np.ndarray
    tau: np.ndarray
    Gamma: np.ndarray
    cfg: IntegrationConfig = field(default=DEFAULT_CONFIG, compare=False, repr=False)

    omega: np.ndarray = field(init=False, repr=False, compare=False)
    Omega_bar: np.ndarray = field(init=False, repr=False, compare=False)
    Omega_star: np.ndarray = field(init=False, repr=False, compare=False)
    Omega_tilde: np.ndarray = field(init=False, repr=False, compare=False)
    conv: ConvolutionForm = field(init=False, repr=False, compare=False)
    prob: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        d = xi.shape[0]
        Omega = np.atleast_2d(np.asarray(self.Omega, dtype=float))
        tau = np.atleast_1d(np.asarray(self.tau, dtype=float))
        m = tau.shape[0]
        Delta = np.asarray(self.Delta, dtype=float)
        if Delta.ndim < 2:
            Delta = Delta.reshape(d, -1) if Delta.size == d * m else np.atleast_2d(Delta)
        Gamma = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        if d < 1 or m < 1:
            raise ShapeMismatch("need d >= 1 and m >= 1")
        if Omega.shape != (d, d):
            raise ShapeMismatch(f"Omega is {Omega.shape}, expected {(d, d)}")
        if Delta.shape != (d, m):
            raise ShapeMismatch(f"Delta is {Delta.shape}, expected {(d, m)}")
        if Gamma.shape != (m, m):
            raise ShapeMismatch(f"Gamma is {Gamma.shape}, expected {(m, m)}")
        for name, arr in (("xi", xi), ("Omega", Omega), ("Delta", Delta), ("tau", tau), ("Gamma", Gamma)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
        if not ka.is_symmetric(Omega) or not ka.is_positive_definite(Omega):
            raise NotPositiveDefinite("Omega must be symmetric positive definite", which="Omega")
        Gamma = check_correlation(Gamma)
        Omega = ka.sym_part(Omega)

        omega = np.sqrt(np.diag(Omega))
        Omega_bar = Omega / np.outer(omega, omega)
        np.fill_diagonal(Omega_bar, 1.0)
        star = np.block([[Omega_bar, Delta], [Delta.T, Gamma]])
        if np.linalg.eigvalsh(star)[0] <= PD_TOL:
            raise NotPositiveDefinite("Omega_star is not positive definite", which="Omega_star")
        tilde = np.block([[Omega_bar, -Delta], [-Delta.T, Gamma]])

        Gi_Dt = np.linalg.solve(Gamma, Delta.T)
        Lam = omega[:, None] * Gi_Dt.T
        Psi = ka.sym_part(Omega - Lam @ Delta.T * omega[None, :])
        conv = ConvolutionForm(Lam, Psi, ka.sym_sqrt(Psi))

        sets = object.__setattr__
        for name, val in (
            ("xi", xi), ("Omega", Omega), ("Delta", Delta), ("tau", tau), ("Gamma", Gamma),
            ("omega", omega), ("Omega_bar", Omega_bar), ("Omega_star", star),
            ("Omega_tilde", tilde), ("conv", conv),
        ):
            sets(self, name, val)
        sets(self, "prob", mvn_cdf_value(tau, Gamma, self.cfg))

    @property
    def d(self) -> int:
        return self.xi.shape[0]

    @property
    def m(self) -> int:
        return self.tau.shape[0]

    @property
    def trunc(self) -> TruncSpec:
        return TruncSpec(self.Gamma, self.tau, self.cfg)

    def density_terms(self):
        """``(B, Gamma_c)`` with B = Delta' Omega_bar^{-1} omega^{-1} and
        Gamma_c = Gamma - Delta' Omega_bar^{-1} Delta."""
        ObiD = np.linalg.solve(self.Omega_bar, self.Delta)
        B = ObiD.T / self.omega[None, :]
        Gc = ka.sym_part(self.Gamma - self.Delta.T @ ObiD)
        return B, Gc

    def with_cfg(self, cfg: IntegrationConfig) -> "SunParams":
        return SunParams(self.xi, self.Omega, self.Delta, self.tau, self.Gamma, cfg)

    def to_dict(self):
        return {
            "xi": self.xi.tolist(),
            "Omega": self.Omega.tolist(),
            "Delta": self.Delta.tolist(),
            "tau": self.tau.tolist(),
            "Gamma": self.Gamma.tolist(),
        }


def validate(xi, Omega, Delta, tau, Gamma, cfg: IntegrationConfig | None = None) -> SunParams:
    return SunParams(xi, Omega, Delta, tau, Gamma, cfg or DEFAULT_CONFIG)


def from_dict(spec: dict, cfg: IntegrationConfig | None = None) -> SunParams:
    missing = [k for k in ("xi", "Omega", "Delta", "tau", "Gamma") if k not in spec]
    if missing:
        raise ShapeMismatch(f"spec is missing {missing}")
    return validate(spec["xi"], spec["Omega"], spec["Delta"], spec["tau"], spec["Gamma"], cfg)


def _cfg(p: SunParams, cfg):
    return p.cfg if cfg is None else cfg


# ---------------------------------------------------------------------------
# density, distribution function, cgf


def _log_phi_m(U, cov, cfg):
    """log Phi_m at every row of U."""
    if cov.shape[0] == 1:
        return log_ndtr(U[:, 0] / np.sqrt(cov[0, 0]))
    with np.errstate(divide="ignore"):
        return np.log(cdf_batch(U, cov, cfg))


def logpdf(p: SunParams, x, cfg: IntegrationConfig | None = None):
    """Log density at a point (d-vector) or at each row of an (n, d) array."""
    cfg = _cfg(p, cfg)
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != p.d:
        raise ShapeMismatch(f"points have width {X.shape[1]}, expected {p.d}")
    R = X - p.xi
    L = np.linalg.cholesky(p.Omega)
    z = np.linalg.solve(L, R.T)
    log_phi = -0.5 * np.sum(z * z, axis=0) - np.log(np.diag(L)).sum() - 0.5 * p.d * np.log(2 * np.pi)
    B, Gc = p.density_terms()
    out = log_phi + _log_phi_m(p.tau + R @ B.T, Gc, cfg) - np.log(p.prob)
    return float(out[0]) if single else out


def pdf(p: SunParams, x, cfg: IntegrationConfig | None = None):
    return np.exp(logpdf(p, x, cfg))


def cdf(p: SunParams, y, cfg: IntegrationConfig | None = None) -> float:
    """P(Y <= y) as a (d+m)-variate normal probability over Phi_m(tau; Gamma)."""
    cfg = _cfg(p, cfg)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (p.d,):
        raise ShapeMismatch(f"y has shape {y.shape}, expected {(p.d,)}")
    if p.d + p.m > 16:
        raise ShapeMismatch("cdf supports d + m <= 16")
    z = np.concatenate([(y - p.xi) / p.omega, p.tau])
    val = mvn_cdf_value(z, p.Omega_tilde, cfg) / p.prob
    return float(min(max(val, 0.0), 1.0))


def cgf(p: SunParams, t, cfg: IntegrationConfig | None = None) -> float:
    cfg = _cfg(p, cfg)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.shape != (p.d,):
        raise ShapeMismatch(f"t has shape {t.shape}, expected {(p.d,)}")
    u = p.tau + p.Delta.T @ (p.omega * t)
    if p.m == 1:
        log_num = float(log_ndtr(u[0]))
    else:
        log_num = float(np.log(mvn_cdf_value(u, p.Gamma, cfg)))
    return float(p.xi @ t + 0.5 * t @ p.Omega @ t + log_num - np.log(p.prob))


# ---------------------------------------------------------------------------
# transformations


def affine(p: SunParams, a, A) -> SunParams:
    """Law of a + A'Y for a d x k matrix A of full column rank."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != p.d:
        raise ShapeMismatch(f"A has {A.shape[0]} rows, expected {p.d}")
    k = A.shape[1]
    if k > p.d or np.linalg.matrix_rank(A) < k:
        raise RankDeficient("A must have full column rank")
    a = np.zeros(k) if a is None else np.atleast_1d(np.asarray(a, dtype=float))
    if a.shape != (k,):
        raise ShapeMismatch(f"a has shape {a.shape}, expected {(k,)}")
    OmA = ka.sym_part(A.T @ p.Omega @ A)
    DeltaA = (A.T @ (p.omega[:, None] * p.Delta)) / np.sqrt(np.diag(OmA))[:, None]
    return SunParams(a + A.T @ p.xi, OmA, DeltaA, p.tau, p.Gamma, p.cfg)


def marginal(p: SunParams, idx) -> SunParams:
    idx = list(np.atleast_1d(idx).astype(int))
    if len(set(idx)) != len(idx) or min(idx) < 0 or max(idx) >= p.d:
        raise ShapeMismatch(f"bad marginal indices {idx}")
    return affine(p, None, np.eye(p.d)[:, idx])


@dataclass(frozen=True)
class OrthantCondition:
    """Event Y_1 + y1 > 0 (``greater``) or Y_1 + y1 < 0 (``less``) where
    Y_1 collects the coordinates in ``split``."""

    split: tuple
    y1: np.ndarray
    direction: str = "greater"

    def __post_init__(self):
        split = tuple(int(i) for i in np.atleast_1d(self.split))
        y1 = np.atleast_1d(np.asarray(self.y1, dtype=float))
        if len(split) != len(set(split)) or not split:
            raise ShapeMismatch("split indices must be distinct and non-empty")
        if y1.shape != (len(split),):
            raise ShapeMismatch("y1 must have one entry per conditioning index")
        if self.direction not in ("greater", "less"):
            raise ValueError("direction must be 'greater' or 'less'")
        object.__setattr__(self, "split", split)
        object.__setattr__(self, "y1", y1)


def condition_orthant(p: SunParams, c: OrthantCondition) -> SunParams:
    """Law of the remaining coordinates Y_2 given the orthant event on Y_1."""
    i1 = list(c.split)
    if max(i1) >= p.d or min(i1) < 0:
        raise ShapeMismatch("conditioning index out of range")
    i2 = [i for i in range(p.d) if i not in i1]
    if not i2:
        raise ShapeMismatch("at least one coordinate must remain")
    Ob = p.Omega_bar
    O11 = Ob[np.ix_(i1, i1)]
    O21 = Ob[np.ix_(i2, i1)]
    D1, D2 = p.Delta[i1], p.Delta[i2]
    z1 = (p.xi[i1] + c.y1) / p.omega[i1]
    s = 1.0 if c.direction == "greater" else -1.0
    # hidden variables ordered as (Y_1 block, original latent block)
    Delta_new = np.hstack([s * O21, D2])
    tau_new = np.concatenate([s * z1, p.tau])
    Gamma_new = np.block([[O11, s * D1], [s * D1.T, p.Gamma]])
    return SunParams(p.xi[i2], p.Omega[np.ix_(i2, i2)], Delta_new, tau_new, Gamma_new, p.cfg)


# ---------------------------------------------------------------------------
# sampling


def sample(p: SunParams, n: int, seed=None, rng=None):
    """Draws from the additive representation xi + Lambda U + Psi^{1/2} V."""
    rng = np.random.default_rng(seed) if rng is None else rng
    U = sample_truncated(p.trunc, n, rng=rng)
    V = rng.standard_normal((n, p.d))
    return p.xi + U @ p.conv.Lambda.T + V @ p.conv.Psi_half


# ---------------------------------------------------------------------------
# mode


def mean_offset(p: SunParams, cfg: IntegrationConfig | None = None):
    """omega Delta grad Phi_m(tau; Gamma) / Phi_m(tau; Gamma)."""
    g = cdf_grad_cov(p.tau, p.Gamma, _cfg(p, cfg))
    return p.omega * (p.Delta @ g) / p.prob


def logpdf_derivatives(p: SunParams, x, cfg: IntegrationConfig | None = None):
    """``(logpdf, gradient, Hessian)`` at a single point."""
    cfg = _cfg(p, cfg)
    x = np.asarray(x, dtype=float)
    B, Gc = p.density_terms()
    u = p.tau + B @ (x - p.xi)
    Oi = np.linalg.inv(p.Omega)
    P = mvn_cdf_value(u, Gc, cfg)
    g = cdf_grad_cov(u, Gc, cfg)
    H = cdf_hess_cov(u, Gc, cfg)
    grad = -Oi @ (x - p.xi) + B.T @ g / P
    hess = -Oi + B.T @ (H / P - np.outer(g, g) / P**2) @ B
    return logpdf(p, x, cfg), grad, ka.sym_part(hess)


def mode(p: SunParams, cfg: IntegrationConfig | None = None, start=None, max_iter=100):
    """Maximiser of the (log-concave) density by damped Newton steps."""
    cfg = _cfg(p, cfg)
    x = p.xi + mean_offset(p, cfg) if start is None else np.asarray(start, dtype=float).copy()
    f, g, H = logpdf_derivatives(p, x, cfg)
    for _ in range(max_iter):
        if np.linalg.norm(g) <= 1e-8 * (1 + abs(f)):
            return x
        try:
            step = -np.linalg.solve(H, g)
            if step @ g <= 0:
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            step = g / max(1.0, np.linalg.norm(g))
        t = 1.0
        while True:
            xn = x + t * step
            fn = logpdf(p, xn, cfg)
            if fn >= f + 1e-4 * t * (g @ step) or t < 1e-12:
                break
            t *= 0.5
        if t < 1e-12:
            # no ascent possible at working precision; accept if nearly stationary
            if np.linalg.norm(g) <= 1e-6 * (1 + abs(f)):
                return x
            raise MaxIterations("line search failed in mode search")
        x = xn
        f, g, H = logpdf_derivatives(p, x, cfg)
    if np.linalg.norm(g) <= 1e-8 * (1 + abs(f)):
        return x
    raise MaxIterations(f"mode search did not converge in {max_iter} iterations")
