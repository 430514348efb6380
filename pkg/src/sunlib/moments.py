"""Moments up to order four, variance routes and Mardia measures of SUN variables,
plus the moment algebra for sums of independent vectors and shifts."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kronalg as ka
from .core import SunParams, affine, mean_offset
from .errors import ShapeMismatch
from .momentset import MomentSet
from .mvn import IntegrationConfig, log_cdf_hess
from .truncmvn import central_moments, trunc_moments


def _IK(p):
    return np.eye(p * p) + ka.commutation_matrix(p)


def _col(v):
    return np.asarray(v, dtype=float).reshape(-1, 1)


def normal_moments(r: int) -> MomentSet:
    """Raw moments of N_r(0, I_r)."""
    if r < 1:
        raise ValueError("r must be >= 1")
    vI = ka.vec(np.eye(r))[:, None]
    m4 = np.eye(r * r) + ka.commutation_matrix(r) + vI @ vI.T
    return MomentSet(np.zeros(r), np.eye(r), np.zeros((r * r, r)), m4)


def constant_moments(c) -> MomentSet:
    """Moments of a degenerate vector equal to ``c``."""
    c = _col(c)
    cc = np.kron(c, c)
    return MomentSet(c[:, 0], c @ c.T, cc @ c.T, cc @ cc.T)


def sum_moments(A, momU: MomentSet, B, momV: MomentSet, fast: bool | None = None) -> MomentSet:
    """Raw moments of X = A U + B V for independent U, V.

    With ``fast`` (default: whenever mu_1(V) and mu_3(V) vanish exactly) the
    reduced expansion for a symmetric V is used.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    p = A.shape[0]
    if B.shape[0] != p or A.shape[1] != momU.dim or B.shape[1] != momV.dim:
        raise ShapeMismatch(f"cannot combine A{A.shape}, U({momU.dim}), B{B.shape}, V({momV.dim})")
    if fast is None:
        fast = not np.any(momV.m1) and not np.any(momV.m3)
    u1, u2, u3, u4 = _col(momU.m1), momU.m2, momU.m3, momU.m4
    v1, v2, v3, v4 = _col(momV.m1), momV.m2, momV.m3, momV.m4
    IK = _IK(p)
    AA, BB, AB = np.kron(A, A), np.kron(B, B), np.kron(A, B)
    vu2, vv2 = ka.vec(u2)[:, None], ka.vec(v2)[:, None]
    q, r = momU.dim, momV.dim

    if fast:
        m1 = A @ u1
        m2 = A @ u2 @ A.T + B @ v2 @ B.T
        m3 = AA @ u3 @ A.T + IK @ AB @ np.kron(u1, v2) @ B.T + BB @ vv2 @ u1.T @ A.T
        BA = np.kron(B, A)
        m4 = (
            AA @ u4 @ AA.T
            + IK @ (AB @ np.kron(u2, v2) @ AB.T + BA @ np.kron(v2, u2) @ BA.T)
            + AA @ vu2 @ vv2.T @ BB.T
            + BB @ vv2 @ vu2.T @ AA.T
            + BB @ v4 @ BB.T
        )
    else:
        m1 = A @ u1 + B @ v1
        m2 = A @ u2 @ A.T + A @ u1 @ v1.T @ B.T + B @ v1 @ u1.T @ A.T + B @ v2 @ B.T
        m3 = (
            AA @ u3 @ A.T
            + AA @ vu2 @ v1.T @ B.T
            + IK @ AB @ (np.kron(u2, v1) @ A.T + np.kron(u1, v2) @ B.T)
            + BB @ vv2 @ u1.T @ A.T
            + BB @ v3 @ B.T
        )
        # x (x) x = AA(U(x)U) + (I+K) AB(U(x)V) + BB(V(x)V); expand the outer product
        Iq, Ir = np.eye(q), np.eye(r)
        c_a2 = AB @ np.kron(Iq, v1) @ u3.T @ AA.T
        c_b2 = AB @ np.kron(u1, Ir) @ v3.T @ BB.T
        c_c = AB @ np.kron(u2, v2) @ AB.T
        a2_b2 = AA @ vu2 @ vv2.T @ BB.T
        m4 = (
            AA @ u4 @ AA.T
            + IK @ c_a2 + c_a2.T @ IK
            + a2_b2 + a2_b2.T
            + IK @ c_c @ IK
            + IK @ c_b2 + c_b2.T @ IK
            + BB @ v4 @ BB.T
        )
    return MomentSet(m1[:, 0], ka.sym_part(m2), m3, ka.sym_part(m4))


def shift_moments(xi, mom: MomentSet) -> MomentSet:
    """Raw moments of xi + X from raw moments of X."""
    if mom.kind != "raw":
        raise ValueError("shift_moments expects raw moments")
    x = _col(xi)
    p = mom.dim
    if x.shape[0] != p:
        raise ShapeMismatch(f"xi has length {x.shape[0]}, expected {p}")
    m1, m2, m3, m4 = _col(mom.m1), mom.m2, mom.m3, mom.m4
    IK = _IK(p)
    s = np.kron(x, x)
    g = np.kron(x, m1)                       # E[xi (x) X]
    vm2 = ka.vec(m2)[:, None]
    xI = np.kron(x, np.eye(p))
    y1 = x + m1
    y2 = x @ x.T + x @ m1.T + m1 @ x.T + m2
    y3 = s @ x.T + s @ m1.T + IK @ (g @ x.T + xI @ m2) + vm2 @ x.T + m3
    gx2 = xI @ m3.T                           # E[(xi (x) X)(X (x) X)']
    y4 = (
        s @ s.T
        + s @ g.T @ IK + IK @ g @ s.T
        + s @ vm2.T + vm2 @ s.T
        + IK @ np.kron(x @ x.T, m2) @ IK
        + IK @ gx2 + gx2.T @ IK
        + m4
    )
    return MomentSet(y1[:, 0], ka.sym_part(y2), y3, ka.sym_part(y4))


# ---------------------------------------------------------------------------
# SUN moments


def _trunc(p: SunParams, cfg, engine, n=10**6, seed=0):
    return trunc_moments(p.trunc, cfg or p.cfg, engine=engine, n=n, seed=seed)


def zero_location_moments(Lam, Psi, mU: MomentSet) -> MomentSet:
    """Raw moments of Lambda U + Psi^{1/2} V, V standard normal."""
    d = Lam.shape[0]
    IK = _IK(d)
    u1 = _col(mU.m1)
    Lu1 = Lam @ u1
    M = Lam @ mU.m2 @ Lam.T
    LL = np.kron(Lam, Lam)
    vP, vM = ka.vec(Psi)[:, None], ka.vec(M)[:, None]
    m1 = Lu1[:, 0]
    m2 = M + Psi
    m3 = LL @ mU.m3 @ Lam.T + IK @ np.kron(Lu1, Psi) + vP @ Lu1.T
    m4 = (
        LL @ mU.m4 @ LL.T
        + vP @ vP.T
        + IK @ (np.kron(M, Psi) + np.kron(Psi, M) + np.kron(Psi, Psi))
        + vM @ vP.T
        + vP @ vM.T
    )
    return MomentSet(m1, ka.sym_part(m2), m3, ka.sym_part(m4))


def sun_moments(p: SunParams, cfg: IntegrationConfig | None = None, engine="deterministic", **kw) -> MomentSet:
    """Raw moments mu_1..mu_4 of Y."""
    mU = _trunc(p, cfg, engine, **kw)
    return shift_moments(p.xi, zero_location_moments(p.conv.Lambda, p.conv.Psi, mU))


def sun_mean(p: SunParams, cfg: IntegrationConfig | None = None):
    """E[Y] from the gradient of the orthant probability."""
    return p.xi + mean_offset(p, cfg)


def log_phi_hessian(p: SunParams, cfg: IntegrationConfig | None = None):
    """Hessian of u -> log Phi_m(u; Gamma) at u = tau."""
    return log_cdf_hess(p.tau, p.Gamma, cfg or p.cfg)


def sun_var(p: SunParams, cfg: IntegrationConfig | None = None, route="hessian"):
    cfg = cfg or p.cfg
    if route == "hessian":
        wD = p.omega[:, None] * p.Delta
        S = p.Omega + wD @ log_phi_hessian(p, cfg) @ wD.T
    elif route == "additive":
        mU = _trunc(p, cfg, "deterministic")
        SU = mU.variance
        Lam = p.conv.Lambda
        S = p.Omega - Lam @ (p.Gamma - SU) @ Lam.T
    else:
        raise ValueError(f"unknown route {route!r}")
    return ka.sym_part(S)


# ---------------------------------------------------------------------------
# standardisation and Mardia measures


@dataclass(frozen=True)
class StandardizedForm:
    mu0: np.ndarray
    mu: np.ndarray
    Sigma: np.ndarray
    C: np.ndarray
    Lambda_tilde: np.ndarray
    Psi_tilde: np.ndarray


@dataclass(frozen=True)
class MardiaWork:
    M00: np.ndarray
    M01: np.ndarray
    M11: np.ndarray


def standardized_form(p: SunParams, cfg: IntegrationConfig | None = None, trunc=None) -> StandardizedForm:
    mU = trunc if trunc is not None else _trunc(p, cfg, "deterministic")
    Lam, Psi = p.conv.Lambda, p.conv.Psi
    mu0 = Lam @ mU.m1
    Sigma = ka.sym_part(p.Omega - Lam @ (p.Gamma - mU.variance) @ Lam.T)
    C = ka.sym_sqrt(Sigma)
    Ci = np.linalg.inv(C)
    return StandardizedForm(mu0, p.xi + mu0, Sigma, C, Ci @ Lam, ka.sym_part(Ci @ Psi @ Ci.T))


def standardized_params(p: SunParams, cfg: IntegrationConfig | None = None) -> SunParams:
    """Parameters of C^{-1}(Y - mu)."""
    sf = standardized_form(p, cfg)
    Ci = np.linalg.inv(sf.C)
    return affine(p, -Ci @ sf.mu, Ci.T)


def mardia_work(p: SunParams, Sigma) -> MardiaWork:
    Lam, Ph = p.conv.Lambda, p.conv.Psi_half
    Si = np.linalg.inv(Sigma)
    return MardiaWork(ka.sym_part(Lam.T @ Si @ Lam), Lam.T @ Si @ Ph, ka.sym_part(Ph @ Si @ Ph))


@dataclass(frozen=True)
class MardiaResult:
    beta1: float
    beta2: float
    beta1_vec: float
    beta1_ks: float
    beta2_ks: float


def mardia_details(p: SunParams, cfg: IntegrationConfig | None = None) -> MardiaResult:
    """Both skewness forms plus the values read off the standardized moments."""
    mU = _trunc(p, cfg, "deterministic")
    c = central_moments(mU)
    sf = standardized_form(p, cfg, trunc=mU)
    w = mardia_work(p, sf.Sigma)
    M = w.M00
    SU, c3, c4 = c.m2, c.m3, c.m4
    b1 = float(np.trace(np.kron(M, M) @ c3 @ M @ c3.T))
    v3 = ka.vec(c3)
    b1_vec = float(v3 @ np.kron(M, np.kron(M, M)) @ v3)
    Si = np.linalg.inv(sf.Sigma)
    Psi, Lam = p.conv.Psi, p.conv.Lambda
    PS = Psi @ Si
    b2 = float(
        np.trace(np.kron(M, M) @ c4)
        + 2 * np.trace(SU @ M) * np.trace(PS)
        + np.trace(PS) ** 2
        + 4 * np.trace(SU @ Lam.T @ Si @ Psi @ Si @ Lam)
        + 2 * np.trace(PS @ PS)
    )
    # standardized third and fourth moments
    Lt, Pt = sf.Lambda_tilde, sf.Psi_tilde
    d = p.d
    IK = _IK(d)
    LL = np.kron(Lt, Lt)
    mz3 = LL @ c3 @ Lt.T
    LSL = Lt @ SU @ Lt.T
    vL, vP = ka.vec(LSL)[:, None], ka.vec(Pt)[:, None]
    mz4 = (
        LL @ c4 @ LL.T
        + IK @ (np.kron(LSL, Pt) + np.kron(Pt, LSL) + np.kron(Pt, Pt))
        + vL @ vP.T + vP @ vL.T + vP @ vP.T
    )
    return MardiaResult(b1, b2, b1_vec, float(np.trace(mz3.T @ mz3)), float(np.trace(mz4)))


def mardia(p: SunParams, cfg: IntegrationConfig | None = None):
    """``(beta1, beta2)`` Mardia skewness and kurtosis."""
    r = mardia_details(p, cfg)
    return max(r.beta1, 0.0), r.beta2

