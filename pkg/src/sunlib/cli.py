"""``sun`` command line front end.

Every subcommand except ``sample`` prints a single JSON envelope on stdout.
Exit codes: 0 success, 1 failed ``check`` diagnostics, 2 validation error,
3 tolerance not reached, 64 usage error.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import sys
import warnings

import numpy as np

from . import core, moments, oracle
from . import kronalg as ka
from .errors import SunError, ToleranceNotReached
from .mvn import IntegrationConfig

log = logging.getLogger("sunlib")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_TOLERANCE, EXIT_USAGE = 0, 1, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=True)


# ---------------------------------------------------------------------------
# spec files


def read_spec(path):
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise SunError("spec file must hold a JSON object")
    return raw


def config_from(raw: dict, args) -> IntegrationConfig:
    kw = {}
    if "seed" in raw:
        kw["seed"] = int(raw["seed"])
    if "abs_tol" in raw:
        kw["abs_tol"] = float(raw["abs_tol"])
    if "max_points" in raw:
        kw["max_points"] = int(raw["max_points"])
    kw["threads"] = args.threads
    return IntegrationConfig(**kw)


def serialize_spec(p: core.SunParams, cfg: IntegrationConfig | None = None) -> dict:
    out = p.to_dict()
    if cfg is not None:
        out.update(seed=cfg.seed, abs_tol=cfg.abs_tol, max_points=cfg.max_points)
    return out


def _matrix_file(path):
    with open(path) as fh:
        return np.asarray(json.load(fh), dtype=float)


def _need_seed(args):
    if args.seed is None:
        raise UsageError(f"'{args.command}' requires an explicit --seed")
    return args.seed


# ---------------------------------------------------------------------------
# subcommands


def cmd_pdf(p, args, cfg):
    x = np.asarray(args.at, dtype=float)
    lp = core.logpdf(p, x, cfg)
    return {"x": x, "logpdf": lp, "pdf": float(np.exp(lp))}


def cmd_cdf(p, args, cfg):
    y = np.asarray(args.at, dtype=float)
    return {"y": y, "cdf": core.cdf(p, y, cfg)}


def cmd_cgf(p, args, cfg):
    t = np.asarray(args.at, dtype=float)
    return {"t": t, "cgf": core.cgf(p, t, cfg)}


def cmd_moments(p, args, cfg):
    mom = moments.sun_moments(p, cfg)
    out = {f"mu{k}": getattr(mom, f"m{k}") for k in range(1, args.order + 1)}
    out["mean_gradient_route"] = moments.sun_mean(p, cfg)
    out["variance"] = {
        "hessian": moments.sun_var(p, cfg, "hessian"),
        "additive": moments.sun_var(p, cfg, "additive"),
    }
    return out


def cmd_mardia(p, args, cfg):
    r = moments.mardia_details(p, cfg)
    return {"beta1": max(r.beta1, 0.0), "beta2": r.beta2, "beta1_vec_form": r.beta1_vec}


def cmd_affine(p, args, cfg):
    A = _matrix_file(args.A)
    a = _matrix_file(args.a) if args.a else None
    return {"spec": serialize_spec(core.affine(p, a, A))}


def cmd_condition(p, args, cfg):
    keep = [i - 1 for i in args.keep]
    if any(i < 0 or i >= p.d for i in keep) or len(set(keep)) != len(keep):
        raise SunError("--keep indices must be distinct and within 1..d")
    split = [i for i in range(p.d) if i not in keep]
    if not split or not keep:
        raise SunError("need at least one kept and one conditioning coordinate")
    c = core.OrthantCondition(split, args.y1, "greater" if args.dir == "gt" else "less")
    q = core.condition_orthant(p, c)
    return {"conditioning_indices": [i + 1 for i in split], "spec": serialize_spec(q)}


def cmd_mode(p, args, cfg):
    x = core.mode(p, cfg)
    return {"mode": x, "logpdf": core.logpdf(p, x, cfg)}


def fd_hessian(f, x, h=1e-3):
    """Central second differences of a scalar function."""
    d = len(x)
    H = np.empty((d, d))
    E = np.eye(d) * h
    for i in range(d):
        for j in range(i, d):
            H[i, j] = H[j, i] = (
                f(x + E[i] + E[j]) - f(x + E[i] - E[j]) - f(x - E[i] + E[j]) + f(x - E[i] - E[j])
            ) / (4 * h * h)
    return H


def diagnostics(p, cfg, seed, n_probes=10):
    """List of ``(name, value, tolerance, passed)`` invariant checks."""
    out = []

    def add(name, value, tol, passed):
        out.append({"name": name, "value": float(value), "tolerance": tol, "passed": bool(passed)})

    Sh = moments.sun_var(p, cfg, "hessian")
    Sa = moments.sun_var(p, cfg, "additive")
    add("variance_routes", np.abs(Sh - Sa).max(), 1e-7, np.abs(Sh - Sa).max() <= 1e-7)
    mom = moments.sun_moments(p, cfg)
    dm = np.abs(mom.m1 - moments.sun_mean(p, cfg)).max()
    add("mean_routes", dm, 1e-8, dm <= 1e-8)
    ev = np.linalg.eigvalsh(p.Omega - Sa)
    gap = ev[0]
    # rank of Omega - Sigma is min(d, m): strictly positive only when m >= d
    floor = 0.0 if p.m >= p.d else -1e-12 * np.abs(ev).max()
    add("omega_minus_sigma_min_eig", gap, floor, gap > floor if p.m >= p.d else gap >= floor)
    r = moments.mardia_details(p, cfg)
    add("beta1_forms", abs(r.beta1 - r.beta1_vec), 1e-8, abs(r.beta1 - r.beta1_vec) <= 1e-8)
    sf = moments.standardized_form(p, cfg)
    SU = moments.trunc_moments(p.trunc, cfg).variance
    ident = np.abs(sf.Lambda_tilde @ SU @ sf.Lambda_tilde.T + sf.Psi_tilde - np.eye(p.d)).max()
    add("standardization_identity", ident, 1e-10, ident <= 1e-10)
    rng = np.random.default_rng(seed)
    C = ka.sym_sqrt(Sa)
    worst = -np.inf
    for _ in range(n_probes):
        x = mom.m1 + C @ rng.standard_normal(p.d)
        H = fd_hessian(lambda z: core.logpdf(p, z, cfg), x)
        worst = max(worst, np.linalg.eigvalsh(H)[-1])
    add("log_concavity_max_eig", worst, 1e-8, worst <= 1e-8)
    return out


def cmd_check(p, args, cfg):
    seed = _need_seed(args)
    diags = diagnostics(p, cfg, seed)
    return {"diagnostics": diags, "all_passed": all(d["passed"] for d in diags)}


def cmd_oracle(p, args, cfg):
    seed = _need_seed(args)
    X = oracle.draw(p, args.n, seed, args.method, threads=args.threads)
    est, se = oracle.mc_moments(X)
    b1, b2 = oracle.mc_mardia(X, seed)
    det = moments.sun_moments(p, cfg)
    db1, db2 = moments.mardia(p, cfg)
    z = max(float(np.max(np.abs(getattr(est, k) - getattr(det, k)) / np.maximum(getattr(se, k), 1e-300)))
            for k in ("m1", "m2", "m3", "m4"))
    return {
        "method": args.method,
        "n": args.n,
        "mc": {"mu1": est.m1, "mu2": est.m2, "mu3": est.m3, "mu4": est.m4},
        "std_errors": {"mu1": se.m1, "mu2": se.m2, "mu3": se.m3, "mu4": se.m4},
        "mardia": {"beta1": b1.value, "beta1_se": b1.std_error, "beta2": b2.value, "beta2_se": b2.std_error},
        "deterministic": {"mu1": det.m1, "beta1": db1, "beta2": db2},
        "max_moment_z_score": z,
        "mardia_z_scores": [float(b1.z_score(db1)), float(b2.z_score(db2))],
    }


def run_sample(p, args, cfg, stdout):
    seed = _need_seed(args)
    X = oracle.draw(p, args.n, seed, args.method, threads=args.threads)
    buf = io.StringIO()
    buf.write(",".join(f"y{i + 1}" for i in range(p.d)) + "\n")
    for row in X:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    stdout.write(buf.getvalue())


COMMANDS = {
    "pdf": cmd_pdf, "cdf": cmd_cdf, "cgf": cmd_cgf, "moments": cmd_moments,
    "mardia": cmd_mardia, "affine": cmd_affine, "condition": cmd_condition,
    "mode": cmd_mode, "check": cmd_check, "oracle": cmd_oracle,
}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--spec", required=True, help="JSON parameter file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=1)

    parser = _Parser(prog="sun", description="Unified skew-normal distribution toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("pdf", "cdf", "cgf"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--at", type=float, nargs="+", required=True)
    sp = sub.add_parser("sample", parents=[common])
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--method", choices=["additive", "conditioning"], default="additive")
    sp = sub.add_parser("moments", parents=[common])
    sp.add_argument("--order", type=int, choices=[1, 2, 3, 4], default=4)
    sub.add_parser("mardia", parents=[common])
    sp = sub.add_parser("affine", parents=[common])
    sp.add_argument("--A", required=True, help="JSON d x k matrix")
    sp.add_argument("--a", default=None, help="JSON k-vector")
    sp = sub.add_parser("condition", parents=[common])
    sp.add_argument("--keep", type=int, nargs="+", required=True, help="1-based indices of Y_2")
    sp.add_argument("--y1", type=float, nargs="+", required=True)
    sp.add_argument("--dir", choices=["gt", "lt"], default="gt")
    sub.add_parser("mode", parents=[common])
    sub.add_parser("check", parents=[common])
    sp = sub.add_parser("oracle", parents=[common])
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--method", choices=["additive", "conditioning"], default="additive")
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        if getattr(args, "n", 1) < 1:
            raise UsageError("--n must be >= 1")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ToleranceNotReached)
        try:
            raw = read_spec(args.spec)
            cfg = config_from(raw, args)
            p = core.from_dict(raw, cfg)
            if args.command == "sample":
                run_sample(p, args, cfg, stdout)
                outputs = None
            else:
                outputs = COMMANDS[args.command](p, args, cfg)
        except UsageError as exc:
            print(f"usage error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except (SunError, ValueError, OSError, json.JSONDecodeError) as exc:
            log.error("%s: %s", type(exc).__name__, exc)
            print(dumps({"command": args.command, "error": {"type": type(exc).__name__, "message": str(exc)}}),
                  file=stdout)
            return EXIT_INVALID
    tol_warnings = [str(w.message) for w in caught if issubclass(w.category, ToleranceNotReached)]
    for msg in tol_warnings:
        log.warning("%s", msg)
    if outputs is not None:
        inputs = {k: v for k, v in vars(args).items() if k not in ("command", "threads")}
        envelope = {
            "command": args.command,
            "inputs": {"spec": serialize_spec(p), "args": inputs},
            "outputs": outputs,
            "engine": {"seed": cfg.seed if args.seed is None else args.seed, "abs_tol": cfg.abs_tol,
                       "max_points": cfg.max_points, "integration": cfg.engine},
            "warnings": tol_warnings,
        }
        if args.command == "check" and not outputs["all_passed"]:
            print(dumps(envelope), file=stdout)
            return EXIT_CHECK_FAILED
        print(dumps(envelope), file=stdout)
    return EXIT_TOLERANCE if tol_warnings else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
