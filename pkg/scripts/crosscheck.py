"""Compare deterministic moments and Mardia measures with Monte Carlo
estimates from both samplers on random parameter sets.

    python3 scripts/crosscheck.py --sets 5 --d 2 --m 2 --n 10000000
"""
import argparse
import time

import numpy as np

from sunlib.core import validate
from sunlib.moments import mardia, sun_moments
from sunlib.oracle import draw, mc_mardia, mc_moments


def random_params(rng, d, m):
    Z = rng.standard_normal((d + m, d + m))
    S = Z @ Z.T + 0.5 * np.eye(d + m)
    s = np.sqrt(np.diag(S))
    R = S / np.outer(s, s)
    sc = rng.uniform(0.5, 2.0, d)
    return validate(rng.standard_normal(d), R[:d, :d] * np.outer(sc, sc), R[:d, d:], 0.7 * rng.standard_normal(m), R[d:, d:])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sets", type=int, default=5)
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--m", type=int, default=2)
    ap.add_argument("--n", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    print(f"{'set':>3} {'sampler':>12} {'pi':>8} {'max|z| mu':>10} {'z beta1':>8} {'z beta2':>8} {'secs':>6}")
    for s in range(args.sets):
        p = random_params(np.random.default_rng(args.seed + s), args.d, args.m)
        det = sun_moments(p)
        b1, b2 = mardia(p)
        for k, method in enumerate(("additive", "conditioning")):
            t0 = time.perf_counter()
            X = draw(p, args.n, seed=1000 * s + k, method=method, threads=args.threads)
            est, se = mc_moments(X)
            e1, e2 = mc_mardia(X)
            z = max(float(np.max(np.abs(getattr(est, key) - getattr(det, key)) / getattr(se, key)))
                    for key in ("m1", "m2", "m3", "m4"))
            print(f"{s:>3} {method:>12} {p.prob:8.4f} {z:10.2f} {float(e1.z_score(b1)):8.2f} "
                  f"{float(e2.z_score(b2)):8.2f} {time.perf_counter() - t0:6.1f}")


if __name__ == "__main__":
    main()
