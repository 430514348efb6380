"""Spectrum of Omega - Sigma over random parameter sets, grouped by (d, m).

Omega - Sigma = Lambda (Gamma - Sigma_U) Lambda' with Lambda of size d x m,
so its rank is min(d, m); it is positive definite only when m >= d.
"""
import argparse

import numpy as np

from sunlib.core import validate
from sunlib.moments import sun_var


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'d':>2} {'m':>2} {'min eig':>10} {'max eig':>10} {'numerical rank':>15}")
    for d in (1, 2, 3):
        for m in (1, 2, 3):
            lo, hi, ranks = np.inf, 0.0, set()
            for _ in range(args.reps):
                Z = rng.standard_normal((d + m, d + m))
                S = Z @ Z.T + 0.5 * np.eye(d + m)
                s = np.sqrt(np.diag(S))
                R = S / np.outer(s, s)
                p = validate(np.zeros(d), R[:d, :d], R[:d, d:], rng.standard_normal(m), R[d:, d:])
                ev = np.linalg.eigvalsh(p.Omega - sun_var(p))
                lo, hi = min(lo, ev[0]), max(hi, ev[-1])
                ranks.add(int(np.sum(ev > 1e-10 * ev[-1])))
            print(f"{d:>2} {m:>2} {lo:10.2e} {hi:10.2e} {str(sorted(ranks)):>15}")


if __name__ == "__main__":
    main()
