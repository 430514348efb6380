"""Orthant conditioning: parameter-based conditional CDF against empirical
conditional CDFs from rejection-filtered draws, for both directions.

Also evaluates two alternative parameterisations of the conditional law that
differ from the implemented one: the shape-matrix columns taken in the order
(Delta2, Omegabar21), and the 'less' location taken as (xi1 - y1)/omega1.
Their z-scores show that neither matches the simulated law.
"""
import argparse

import numpy as np

from sunlib.core import OrthantCondition, cdf, condition_orthant, validate
from sunlib.oracle import draw


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    p = validate([0.5, -0.3, 0.2], [[1.0, 0.4, 0.2], [0.4, 2.0, -0.3], [0.2, -0.3, 1.5]],
                 [[0.6], [-0.4], [0.3]], [0.3], [[1.0]])
    y1 = np.array([0.1])
    Y = draw(p, args.n, seed=args.seed)
    probes = [np.array([-0.3, 0.2]), np.array([0.5, 1.0]), np.array([-1.0, -0.5])]
    print(f"{'direction':>9} {'probe':>14} {'model':>8} {'empirical':>9} {'z':>6} {'z alt':>7}")
    for direction, sign in (("greater", 1.0), ("less", -1.0)):
        q = condition_orthant(p, OrthantCondition([0], y1, direction))
        if direction == "greater":
            alt = validate(q.xi, q.Omega, np.hstack([p.Delta[1:], p.Omega_bar[1:, :1]]), q.tau, q.Gamma)
        else:
            alt = validate(q.xi, q.Omega, q.Delta, np.concatenate([(p.xi[:1] - y1) / p.omega[:1], p.tau]), q.Gamma)
        sel = Y[sign * (Y[:, 0] + y1[0]) > 0, 1:]
        for y2 in probes:
            f = cdf(q, y2)
            emp = np.mean(np.all(sel <= y2, axis=1))
            se = np.sqrt(f * (1 - f) / len(sel))
            print(f"{direction:>9} {str(y2):>14} {f:8.5f} {emp:9.5f} {(emp - f) / se:6.2f} "
                  f"{(emp - cdf(alt, y2)) / se:7.1f}")


if __name__ == "__main__":
    main()
