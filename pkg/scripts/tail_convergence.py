#!/usr/bin/env python3
"""Convergence of the rescaled tail toward its limiting constant.

For a lattice model and a linear barrier, compares three routes to the tail
probability over a grid of levels:

  * the exact lattice recursion run to convergence,
  * the tilted importance-sampling estimator,
  * the limiting approximation constant * exp(-theta* u),

and prints the rescaled ratio exp(theta* u) P(max > u) / constant, which
should approach 1 geometrically in u.

Usage:
    python3 scripts/tail_convergence.py [--dist SPEC] [--alpha A] [--umax N]
"""

import argparse
import math

from reflectedwalk import asymptotics, barrier, estimators, model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dist", default="table:-2:0.4,1:0.6",
                    help="increment distribution spec")
    ap.add_argument("--alpha", type=float, default=1.0, help="barrier slope")
    ap.add_argument("--umax", type=int, default=30)
    ap.add_argument("--n-samples", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    m = model.parse_distribution(args.dist)
    b = barrier.LinearBarrier(args.alpha)
    tm = model.solve_theta_star(m)
    tc = asymptotics.compute_constants(m, b, n_samples=args.n_samples,
                                       seed=args.seed)
    print(f"theta* = {tm.theta_star:.12f}")
    print(f"c_d = {tc.c_d:.12f}  c_b = {tc.c_b:.12f}  constant = {tc.constant:.12f}")
    print(f"{'u':>4}  {'exact':>14}  {'is-mc':>14}  {'limit':>14}  {'ratio':>18}")
    for u in range(0, args.umax + 1, max(1, args.umax // 15)):
        exact = estimators.tail_dp_converged(m, b, float(u)).point
        mc = estimators.tail_is(m, b, float(u), tm, args.n_samples,
                                seed=args.seed)
        limit, _ = asymptotics.asymptotic_tail(tc, float(u))
        ratio = math.exp(tm.theta_star * u) * exact / tc.constant
        print(f"{u:>4}  {exact:>14.6e}  {mc.point:>14.6e}  {limit:>14.6e}"
              f"  {ratio:>18.12f}")


if __name__ == "__main__":
    main()
