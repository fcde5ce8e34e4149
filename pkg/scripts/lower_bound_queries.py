"""Queries versus competitive ratio on the adversarial lower-bound family.

Runs RandomMarker, AdaptiveQuery-b and NaiveEviction with a perfect oracle and
prints the measured ratio c, queries per OPT miss, and c * k^(1/c) as a
reference curve for the query cost of a given ratio.

    python3 scripts/lower_bound_queries.py --k 16 --phases 200
"""
import argparse
import math

import numpy as np

from parsicache.instances import LowerBoundSpec, lower_bound_instance
from parsicache.policies import PolicyConfig, fif_misses, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=16)
    ap.add_argument("--phases", type=int, default=200)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--b", type=int, nargs="+", default=[1, 2, 3, 4, 8, 15])
    ap.add_argument("--epsilon", type=float, nargs="+", default=[0.125, 0.25, 0.5])
    args = ap.parse_args()

    k = args.k
    configs = [PolicyConfig("RandomMarker")]
    configs += [PolicyConfig("AdaptiveQuery", b=b) for b in args.b]
    configs += [PolicyConfig("NaiveEviction", epsilon=e) for e in args.epsilon]
    print(f"k={k} H={args.phases} seeds={args.seeds}")
    print(f"{'policy':<26}{'ratio':>8}{'queries/OPT':>14}{'c*k^(1/c)':>12}")
    for cfg in configs:
        ratios, qpo = [], []
        for s in range(args.seeds):
            tr = lower_bound_instance(LowerBoundSpec(k, args.phases, s))
            opt = fif_misses(tr, k)
            r = simulate(cfg.with_seed(s), tr, k, opt_cost=opt)
            ratios.append(r.ratio)
            qpo.append(r.queries / opt)
        c = float(np.mean(ratios))
        print(f"{cfg.label:<26}{c:>8.3f}{np.mean(qpo):>14.3f}{c * k ** (1 / c):>12.2f}")


if __name__ == "__main__":
    main()
