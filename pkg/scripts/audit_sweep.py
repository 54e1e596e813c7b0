#!/usr/bin/env python3
"""Randomized truthfulness audit sweep over random market instances.

Draws random instances (buses, residual inertia, convex cost curves),
runs the dominant-strategy audit on each, and prints per-instance and
aggregate statistics. A nonzero exit means some deviation beat truthful
bidding beyond tolerance, with the offending instance dumped for replay.
"""

import argparse
import sys

import numpy as np
import yaml

from inertia_market import AuditError, incentive_audit
from inertia_market.auction import random_convex_curve
from inertia_market.planner import Agent


def random_instance(rng, max_buses, max_agents):
    n = int(rng.integers(1, max_buses + 1))
    m0 = rng.uniform(0.5, 4.0, size=n)
    n_agents = int(rng.integers(1, max_agents + 1))
    agents = [
        Agent(id=f"a{k}", bus=int(rng.integers(n)), curve=random_convex_curve(rng))
        for k in range(n_agents)
    ]
    return m0, agents


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", type=int, default=50)
    parser.add_argument("--trials", type=int, default=20, help="audit trials per instance")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-buses", type=int, default=3)
    parser.add_argument("--max-agents", type=int, default=5)
    args = parser.parse_args()

    from inertia_market import DisturbanceBudget

    rng = np.random.default_rng(args.seed)
    worst = -np.inf
    for k in range(args.instances):
        m0, agents = random_instance(rng, args.max_buses, args.max_agents)
        budget = DisturbanceBudget(pi_tot=float(rng.uniform(0.5, 20.0)), n=len(m0))
        gamma = float(np.exp(rng.uniform(np.log(0.5), np.log(200.0))))
        try:
            report = incentive_audit(
                agents, gamma, m0, budget, trials=args.trials, seed=args.seed + 1000 + k
            )
        except AuditError as exc:
            print(f"instance {k}: VIOLATION: {exc}", file=sys.stderr)
            print(yaml.safe_dump(exc.instance), file=sys.stderr)
            return 1
        worst = max(worst, report.max_violation)
        print(
            f"instance {k:3d}: trials={report.trials} max_violation={report.max_violation:+.3e} "
            f"mean_truthful_utility={report.mean_truthful_utility:.4f}"
        )
    print(f"all clean: {args.instances} instances x {args.trials} trials, "
          f"worst violation {worst:+.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
