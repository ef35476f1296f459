"""Survival time with and without dreams over a batch of synthetic markets.

    python scripts/dream_comparison.py --seeds 10 --drift -4 --volatility 20
"""

import argparse

import numpy as np

from lipschitz_rl.data_io import SynthParams, synth_market
from lipschitz_rl.dreams import DreamConfig
from lipschitz_rl.metric import MetricConfig
from lipschitz_rl.scenarios import AllocationConfig, run_allocation_backtest


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--steps", type=int, default=800)
    ap.add_argument("--drift", type=float, default=-4.0)
    ap.add_argument("--volatility", type=float, default=20.0)
    ap.add_argument("--beta", type=float, default=0.5)
    args = ap.parse_args()

    rows = []
    for seed in range(args.seeds):
        market = synth_market(SynthParams(args.steps, 4, args.drift, args.volatility, seed))
        res = run_allocation_backtest(market, MetricConfig(0.1),
                                      dreams=DreamConfig(beta=args.beta, rng_seed=seed),
                                      cfg=AllocationConfig(seed=seed))
        rows.append((res.real.survival_time, res.dream.survival_time))
        print(f"seed {seed:>3}: real {rows[-1][0]:>4}  dreams {rows[-1][1]:>4}")
    real, dream = np.array(rows, dtype=float).T
    print(f"mean survival: real {real.mean():.1f}  dreams {dream.mean():.1f}")
    close = np.maximum(real, dream) <= 2 * np.minimum(real, dream)
    print(f"survival within a factor of 2: {int(close.sum())}/{len(rows)}")


if __name__ == "__main__":
    main()
