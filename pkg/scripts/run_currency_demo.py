"""Daily currency backtest on synthetic OHLCV bars, one line per extension.

    python scripts/run_currency_demo.py --days 250 --seed 0
"""

import argparse

from lipschitz_rl.data_io import synth_ohlcv
from lipschitz_rl.metric import MetricConfig
from lipschitz_rl.reward import sample_action_set
from lipschitz_rl.scenarios import run_currency_backtest


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--days", type=int, default=250)
    ap.add_argument("--actions", type=int, default=30)
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    bars = synth_ohlcv(args.days, args.seed)
    actions = sample_action_set(args.actions, "l2_sphere_signed", 3, args.seed)
    metric = MetricConfig(args.epsilon)
    print(f"{'extension':<12}{'cum_realized':>14}{'cum_optimal':>14}{'ratio':>8}")
    for ext in ("mcshane", "whitney", "blend:0.5"):
        rep = run_currency_backtest(bars, actions, metric, ext, seed=args.seed)
        ratio = rep.cum_realized / rep.cum_optimal if rep.cum_optimal else float("nan")
        print(f"{ext:<12}{rep.cum_realized:>14.4f}{rep.cum_optimal:>14.4f}{ratio:>8.3f}")


if __name__ == "__main__":
    main()
