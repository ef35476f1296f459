"""Command line: ``liprl run | synth | verify``.

Exit codes: 0 ok, 1 verification failure, 2 config error, 3 I/O error,
4 domain error. ``LIPRL_OUTPUT_DIR`` sets the default output directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import data_io, diagnostics
from .dreams import DreamConfig
from .errors import ConfigError, DataError, DomainError
from .lipschitz import parse_extension
from .metric import MetricConfig
from .reward import SimilarityRewardConfig, sample_action_set
from .scenarios import (
    AllocationConfig,
    currency_states,
    run_allocation_backtest,
    run_currency_backtest,
)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_IO, EXIT_DOMAIN = 0, 1, 2, 3, 4
OUTPUT_ENV = "LIPRL_OUTPUT_DIR"

log = logging.getLogger("lipschitz_rl")


@dataclass
class RunConfig:
    """Everything needed to reproduce a ``run``; defaults are the published choices."""

    scenario: str = "currency"
    epsilon: float = 0.1
    extension: str = "mcshane"
    beta: float = 0.5
    actions: int = 30
    sim_epsilon: float = 0.5
    seed: int = 0
    input: str | None = None
    output: str | None = None
    format: str = "csv"
    noise_scale: float = 0.1
    window: int | None = None
    mean_volume: str = "series"
    n_pool: int = 100
    initial_capital: float = 1000.0

    def __post_init__(self):
        if self.scenario not in ("currency", "allocation"):
            raise ConfigError(f"scenario must be currency or allocation, got {self.scenario!r}")
        MetricConfig(self.epsilon)
        parse_extension(self.extension)
        if not 0.0 <= self.beta < 1.0:
            raise ConfigError(f"beta must lie in [0, 1), got {self.beta}")
        if self.actions < 1:
            raise ConfigError("actions must be >= 1")
        if not self.sim_epsilon > 0:
            raise ConfigError("sim_epsilon must be positive")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if not (self.noise_scale >= 0 and math.isfinite(self.noise_scale)):
            raise ConfigError("noise_scale must be >= 0")
        if self.window is not None and self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.mean_volume not in ("series", "previous_year"):
            raise ConfigError("mean_volume must be series or previous_year")
        AllocationConfig(n_pool=self.n_pool, initial_capital=self.initial_capital)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**d)

    def snapshot(self) -> dict:
        """Config recorded in reports (paths excluded so reruns compare equal)."""
        d = asdict(self)
        d.pop("output")
        return d

    def output_path(self) -> Path:
        if self.output:
            return Path(self.output)
        base = Path(os.environ.get(OUTPUT_ENV, "."))
        return base / f"report_{self.scenario}_seed{self.seed}.{self.format}"


def _say(quiet: bool, msg: str) -> None:
    if not quiet:
        print(msg)


def cmd_run(cfg: RunConfig, quiet: bool = False) -> int:
    if not cfg.input:
        raise ConfigError("--input is required")
    out = cfg.output_path()
    metric = MetricConfig(cfg.epsilon)
    if cfg.scenario == "currency":
        bars = data_io.load_ohlcv(cfg.input)
        actions = sample_action_set(cfg.actions, "l2_sphere_signed", 3, cfg.seed)
        report = run_currency_backtest(bars, actions, metric, cfg.extension,
                                       mean_volume=cfg.mean_volume, window=cfg.window,
                                       seed=cfg.seed, extra_config={"run": cfg.snapshot()})
        data_io.write_report(report, out, cfg.format)
        _say(quiet, f"cum_realized={report.cum_realized:.6g} cum_optimal={report.cum_optimal:.6g} "
                    f"survival_time=n/a steps={len(report.steps)} report={out}")
        return EXIT_OK
    prices = data_io.load_prices(cfg.input)
    res = run_allocation_backtest(
        prices, metric,
        SimilarityRewardConfig(sim_epsilon=cfg.sim_epsilon),
        DreamConfig(beta=cfg.beta, noise_scale=cfg.noise_scale, rng_seed=cfg.seed),
        AllocationConfig(n_products=prices.n_products, n_pool=cfg.n_pool,
                         initial_capital=cfg.initial_capital, seed=cfg.seed),
        extra_config={"run": cfg.snapshot()},
    )
    dream_out = out.with_name(f"{out.stem}_dreams{out.suffix}")
    data_io.write_report(res.real, out, cfg.format)
    data_io.write_report(res.dream, dream_out, cfg.format)
    for label, rep, path in (("real", res.real, out), ("dreams", res.dream, dream_out)):
        _say(quiet, f"[{label}] cum_realized={rep.cum_realized:.6g} "
                    f"cum_optimal={rep.cum_optimal:.6g} survival_time={rep.survival_time} "
                    f"report={path}")
    return EXIT_OK


def cmd_synth(args) -> int:
    out = Path(args.output) if args.output else Path(os.environ.get(OUTPUT_ENV, ".")) / (
        f"ohlcv_seed{args.seed}.csv" if args.ohlcv else f"prices_seed{args.seed}.csv")
    if args.ohlcv:
        data_io.write_ohlcv(data_io.synth_ohlcv(args.steps, args.seed), out)
    else:
        p = data_io.SynthParams(args.steps, args.products, args.drift, args.volatility, args.seed)
        data_io.write_prices(data_io.synth_market(p), out)
    _say(args.quiet, f"wrote {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    states = None
    if args.input:
        states, _ = currency_states(data_io.load_ohlcv(args.input))
    say = print if args.verbose else None
    checks = diagnostics.run_all(args.seed, args.instances, args.inject_k_factor, states, log=say)
    failed = [c for c in checks if not c.passed]
    if failed:
        for c in failed:
            print(f"verification failed: {c.name}: {c.detail}", file=sys.stderr)
        return EXIT_VERIFY
    _say(args.quiet, f"all {len(checks)} checks passed")
    return EXIT_OK


def _add_run_args(p: argparse.ArgumentParser) -> None:
    d = RunConfig()
    p.add_argument("--config", help="JSON file with RunConfig keys; flags override it")
    p.add_argument("--scenario", choices=["currency", "allocation"])
    p.add_argument("--input")
    p.add_argument("--output")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--seed", type=int)
    p.add_argument("--epsilon", type=float, help=f"metric weight (default {d.epsilon})")
    p.add_argument("--extension", help="mcshane | whitney | blend:<lam>")
    p.add_argument("--beta", type=float, help=f"dream share, allocation only (default {d.beta})")
    p.add_argument("--actions", type=int, help=f"currency action count (default {d.actions})")
    p.add_argument("--sim-epsilon", dest="sim_epsilon", type=float)
    p.add_argument("--noise-scale", dest="noise_scale", type=float)
    p.add_argument("--window", type=int)
    p.add_argument("--mean-volume", dest="mean_volume", choices=["series", "previous_year"])
    p.add_argument("--n-pool", dest="n_pool", type=int)
    p.add_argument("--initial-capital", dest="initial_capital", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="liprl", description=__doc__.splitlines()[0])
    ap.add_argument("-q", "--quiet", action="store_true", help="only print errors")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_run_args(sub.add_parser("run", help="run a backtest and write its report"))

    s = sub.add_parser("synth", help="write a synthetic price or OHLCV file")
    s.add_argument("--steps", type=int, default=800)
    s.add_argument("--products", type=int, default=4)
    s.add_argument("--drift", type=float, default=0.0)
    s.add_argument("--volatility", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--ohlcv", action="store_true", help="daily OHLCV bars instead of prices")
    s.add_argument("--output")

    v = sub.add_parser("verify", help="run the worked example and bound checks")
    v.add_argument("--input", help="optional OHLCV file whose states seed the bound checks")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--instances", type=int, default=100)
    v.add_argument("-v", "--verbose", action="store_true")
    v.add_argument("--inject-k-factor", type=float, default=1.0, help=argparse.SUPPRESS)
    return ap


def run_config_from_args(args) -> RunConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise DataError(f"{args.config}: no such file") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
    names = {f.name for f in fields(RunConfig)}
    over = {k: v for k, v in vars(args).items() if k in names and v is not None}
    return RunConfig.from_dict({**base, **over})


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(run_config_from_args(args), args.quiet)
        if args.command == "synth":
            return cmd_synth(args)
        return cmd_verify(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
