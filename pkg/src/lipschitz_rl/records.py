"""Plain record types shared by the scenarios and the file layer."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import accumulate

from .errors import DomainError

REPORT_COLUMNS = ("step", "action", "predicted", "realized", "optimal",
                  "cum_realized", "cum_optimal")


@dataclass(frozen=True)
class OhlcvBar:
    """One trading day. ``index`` is the 1-based day number."""

    index: int
    open: float
    high: float
    low: float
    close: float
    volume: float
    date: str | None = None

    def __post_init__(self):
        prices = (self.open, self.high, self.low, self.close)
        if not all(math.isfinite(p) for p in prices + (self.volume,)):
            raise DomainError(f"day {self.index}: non-finite value")
        if min(prices) <= 0:
            raise DomainError(f"day {self.index}: prices must be positive")
        if self.high < max(self.open, self.close):
            raise DomainError(f"day {self.index}: high below open/close")
        if self.low > min(self.open, self.close):
            raise DomainError(f"day {self.index}: low above open/close")
        if self.volume < 0:
            raise DomainError(f"day {self.index}: negative volume")


@dataclass(frozen=True)
class StepRecord:
    step: int
    action: tuple[float, ...]
    predicted: float
    realized: float
    optimal: float
    cum_realized: float
    cum_optimal: float


@dataclass
class BacktestReport:
    """Per-step decisions of a backtest plus the config that produced them."""

    steps: list[StepRecord] = field(default_factory=list)
    survival_time: int | None = None
    config: dict = field(default_factory=dict)
    seed: int | None = None

    @classmethod
    def from_series(cls, step_ids, actions, predicted, realized, optimal,
                    **kwargs) -> "BacktestReport":
        """Build a report; cumulative columns are running sums in step order."""
        cum_r = list(accumulate(float(x) for x in realized))
        cum_o = list(accumulate(float(x) for x in optimal))
        steps = [
            StepRecord(int(k), tuple(float(c) for c in a), float(p), float(r), float(o), cr, co)
            for k, a, p, r, o, cr, co in zip(step_ids, actions, predicted, realized,
                                               optimal, cum_r, cum_o)
        ]
        return cls(steps=steps, **kwargs)

    @property
    def cum_realized(self) -> float:
        return self.steps[-1].cum_realized if self.steps else 0.0

    @property
    def cum_optimal(self) -> float:
        return self.steps[-1].cum_optimal if self.steps else 0.0

    def column(self, name: str) -> list:
        return [getattr(s, name) for s in self.steps]
