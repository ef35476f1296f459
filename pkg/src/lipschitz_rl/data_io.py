"""File formats, synthetic markets and report serialization.

Formats
-------
OHLCV CSV
    header ``date,open,high,low,close,volume``; ISO dates; ``.`` decimals.
Price CSV
    header ``t,product_1,...,product_n``; one row per minute.
Report CSV
    one ``# {json}`` line holding ``meta`` and ``survival_time``, then the
    header ``step,action,predicted,realized,optimal,cum_realized,cum_optimal``.
    ``action`` is a ``;``-separated vector. Reals use 17 significant digits.
Report JSON
    ``{"meta": {"seed", "config"}, "steps": [...], "survival_time"}``.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import ConfigError, DataError, DomainError, InsufficientDataError
from .records import REPORT_COLUMNS, BacktestReport, OhlcvBar, StepRecord

log = logging.getLogger(__name__)

OHLCV_HEADER = ("date", "open", "high", "low", "close", "volume")


def fmt_real(x: float) -> str:
    return format(float(x), ".17g")


# --------------------------------------------------------------------------
# price series
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthParams:
    n_steps: int = 800
    n_products: int = 4
    drift: float = 0.0
    volatility: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_steps < 2:
            raise ConfigError("n_steps must be >= 2")
        if self.n_products < 1:
            raise ConfigError("n_products must be >= 1")
        if not (self.volatility >= 0 and math.isfinite(self.volatility)):
            raise ConfigError("volatility must be a finite value >= 0")
        if not math.isfinite(self.drift):
            raise ConfigError("drift must be finite")


@dataclass(frozen=True)
class PriceSeries:
    """Values of several products on a strictly increasing time grid."""

    timestamps: np.ndarray
    values: np.ndarray
    source: dict = field(default_factory=lambda: {"kind": "file"})

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=np.int64)
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != t.size:
            raise DomainError(f"values shape {v.shape} does not match {t.size} timestamps")
        if np.any(np.diff(t) <= 0):
            raise DomainError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise DomainError("price values must be finite")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def n_products(self) -> int:
        return self.values.shape[1]


def synth_market(p: SynthParams) -> PriceSeries:
    """Seeded Gaussian random walk with drift; every product starts at 0."""
    rng = np.random.default_rng(p.seed)
    shocks = p.drift + p.volatility * rng.standard_normal((p.n_steps - 1, p.n_products))
    values = np.vstack([np.zeros((1, p.n_products)), np.cumsum(shocks, axis=0)])
    return PriceSeries(np.arange(p.n_steps), values, {"kind": "synthetic", **asdict(p)})


def write_prices(series: PriceSeries, path) -> None:
    header = ["t"] + [f"product_{i + 1}" for i in range(series.n_products)]
    rows = [[str(int(t))] + [fmt_real(x) for x in row]
            for t, row in zip(series.timestamps, series.values)]
    _write_csv(path, header, rows)


def load_prices(path) -> PriceSeries:
    path = Path(path)
    lines = _read_lines(path)
    reader = csv.reader(lines)
    header = next(reader, None)
    if not header or header[0] != "t" or len(header) < 2:
        raise DataError(f"{path}: expected header 't,product_1,...'")
    ts, vals = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            ts.append(int(row[0]))
            vals.append([float(x) for x in row[1:]])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from None
    if len(ts) < 2:
        raise InsufficientDataError(f"{path}: need at least 2 rows of prices")
    try:
        return PriceSeries(np.array(ts), np.array(vals), {"kind": "file", "path": str(path)})
    except DomainError as exc:
        raise DataError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------
# OHLCV
# --------------------------------------------------------------------------

def parse_ohlcv(lines: Iterable[str]) -> tuple[list[OhlcvBar], list[tuple[int, str]]]:
    """Parse OHLCV CSV text into bars plus ``(line_number, reason)`` rejections.

    Rows are rejected when malformed or when they break an :class:`OhlcvBar`
    invariant. Accepted rows must have strictly increasing dates; a violation
    raises :class:`DataError` because the series cannot be ordered.
    """
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        raise InsufficientDataError("empty OHLCV file")
    if tuple(h.strip().lower() for h in header) != OHLCV_HEADER:
        raise DataError(f"OHLCV header must be {','.join(OHLCV_HEADER)}, got {','.join(header)}")
    bars: list[OhlcvBar] = []
    rejected: list[tuple[int, str]] = []
    last_date = None
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(OHLCV_HEADER):
            rejected.append((lineno, f"expected 6 fields, got {len(row)}"))
            continue
        try:
            date = dt.date.fromisoformat(row[0].strip())
            o, h, lo, c, v = (float(x) for x in row[1:])
        except ValueError as exc:
            rejected.append((lineno, str(exc)))
            continue
        try:
            bar = OhlcvBar(len(bars) + 1, o, h, lo, c, v, date.isoformat())
        except DomainError as exc:
            rejected.append((lineno, str(exc).split(": ", 1)[-1]))
            continue
        if last_date is not None and date <= last_date:
            raise DataError(f"line {lineno}: date {date} is not after {last_date}")
        last_date = date
        bars.append(bar)
    return bars, rejected


def load_ohlcv(path, strict: bool = True) -> list[OhlcvBar]:
    """Read an OHLCV CSV file.

    With ``strict`` any rejected row raises :class:`DataError` listing every
    offending line; otherwise rejected rows are skipped with a warning.
    """
    path = Path(path)
    bars, rejected = parse_ohlcv(_read_lines(path))
    if rejected:
        detail = "; ".join(f"line {n}: {why}" for n, why in rejected)
        if strict:
            raise DataError(f"{path}: rejected rows: {detail}")
        log.warning("%s: skipped rows: %s", path, detail)
    if not bars:
        raise InsufficientDataError(f"{path}: no usable OHLCV rows")
    return bars


def write_ohlcv(bars: Iterable[OhlcvBar], path) -> None:
    rows = [[b.date or str(b.index), fmt_real(b.open), fmt_real(b.high), fmt_real(b.low),
             fmt_real(b.close), fmt_real(b.volume)] for b in bars]
    _write_csv(path, list(OHLCV_HEADER), rows)


def synth_ohlcv(n_days: int, seed: int, start_price: float = 200.0,
                daily_vol: float = 0.04, mean_volume: float = 8e9,
                start_date: str = "2019-01-01") -> list[OhlcvBar]:
    """Seeded daily bars from a log-normal walk (test and demo input)."""
    if n_days < 1:
        raise ConfigError("n_days must be >= 1")
    rng = np.random.default_rng(seed)
    day0 = dt.date.fromisoformat(start_date)
    bars = []
    prev_close = start_price
    for k in range(n_days):
        o = prev_close * math.exp(0.005 * rng.standard_normal())
        c = o * math.exp(daily_vol * rng.standard_normal())
        h = max(o, c) * (1 + abs(0.02 * rng.standard_normal()))
        lo = min(o, c) * (1 - abs(0.02 * rng.standard_normal()))
        v = mean_volume * math.exp(0.3 * rng.standard_normal())
        bars.append(OhlcvBar(k + 1, o, h, lo, c, v, (day0 + dt.timedelta(days=k)).isoformat()))
        prev_close = c
    return bars


# --------------------------------------------------------------------------
# zero states
# --------------------------------------------------------------------------

def filter_zero_states(states) -> tuple[np.ndarray, list[int]]:
    """Drop all-zero rows; the origin is not a valid state."""
    S = np.asarray(states, dtype=float)
    if S.ndim == 1:
        S = S.reshape(-1, 1) if S.size == 0 else S[None, :]
    if S.shape[0] == 0:
        return S, []
    zero = ~np.any(S, axis=1)
    removed = [int(i) for i in np.flatnonzero(zero)]
    if removed:
        log.warning("removed %d zero state(s) at indices %s", len(removed), removed[:20])
    if zero.all():
        log.warning("every state was zero; nothing left to learn from")
    return S[~zero], removed


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

def _report_meta(r: BacktestReport) -> dict:
    return {"meta": {"seed": r.seed, "config": r.config}, "survival_time": r.survival_time}


def report_to_json(r: BacktestReport) -> str:
    doc = _report_meta(r)
    doc["steps"] = [
        {**asdict(s), "action": list(s.action)} for s in r.steps
    ]
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def report_to_csv(r: BacktestReport) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_report_meta(r), allow_nan=False) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for s in r.steps:
        w.writerow([s.step, ";".join(fmt_real(a) for a in s.action), fmt_real(s.predicted),
                    fmt_real(s.realized), fmt_real(s.optimal), fmt_real(s.cum_realized),
                    fmt_real(s.cum_optimal)])
    return buf.getvalue()


def write_report(r: BacktestReport, path, format: str | None = None) -> Path:
    """Write a report as ``csv`` or ``json`` (default: from the file suffix)."""
    path = Path(path)
    fmt = format or ("json" if path.suffix.lower() == ".json" else "csv")
    if fmt == "json":
        text = report_to_json(r)
    elif fmt == "csv":
        text = report_to_csv(r)
    else:
        raise ConfigError(f"unknown report format {fmt!r}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"{path}: cannot write report: {exc.strerror or exc}") from exc
    return path


def read_report(path, format: str | None = None) -> BacktestReport:
    path = Path(path)
    fmt = format or ("json" if path.suffix.lower() == ".json" else "csv")
    text = "".join(_read_lines(path))
    try:
        if fmt == "json":
            doc = json.loads(text)
            steps = [StepRecord(int(s["step"]), tuple(float(a) for a in s["action"]),
                                *(float(s[c]) for c in REPORT_COLUMNS[2:]))
                     for s in doc["steps"]]
            meta = doc
        else:
            first, _, body = text.partition("\n")
            if not first.startswith("# "):
                raise DataError(f"{path}: missing '# {{meta}}' line")
            meta = json.loads(first[2:])
            rows = list(csv.reader(io.StringIO(body)))
            if tuple(rows[0]) != REPORT_COLUMNS:
                raise DataError(f"{path}: unexpected report header {rows[0]}")
            steps = [StepRecord(int(row[0]),
                                tuple(float(a) for a in row[1].split(";")) if row[1] else (),
                                *(float(x) for x in row[2:]))
                     for row in rows[1:] if row]
    except (KeyError, ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed report: {exc}") from None
    return BacktestReport(steps=steps, survival_time=meta["survival_time"],
                          config=meta["meta"]["config"], seed=meta["meta"]["seed"])


def write_augmented_set(aug, path) -> None:
    """CSV of a dream-augmented training set with a real/dream provenance column."""
    rows = []
    for s, r, a in aug.real_states:
        rows.append(["real", "", fmt_real(r), ";".join(map(fmt_real, s)), ";".join(map(fmt_real, a))])
    for s, r, a, (i, j) in aug.dream_states:
        rows.append(["dream", f"{i};{j}", fmt_real(r), ";".join(map(fmt_real, s)),
                     ";".join(map(fmt_real, a))])
    _write_csv(path, ["provenance", "parents", "reward", "state", "action"], rows)


# --------------------------------------------------------------------------

def _read_lines(path: Path) -> list[str]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return fh.readlines()
    except FileNotFoundError:
        raise DataError(f"{path}: no such file") from None
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None


def _write_csv(path, header, rows) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise DataError(f"{path}: cannot write: {exc.strerror or exc}") from exc
