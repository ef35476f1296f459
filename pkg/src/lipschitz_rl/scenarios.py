"""End-to-end backtests.

Currency scenario
    Daily decisions on one traded pair. Each past day contributes one sample
    per action: the point ``(state_i, a)`` with value ``result_i . a``. The
    McShane extension of these samples over the product metric scores every
    action on today's state, and the best-scoring action is played.

Allocation scenario
    Bets spread over several products plus cash. Training states get a reward
    from the experience/random average; test states replay the bet of their
    nearest training state. Run once on real training states only, and once
    with part of them replaced by dreams.
"""

from __future__ import annotations

import datetime as dt
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .data_io import PriceSeries, filter_zero_states
from .dreams import DreamConfig, build_augmented_set
from .errors import (
    ConfigError,
    DimensionError,
    DomainError,
    IllPosedError,
    InsufficientDataError,
)
from .lipschitz import ExtensionModel, SampledRewardFunction, parse_extension
from .metric import MetricConfig, pairwise_eps
from .records import BacktestReport, OhlcvBar
from .reward import (
    ActionSet,
    SimilarityRewardConfig,
    action_rewards,
    best_action,
    dot_rows,
    draw_AB,
    optimal_reward_l2,
    sample_action_set,
)

log = logging.getLogger(__name__)


# --------------------------------------------------------------------------
# currency
# --------------------------------------------------------------------------

def currency_states(bars: Sequence[OhlcvBar]) -> tuple[np.ndarray, np.ndarray]:
    """Morning state of each day from the second on, and the day positions.

    state_k = (open - close of day k-1, open of day k * 1e-2,
               volume of day k-1 * 1e-8)

    Returns ``(states, days)`` where ``days[i]`` is the position in ``bars``
    of the day described by ``states[i]``. Zero states are dropped.
    """
    if len(bars) < 2:
        raise InsufficientDataError("need at least 2 bars to form a state")
    rows = []
    for k in range(1, len(bars)):
        prev, cur = bars[k - 1], bars[k]
        rows.append((prev.open - prev.close, cur.open * 1e-2, prev.volume * 1e-8))
    states, removed = filter_zero_states(np.array(rows))
    days = np.delete(np.arange(1, len(bars)), removed)
    return states, days


def currency_results(bars: Sequence[OhlcvBar], mean_volume: float) -> np.ndarray:
    """End-of-day result vector of every bar.

    result_k = (open - close,
                ((high - max(open, close)) - (low - min(open, close))) * 1e-2,
                (volume - mean_volume) * 1e-8)
    """
    if not mean_volume > 0:
        raise ConfigError("mean_volume must be positive")
    if len(bars) < 2:
        raise InsufficientDataError("need at least 2 bars")
    out = np.empty((len(bars), 3))
    for k, b in enumerate(bars):
        upper = b.high - max(b.open, b.close)
        lower = b.low - min(b.open, b.close)
        out[k] = (b.open - b.close, (upper - lower) * 1e-2, (b.volume - mean_volume) * 1e-8)
    return out


def mean_volume_of(bars: Sequence[OhlcvBar], mode: str = "series") -> tuple[float, list[OhlcvBar]]:
    """Reference volume and the bars to trade on.

    ``series``: mean over all bars, trade on all bars.
    ``previous_year``: mean over the calendar year before the last year in
    the data, trade on the last year only.
    """
    if mode == "series":
        return float(np.mean([b.volume for b in bars])), list(bars)
    if mode != "previous_year":
        raise ConfigError(f"unknown mean-volume mode {mode!r}")
    if any(b.date is None for b in bars):
        raise ConfigError("previous_year mode needs dated bars")
    years = [dt.date.fromisoformat(b.date).year for b in bars]
    last = max(years)
    ref = [b for b, y in zip(bars, years) if y == last - 1]
    trade = [b for b, y in zip(bars, years) if y == last]
    if not ref:
        raise InsufficientDataError(f"no bars dated {last - 1} for the reference volume")
    mv = float(np.mean([b.volume for b in ref]))
    if not mv > 0:
        raise InsufficientDataError(f"reference volume of {last - 1} is zero")
    return mv, trade


class _PairTable:
    """Samples ``(state_i, a)`` for every past day ``i`` and every action ``a``.

    The product distance between pairs splits into a state part and an action
    part, so distances from today's pairs only need the state distances to
    past days plus a fixed action-to-action table. Each entry is computed
    with the same floating-point operations as the generic product metric,
    so the results are bitwise identical to
    ``SampledRewardFunction.from_samples(..., split=dim)``.
    """

    def __init__(self, actions: np.ndarray, metric: MetricConfig):
        self.actions = actions
        self.metric = metric
        self.action_dist = pairwise_eps(actions, actions, metric.epsilon)
        self.states: list[np.ndarray] = []
        self.values: list[np.ndarray] = []
        self.k = 0.0

    @property
    def n_days(self) -> int:
        return len(self.states)

    def _state_dist(self, s) -> np.ndarray:
        return pairwise_eps(s, np.array(self.states), self.metric.epsilon)[0]

    def distances(self, s) -> np.ndarray:
        """(n_actions, n_days * n_actions) distances from ``(s, a)`` to every sample."""
        ds = self._state_dist(s)
        D = ds[None, :, None] + self.action_dist[:, None, :]
        return D.reshape(len(self.actions), -1)

    def _quotient(self, v_new, V_old, D) -> float:
        diff = np.abs(v_new[:, None, None] - V_old[None, :, :])
        if np.any((D == 0) & (diff > 0)):
            raise IllPosedError("two identical (state, action) pairs with different rewards")
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(D > 0, diff / np.where(D > 0, D, 1.0), 0.0)
        return float(q.max()) if q.size else 0.0

    def add(self, s, v) -> None:
        zero = np.zeros(1)
        # pairs of the same day differ only in their action
        k = self._quotient(v, v[None, :], (zero[:, None, None] + self.action_dist[:, None, :]))
        if self.states:
            D = self._state_dist(s)[None, :, None] + self.action_dist[:, None, :]
            k = max(k, self._quotient(v, np.array(self.values), D))
        self.k = max(self.k, k)
        self.states.append(np.asarray(s, dtype=float))
        self.values.append(np.asarray(v, dtype=float))

    def drop_oldest(self) -> None:
        states, values = self.states[1:], self.values[1:]
        self.states, self.values, self.k = [], [], 0.0
        for s, v in zip(states, values):
            self.add(s, v)

    def function(self) -> SampledRewardFunction:
        n_act = len(self.actions)
        S = np.repeat(np.array(self.states), n_act, axis=0)
        P = np.hstack([S, np.tile(self.actions, (self.n_days, 1))])
        return SampledRewardFunction(P, np.concatenate(self.values), self.metric,
                                     split=S.shape[1], lipschitz_k=self.k)


def run_currency_backtest(bars: Sequence[OhlcvBar], actions: ActionSet,
                          metric: MetricConfig | None = None, extension: str = "mcshane",
                          mean_volume: float | str = "series", window: int | None = None,
                          optimal_radius: float = 1.0, seed: int | None = None,
                          extra_config: dict | None = None) -> BacktestReport:
    """Day-by-day decisions from the extension of all past (state, action) rewards.

    ``mean_volume`` is a number or a mode accepted by :func:`mean_volume_of`.
    ``window`` keeps only the most recent ``window`` days of samples.
    Step ``k`` of the report is the 1-based day number.
    """
    metric = metric or MetricConfig(0.1)
    kind, lam = parse_extension(extension)
    if actions.dim != 3:
        raise DimensionError(f"currency actions must have dim 3, got {actions.dim}")
    if window is not None and window < 1:
        raise ConfigError("window must be >= 1")
    if isinstance(mean_volume, str):
        mv, bars = mean_volume_of(bars, mean_volume)
    else:
        mv = float(mean_volume)
    states, days = currency_states(bars)
    results = currency_results(bars, mv)
    if states.shape[0] < 2:
        raise InsufficientDataError("need at least 2 usable states (3 days) to trade")

    A = actions.actions
    table = _PairTable(A, metric)
    ids, chosen, pred, real, opt = [], [], [], [], []
    for s, day in zip(states, days):
        r = results[day]
        try:
            if table.n_days:
                f = table.function()
                scores = ExtensionModel(f, kind, lam).evaluate_distances(table.distances(s))
                i = int(np.argmax(scores))
                ids.append(bars[day].index)
                chosen.append(A[i])
                pred.append(float(scores[i]))
                real.append(float(dot_rows(A[i:i + 1], r)[0]))
                opt.append(optimal_reward_l2(r, optimal_radius))
            table.add(s, action_rewards(r, actions))
            if window is not None and table.n_days > window:
                table.drop_oldest()
        except DomainError as exc:
            raise type(exc)(f"day {bars[day].index}: {exc}") from exc

    config = {
        "scenario": "currency", "epsilon": metric.epsilon, "extension": extension,
        "mean_volume": mv, "window": window, "optimal_radius": optimal_radius,
        "n_actions": len(actions), "action_kind": actions.kind, **(extra_config or {}),
    }
    return BacktestReport.from_series(ids, chosen, pred, real, opt, config=config, seed=seed)


def optimal_posthoc(reward_series, actions_or_ball: ActionSet | float = 1.0) -> np.ndarray:
    """Cumulative best achievable reward, known only after the fact.

    Pass an :class:`ActionSet` for the best action of a finite set, or a
    radius for the l2 ball (the per-step optimum is then ``radius * ||r||``).
    """
    series = [np.asarray(r, dtype=float) for r in reward_series]
    if not series:
        raise InsufficientDataError("empty reward series")
    if isinstance(actions_or_ball, ActionSet):
        per = [best_action(r, actions_or_ball).value for r in series]
    else:
        per = [optimal_reward_l2(r, float(actions_or_ball)) for r in series]
    out = np.empty(len(per))
    acc = 0.0
    for k, x in enumerate(per):
        acc += x
        out[k] = acc
    return out


def select_blend_weight(bars: Sequence[OhlcvBar], actions: ActionSet,
                        metric: MetricConfig | None = None,
                        grid: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
                        holdout: float = 0.5, **kwargs) -> tuple[float, dict[float, float]]:
    """Blend weight with the best realized reward over the last ``holdout`` of steps.

    The score of each weight is the realized reward summed over the held-out
    tail of a full currency backtest. Ties go to the smaller weight.
    """
    if not 0 < holdout <= 1:
        raise ConfigError("holdout must lie in (0, 1]")
    scores: dict[float, float] = {}
    for lam in grid:
        rep = run_currency_backtest(bars, actions, metric, f"blend:{lam}", **kwargs)
        tail = rep.steps[int(len(rep.steps) * (1 - holdout)):]
        scores[lam] = float(sum(s.realized for s in tail))
    best = max(grid, key=lambda lam: (scores[lam], -lam))
    return best, scores


# --------------------------------------------------------------------------
# allocation
# --------------------------------------------------------------------------

def _price_matrix(prices) -> np.ndarray:
    V = prices.values if isinstance(prices, PriceSeries) else np.asarray(prices, dtype=float)
    if V.ndim != 2:
        raise DimensionError(f"price matrix must be 2-D, got shape {V.shape}")
    return V


def allocation_states(prices, n_products: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative change of each product since the first row, plus a cash 0.

    Returns ``(states, rows)`` with ``rows[i]`` the time row of ``states[i]``.
    Zero states (including the first row) are dropped.
    """
    V = _price_matrix(prices)
    if V.shape[0] < 2:
        raise InsufficientDataError("need at least 2 time rows")
    if V.shape[1] != n_products:
        raise DimensionError(f"expected {n_products} products, got {V.shape[1]}")
    cum = V - V[0]
    S = np.hstack([cum, np.zeros((V.shape[0], 1))])
    kept, removed = filter_zero_states(S)
    rows = np.setdiff1d(np.arange(V.shape[0]), removed)
    return kept, rows


@dataclass(frozen=True)
class AllocationConfig:
    n_products: int = 4
    n_pool: int = 100
    initial_capital: float = 1000.0
    seed: int = 0

    def __post_init__(self):
        if self.n_pool < 1:
            raise ConfigError("n_pool must be >= 1")
        if not self.initial_capital > 0:
            raise ConfigError("initial_capital must be positive")


class AllocationComparison(NamedTuple):
    real: BacktestReport
    dream: BacktestReport


@dataclass
class TrainingSet:
    states: np.ndarray
    rewards: np.ndarray
    actions: np.ndarray
    is_dream: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.is_dream is None:
            self.is_dream = np.zeros(len(self.rewards), dtype=bool)


def label_training_states(states: np.ndarray, pool: ActionSet, sim: SimilarityRewardConfig,
                          metric: MetricConfig, rng: np.random.Generator) -> TrainingSet:
    """Reward and bet for each training state, in time order.

    Each state averages its payoff over experience bets (the best bets tried
    on similar earlier states) and random bets from ``pool``. Its recorded
    bet is the mean of those bets, so ``reward == state . bet`` exactly in
    real arithmetic and the bet stays on the 100-simplex. Every tried bet
    joins the history with its payoff on this state. A state seen before
    keeps its first label, so the reward stays a function of the state.
    """
    history: list[tuple] = []
    rewards = np.empty(states.shape[0])
    bets = np.empty((states.shape[0], pool.dim))
    first_seen: dict[bytes, int] = {}
    for t, s in enumerate(states):
        key = (s + 0.0).tobytes()  # + 0.0 folds -0.0 into 0.0
        if key in first_seen:
            rewards[t], bets[t] = rewards[first_seen[key]], bets[first_seen[key]]
            continue
        first_seen[key] = t
        exp, rand = draw_AB(s, history, pool, sim, rng, metric)
        members = np.vstack([exp, rand])
        payoffs = dot_rows(members, s)
        bets[t] = members.mean(axis=0)
        rewards[t] = float(dot_rows(bets[t:t + 1], s)[0])
        history.extend((s, a, float(p)) for a, p in zip(members, payoffs))
    return TrainingSet(states, rewards, bets)


def _simulate(train: TrainingSet, test_states: np.ndarray, test_rows: np.ndarray,
              V: np.ndarray, metric: MetricConfig, capital0: float,
              extension: ExtensionModel) -> tuple[list, int]:
    """Replay the nearest training bet on each test state; stop at ruin."""
    D = pairwise_eps(test_states, train.states, metric.epsilon)
    nearest = np.argmin(D, axis=1)
    predicted = extension.evaluate(test_states)
    ids, acts, pred, real, opt = [], [], [], [], []
    capital = capital0
    survival = len(test_states)
    for k, (j, row) in enumerate(zip(nearest, test_rows)):
        bet = train.actions[j]
        inc = np.append(V[row + 1] - V[row], 0.0)
        gain = float(dot_rows((bet / 100.0)[None, :], inc)[0])
        ids.append(int(row))
        acts.append(bet)
        pred.append(float(predicted[k]))
        real.append(gain)
        opt.append(max(0.0, float(inc.max())))
        capital += gain
        if capital <= 0:
            survival = k + 1
            break
    return [ids, acts, pred, real, opt], survival


def run_allocation_backtest(prices, metric: MetricConfig | None = None,
                            sim: SimilarityRewardConfig | None = None,
                            dreams: DreamConfig | None = None,
                            cfg: AllocationConfig | None = None,
                            extra_config: dict | None = None) -> AllocationComparison:
    """Train on the first half of the minutes, trade the second half twice.

    The real-only run trains on every training state. The dream run keeps a
    random ``1 - beta`` share of them and adds dreams so that dreams are a
    ``beta`` share of its training set. On each test minute the bet of the
    nearest training state is applied; profit is ``(bet / 100) . increment``.
    Capital starts at ``initial_capital`` and the run stops when it is spent.
    """
    metric = metric or MetricConfig(0.1)
    sim = sim or SimilarityRewardConfig()
    dreams = dreams or DreamConfig()
    cfg = cfg or AllocationConfig()
    V = _price_matrix(prices)
    states, rows = allocation_states(V, cfg.n_products)
    half = V.shape[0] // 2
    tr = rows < half
    te = (rows >= half) & (rows < V.shape[0] - 1)
    if tr.sum() < 2 or te.sum() < 2:
        raise InsufficientDataError(
            f"train/test split left {int(tr.sum())}/{int(te.sum())} states; need >= 2 each")
    pool = sample_action_set(cfg.n_pool, "l1_simplex_100", cfg.n_products + 1, cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    train = label_training_states(states[tr], pool, sim, metric, rng)

    base_cfg = {
        "scenario": "allocation", "epsilon": metric.epsilon, **asdict(sim),
        **{f"dream_{k}": v for k, v in asdict(dreams).items()}, **asdict(cfg),
        **(extra_config or {}),
    }
    reports = []
    for mode in ("real", "dream"):
        if mode == "real":
            ts = train
        else:
            ts = _dream_training_set(train, pool, dreams, metric, np.random.default_rng(cfg.seed + 1))
        ext = ExtensionModel(SampledRewardFunction.from_samples(ts.states, ts.rewards, metric))
        series, survival = _simulate(ts, states[te], rows[te], V, metric, cfg.initial_capital, ext)
        conf = {**base_cfg, "mode": mode, "train_size": int(len(ts.rewards)),
                "train_dreams": int(ts.is_dream.sum())}
        reports.append(BacktestReport.from_series(*series, survival_time=survival,
                                                  config=conf, seed=cfg.seed))
    return AllocationComparison(*reports)


def _dream_training_set(train: TrainingSet, pool: ActionSet, cfg: DreamConfig,
                        metric: MetricConfig, rng: np.random.Generator) -> TrainingSet:
    n = len(train.rewards)
    n_keep = n - int(math.floor(n * cfg.beta + 0.5))
    if n_keep < 2 and cfg.beta > 0:
        raise InsufficientDataError(f"beta={cfg.beta} keeps {n_keep} real states; need >= 2")
    keep = np.arange(n) if n_keep == n else np.sort(rng.choice(n, size=n_keep, replace=False))
    f = SampledRewardFunction.from_samples(train.states[keep], train.rewards[keep], metric)
    ext = ExtensionModel(f)
    # every kept bet is a candidate, so the nearest-sample bound applies to dreams
    candidates = pool.with_actions(train.actions[keep])
    entries = [(train.states[i], train.rewards[i], train.actions[i]) for i in keep]
    aug = build_augmented_set(entries, cfg, ext, candidates)
    S, R, A, is_dream = aug.arrays()
    return TrainingSet(S, R, A, is_dream)
