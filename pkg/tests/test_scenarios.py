import logging
import math

import numpy as np
import pytest

from lipschitz_rl import ConfigError, DimensionError, InsufficientDataError
from lipschitz_rl.data_io import SynthParams, synth_market, synth_ohlcv
from lipschitz_rl.dreams import DreamConfig
from lipschitz_rl.lipschitz import SampledRewardFunction
from lipschitz_rl.metric import MetricConfig
from lipschitz_rl.records import OhlcvBar
from lipschitz_rl.reward import (
    ActionSet,
    SimilarityRewardConfig,
    best_action,
    sample_action_set,
)
from lipschitz_rl.scenarios import (
    AllocationConfig,
    _PairTable,
    allocation_states,
    currency_results,
    currency_states,
    label_training_states,
    mean_volume_of,
    optimal_posthoc,
    run_allocation_backtest,
    run_currency_backtest,
    select_blend_weight,
)

EPS = MetricConfig(0.1)


def bar(i, o, h, lo, c, v, date=None):
    return OhlcvBar(i, o, h, lo, c, v, date)


# ---------------------------------------------------------------- currency

def test_currency_state_example():
    bars = [bar(1, 100, 101, 89, 90, 2e8), bar(2, 95, 96, 94, 95.5, 1e8)]
    states, days = currency_states(bars)
    # the first day has no state of its own
    assert states.shape == (1, 3) and list(days) == [1]
    assert states[0] == pytest.approx([10.0, 0.95, 2.0], abs=1e-12)


def test_currency_result_example():
    r = currency_results([bar(1, 100, 102, 88, 90, 5e8), bar(2, 90, 90, 90, 90, 5e8)], 5e8)
    assert r[0] == pytest.approx([10.0, 0.04, 0.0], abs=1e-12)
    # high = max(open, close), low = min(open, close) and volume = mean
    assert r[1][1] == 0.0 and r[1][2] == 0.0


def test_mean_volume_modes():
    bars = [bar(1, 1, 1, 1, 1, 10, "2018-12-31"), bar(2, 1, 1, 1, 1, 30, "2019-01-01"),
            bar(3, 1, 1, 1, 1, 50, "2019-06-01")]
    assert mean_volume_of(bars) == (30.0, bars)
    mv, trade = mean_volume_of(bars, "previous_year")
    assert mv == 10.0 and trade == bars[1:]
    with pytest.raises(ConfigError):
        mean_volume_of(bars, "median")


def test_single_action_cold_start():
    # one action: every day contributes a single sample, so on the first
    # traded day K = 0 and the prediction is yesterday's payoff
    bars = synth_ohlcv(6, seed=2)
    A = ActionSet([[0.6, 0.8, -1.0]], "l2_sphere_signed")
    rep = run_currency_backtest(bars, A, EPS)
    mv = float(np.mean([b.volume for b in bars]))
    r = currency_results(bars, mv)
    assert rep.steps[0].step == 3  # day 2 is the first with a state, day 3 the first trade
    assert rep.steps[0].predicted == pytest.approx(float(r[1] @ A.actions[0]), abs=1e-12)
    assert all(s.action == (0.6, 0.8, -1.0) for s in rep.steps)


def test_currency_report_columns():
    bars = synth_ohlcv(60, seed=5)
    A = sample_action_set(30, "l2_sphere_signed", 3, 5)
    rep = run_currency_backtest(bars, A, EPS, seed=5)
    r = currency_results(bars, float(np.mean([b.volume for b in bars])))
    traded = [s.step - 1 for s in rep.steps]
    norms = [float(np.linalg.norm(r[k])) for k in traded]
    assert rep.column("optimal") == pytest.approx(norms, rel=1e-15)
    assert rep.cum_optimal == pytest.approx(sum(norms), rel=1e-12)
    for s, k in zip(rep.steps, traded):
        a = np.array(s.action)
        assert s.realized == pytest.approx(float(r[k] @ a), abs=1e-12)
        # actions have l2 norm sqrt(2), so sqrt(2) * ||r|| caps a single step
        assert s.realized <= math.sqrt(2) * s.optimal + 1e-12
    assert rep.config["n_actions"] == 30 and rep.seed == 5


def test_currency_backtest_is_deterministic():
    bars = synth_ohlcv(40, seed=1)
    A = sample_action_set(10, "l2_sphere_signed", 3, 1)
    assert run_currency_backtest(bars, A, EPS, seed=1) == run_currency_backtest(bars, A, EPS, seed=1)


def test_pair_table_matches_generic_product_metric():
    bars = synth_ohlcv(25, seed=8)
    states, days = currency_states(bars)
    r = currency_results(bars, 8e9)
    A = sample_action_set(5, "l2_sphere_signed", 3, 8).actions
    table = _PairTable(A, EPS)
    points, values = [], []
    for s, d in zip(states, days):
        table.add(s, A @ r[d])
        points += [np.concatenate([s, a]) for a in A]
        values += list(A @ r[d])
    generic = SampledRewardFunction.from_samples(points, values, EPS, split=3)
    f = table.function()
    assert f.lipschitz_k == generic.lipschitz_k
    probe = states[3] * 1.1
    P = np.array([np.concatenate([probe, a]) for a in A])
    assert np.array_equal(table.distances(probe), generic.distances(P))


def test_window_keeps_recent_days_only():
    bars = synth_ohlcv(30, seed=4)
    A = sample_action_set(4, "l2_sphere_signed", 3, 4)
    full = run_currency_backtest(bars, A, EPS)
    windowed = run_currency_backtest(bars, A, EPS, window=3)
    assert len(full.steps) == len(windowed.steps)
    assert full.steps[1] == windowed.steps[1]  # window not yet full
    table = _PairTable(A.actions, EPS)
    for s in np.eye(3)[[0, 1, 2, 0]] + 0.5:
        table.add(s, np.arange(4.0) * s.sum())
        if table.n_days > 2:
            table.drop_oldest()
    assert table.k == table.function().recompute_k()


def test_currency_rejects_bad_input():
    with pytest.raises(DimensionError):
        run_currency_backtest(synth_ohlcv(10, 0), sample_action_set(3, "l2_sphere_signed", 2, 0))
    with pytest.raises(InsufficientDataError):
        run_currency_backtest(synth_ohlcv(2, 0), sample_action_set(3, "l2_sphere_signed", 3, 0))


def test_select_blend_weight():
    bars = synth_ohlcv(40, seed=3)
    A = sample_action_set(6, "l2_sphere_signed", 3, 3)
    lam, scores = select_blend_weight(bars, A, EPS, grid=(0.0, 0.5, 1.0))
    assert lam in scores and scores[lam] == max(scores.values())


def test_optimal_posthoc():
    assert list(optimal_posthoc([(3, 4, 0)])) == [5.0]
    A = ActionSet([[50.0, 50.0], [0.0, 100.0]], "l1_simplex_100")
    series = [(1, 0), (0, 2), (-1, -1)]
    want = np.cumsum([best_action(r, A).value for r in series])
    assert np.array_equal(optimal_posthoc(series, A), want)
    assert list(optimal_posthoc([(0, 0, 0), (0, 0, 0)])) == [0.0, 0.0]


# ---------------------------------------------------------------- allocation

def test_allocation_state_example():
    V = np.array([[0.0, 0.0, 0.0, 0.0], [1.0, -2.0, 0.0, 3.0]])
    states, rows = allocation_states(V)
    assert states.tolist() == [[1.0, -2.0, 0.0, 3.0, 0.0]] and rows.tolist() == [1]


def test_constant_prices_repeat_states():
    V = np.vstack([np.zeros(4), np.tile([1.0, 2.0, 3.0, 4.0], (5, 1))])
    states, _ = allocation_states(V)
    assert np.all(states == states[0])


def test_zero_increment_row_is_filtered(caplog):
    V = np.array([[5.0] * 4, [6.0] * 4, [5.0] * 4, [7.0] * 4])
    with caplog.at_level(logging.WARNING, logger="lipschitz_rl"):
        states, rows = allocation_states(V)
    assert rows.tolist() == [1, 3]
    assert "zero state" in caplog.text


def test_repeated_states_share_a_label():
    S = np.array([[1.0, 2.0, 0.0], [1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [1.0, 2.0, 0.0]])
    pool = sample_action_set(10, "l1_simplex_100", 3, 0)
    ts = label_training_states(S, pool, SimilarityRewardConfig(), EPS, np.random.default_rng(0))
    assert ts.rewards[0] == ts.rewards[1] == ts.rewards[3]
    assert np.allclose(np.einsum("ij,ij->i", S, ts.actions), ts.rewards, atol=1e-9)
    assert np.allclose(ts.actions.sum(axis=1), 100.0)


def _market(seed, n=800, drift=0.0, vol=1.0):
    return synth_market(SynthParams(n, 4, drift, vol, seed))


def test_beta_zero_dream_run_equals_real_run():
    res = run_allocation_backtest(_market(3, 200), EPS, dreams=DreamConfig(beta=0.0))
    assert res.real.steps == res.dream.steps
    assert res.real.survival_time == res.dream.survival_time


def test_test_states_seen_in_training_replay_their_bets():
    # a 10-step cycle: the test half revisits the training states exactly
    cycle = np.random.default_rng(0).normal(size=(10, 4))
    cycle[0] = 0.0
    V = np.tile(cycle, (10, 1))
    cfg = AllocationConfig(seed=2)
    res = run_allocation_backtest(V, EPS, cfg=cfg)
    states, rows = allocation_states(V)
    pool = sample_action_set(cfg.n_pool, "l1_simplex_100", 5, cfg.seed)
    tr = rows < 50
    train = label_training_states(states[tr], pool, SimilarityRewardConfig(), EPS,
                                  np.random.default_rng(cfg.seed))
    for step in res.real.steps:
        j = int(np.flatnonzero(rows[tr] % 10 == step.step % 10)[0])
        assert step.action == tuple(train.actions[j])


def test_capital_never_rises_when_every_bet_loses():
    res = run_allocation_backtest(_market(1, 300, drift=-1.0, vol=0.0), EPS)
    for rep in res:
        assert all(s.realized < 0 for s in rep.steps)
        cum = rep.column("cum_realized")
        assert all(b <= a for a, b in zip(cum, cum[1:]))


def test_allocation_reports():
    res = run_allocation_backtest(_market(4, 400), EPS, cfg=AllocationConfig(seed=4))
    for rep, mode in zip(res, ("real", "dream")):
        assert rep.config["mode"] == mode and rep.seed == 4
        assert 1 <= rep.survival_time <= len(rep.steps)
        for s in rep.steps:
            assert s.realized <= s.optimal + 1e-9
            assert sum(s.action) == pytest.approx(100.0)
    assert res.dream.config["train_dreams"] == res.dream.config["train_size"] // 2


def test_ruin_stops_the_run():
    res = run_allocation_backtest(_market(2, 400, drift=-3.0, vol=1.0), EPS,
                                  cfg=AllocationConfig(initial_capital=10.0))
    rep = res.real
    assert rep.survival_time == len(rep.steps) < 199
    assert 10.0 + rep.cum_realized <= 0 < 10.0 + rep.steps[-2].cum_realized


def test_allocation_is_deterministic():
    a = run_allocation_backtest(_market(6, 200), EPS)
    b = run_allocation_backtest(_market(6, 200), EPS)
    assert a == b


def test_allocation_needs_enough_states():
    with pytest.raises(InsufficientDataError):
        run_allocation_backtest(np.zeros((10, 4)), EPS)
    with pytest.raises(DimensionError):
        run_allocation_backtest(_market(0, 50).values[:, :3], EPS)
