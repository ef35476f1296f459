"""Self-checks run by ``liprl verify``.

The worked two-point example and randomized checks of the upper bound
(``propext_bound``) and lower bound (``lower_bound_gap``) on the distance
between the McShane reward and the best single-bet payoff.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .lipschitz import ExtensionModel, SampledRewardFunction, lower_bound_gap, propext_bound
from .metric import MetricConfig, eps_distance
from .reward import action_rewards, sample_action_set

GOLDEN_TOL = 1e-9
BOUND_TOL = 1e-7


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


def _with_k(f: SampledRewardFunction, k_factor: float) -> SampledRewardFunction:
    return f if k_factor == 1.0 else replace(f, lipschitz_k=f.lipschitz_k * k_factor)


def golden_example(k_factor: float = 1.0) -> list[Check]:
    """Two increasing states, rewards 50 and 0, eps = 1/2."""
    cfg = MetricConfig(0.5)
    f = _with_k(SampledRewardFunction.from_samples([[1.0, 0.0], [2.0, 0.0]], [50.0, 0.0], cfg),
                k_factor)
    rm = ExtensionModel(f)([-1.0, 0.0])
    rw = ExtensionModel(f, "whitney")([-1.0, 0.0])
    expected = [
        ("golden K", f.lipschitz_k, 100.0),
        ("golden d((1,0),(2,0))", eps_distance([1, 0], [2, 0], cfg), 0.5),
        ("golden d((-1,0),(1,0))", eps_distance([-1, 0], [1, 0], cfg), 2.0),
        ("golden d((-1,0),(2,0))", eps_distance([-1, 0], [2, 0], cfg), 2.5),
        ("golden McShane at (-1,0)", rm, -150.0),
        ("golden Whitney at (-1,0)", rw, 250.0),
    ]
    return [Check(name, abs(got - want) <= GOLDEN_TOL, f"{got!r} (expected {want!r})")
            for name, got, want in expected]


def random_instance(rng: np.random.Generator, states: np.ndarray | None = None,
                    max_samples: int = 30, n_bets: int = 20):
    """Sample states, simplex bets, best-bet rewards and a probe state."""
    given = states is not None
    if states is None:
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, max_samples + 1))
        states = rng.normal(size=(m, n)) * rng.uniform(0.1, 5.0)
    else:
        n = states.shape[1]
    eps = float(rng.uniform(0.05, 1.0))
    bets = sample_action_set(n_bets, "l1_simplex_100", n, int(rng.integers(2**31)))
    best = np.array([int(np.argmax(action_rewards(s, bets))) for s in states])
    rewards = np.array([action_rewards(s, bets)[i] for s, i in zip(states, best)])
    if given:
        # a rescaled, perturbed data state keeps the probe at the data's scale
        base = states[int(rng.integers(len(states)))]
        probe = base * rng.uniform(0.5, 3.0) + 0.1 * states.std(axis=0) * rng.normal(size=n)
    elif rng.uniform() < 0.5:
        probe = np.abs(rng.normal(size=n)) * rng.uniform(1.0, 10.0)
    else:
        probe = rng.normal(size=n) * rng.uniform(0.1, 5.0)
    return states, bets, best, rewards, probe, MetricConfig(eps)


def bound_battery(seed: int, n_instances: int = 100, k_factor: float = 1.0,
                  states: np.ndarray | None = None) -> list[Check]:
    """Upper bound always; lower bound whenever its dominance hypothesis holds."""
    rng = np.random.default_rng(seed)
    upper_fail, lower_fail, lower_checked = [], [], 0
    for t in range(n_instances):
        S, bets, best, R, x, cfg = random_instance(rng, states)
        f = _with_k(SampledRewardFunction.from_samples(S, R, cfg), k_factor)
        rm = ExtensionModel(f)(x)
        bound, j = propext_bound(f, x, cfg)
        payoff = float(x @ bets.actions[best[j]])
        if abs(rm - payoff) > bound + BOUND_TOL:
            upper_fail.append(t)
        payoffs = action_rewards(x, bets)
        a = bets.actions[int(np.argmax(payoffs))]
        if payoffs.max() >= f.values.max():
            lower_checked += 1
            if abs(float(x @ a) - rm) < lower_bound_gap(f, x, a, cfg) - BOUND_TOL:
                lower_fail.append(t)
    return [
        Check("upper bound (nearest-sample bet)", not upper_fail,
              f"{n_instances} instances, failures at {upper_fail[:10]}"),
        Check("lower bound (dominating bet)", not lower_fail,
              f"{lower_checked} instances satisfied the hypothesis, failures at {lower_fail[:10]}"),
    ]


def run_all(seed: int = 0, n_instances: int = 100, k_factor: float = 1.0,
            states: np.ndarray | None = None, log: Callable[[str], None] | None = None) -> list[Check]:
    checks = golden_example(k_factor) + bound_battery(seed, n_instances, k_factor, states)
    if log:
        for c in checks:
            log(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    return checks
