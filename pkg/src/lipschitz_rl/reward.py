"""Actions, duality rewards and the similarity-averaged reward.

An action ("bet") acts on a state-value vector by dot product. Two action
families are supported:

* ``l1_simplex_100``: non-negative weights summing to 100 (percent of the
  stake per product, optionally with a cash coordinate);
* ``l2_sphere_signed``: first ``n-1`` coordinates on the unit circle/sphere,
  last coordinate +1 or -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, DomainError
from .metric import MetricConfig, as_point, as_vector, pairwise_eps

ACTION_KINDS = ("l1_simplex_100", "l2_sphere_signed")


@dataclass(frozen=True)
class ActionSet:
    """Finite set of same-kind actions, one per row."""

    actions: np.ndarray
    kind: str
    seed: int | None = None

    def __post_init__(self):
        A = np.asarray(self.actions, dtype=float)
        if A.ndim == 1:
            A = A[None, :]
        object.__setattr__(self, "actions", A)
        if A.shape[0] == 0:
            raise DomainError("action set is empty")
        if self.kind not in ACTION_KINDS:
            raise ConfigError(f"unknown action kind {self.kind!r}")
        bad = [i for i, a in enumerate(A) if not is_valid_action(a, self.kind)]
        if bad:
            raise DomainError(f"actions {bad[:5]} violate the {self.kind} constraint")

    def __len__(self) -> int:
        return self.actions.shape[0]

    @property
    def dim(self) -> int:
        return self.actions.shape[1]

    def with_actions(self, extra) -> "ActionSet":
        return ActionSet(np.vstack([self.actions, np.atleast_2d(extra)]), self.kind, self.seed)


def is_valid_action(a, kind: str, tol: float = 1e-9) -> bool:
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        return False
    if kind == "l1_simplex_100":
        return bool(np.all(a >= 0) and abs(a.sum() - 100.0) <= tol * 100)
    if kind == "l2_sphere_signed":
        return bool(a.size >= 2 and abs(np.linalg.norm(a[:-1]) - 1.0) <= tol
                     and abs(a[-1]) == 1.0)
    raise ConfigError(f"unknown action kind {kind!r}")


def sample_action_set(n_actions: int, kind: str, dim: int, rng_seed: int) -> ActionSet:
    """Draw ``n_actions`` random actions; identical output for identical seeds.

    Simplex bets are Dirichlet(1, ..., 1) (uniform on the simplex) times 100.
    Signed-sphere actions take a uniformly random direction for the first
    ``dim - 1`` coordinates and a fair random sign for the last.
    """
    if n_actions < 1:
        raise ConfigError("need at least one action")
    if kind not in ACTION_KINDS:
        raise ConfigError(f"unknown action kind {kind!r}")
    rng = np.random.default_rng(rng_seed)
    if kind == "l1_simplex_100":
        if dim < 1:
            raise ConfigError("simplex actions need dim >= 1")
        A = rng.dirichlet(np.ones(dim), size=n_actions) * 100.0
    else:
        if dim < 2:
            raise ConfigError("signed sphere actions need dim >= 2")
        G = rng.standard_normal((n_actions, dim - 1))
        norms = np.linalg.norm(G, axis=1)
        while np.any(norms == 0):  # measure-zero, but keep the invariant total
            z = norms == 0
            G[z] = rng.standard_normal((int(z.sum()), dim - 1))
            norms = np.linalg.norm(G, axis=1)
        signs = rng.choice([-1.0, 1.0], size=n_actions)
        A = np.column_stack([G / norms[:, None], signs])
    return ActionSet(A, kind, rng_seed)


def dot_rows(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``A @ v`` summed left to right, independent of the BLAS in use."""
    acc = A[:, 0] * v[0]
    for j in range(1, A.shape[1]):
        acc = acc + A[:, j] * v[j]
    return acc


def duality_reward(state_value, a) -> float:
    """Reward of action ``a`` on ``state_value``: their dot product."""
    v, a = as_vector(state_value), as_vector(a)
    if v.shape != a.shape:
        raise DimensionError(f"state dim {v.size} != action dim {a.size}")
    return float(dot_rows(a[None, :], v)[0])


def action_rewards(state_value, A: ActionSet) -> np.ndarray:
    v = as_vector(state_value)
    if v.size != A.dim:
        raise DimensionError(f"state dim {v.size} != action dim {A.dim}")
    return dot_rows(A.actions, v)


class ActionChoice(NamedTuple):
    index: int
    action: np.ndarray
    value: float


def best_action(state_value, A: ActionSet) -> ActionChoice:
    """Action with the largest reward; ties go to the lowest index."""
    r = action_rewards(state_value, A)
    i = int(np.argmax(r))
    return ActionChoice(i, A.actions[i], float(r[i]))


def optimal_reward_l2(state_value, radius: float = 1.0) -> float:
    """Best reward over the l2 ball of the given radius: ``radius * ||v||_2``."""
    if radius <= 0:
        raise ConfigError("radius must be positive")
    return radius * float(np.linalg.norm(as_vector(state_value)))


@dataclass(frozen=True)
class SimilarityRewardConfig:
    """Parameters of the experience/random reward average.

    ``frac_experience`` of ``n_total`` draws come from the best historical
    actions of states within ``sim_epsilon``; the rest are random actions.
    """

    sim_epsilon: float = 0.5
    frac_experience: float = 0.9
    top_quantile: float = 0.25
    n_total: int = 30

    def __post_init__(self):
        if not self.sim_epsilon > 0:
            raise ConfigError("sim_epsilon must be positive")
        if not 0.0 <= self.frac_experience <= 1.0:
            raise ConfigError("frac_experience must lie in [0, 1]")
        if not 0.0 < self.top_quantile <= 1.0:
            raise ConfigError("top_quantile must lie in (0, 1]")
        if self.n_total < 1:
            raise ConfigError("n_total must be >= 1")

    @property
    def n_experience(self) -> int:
        # round() guards against 0.9 * 30 == 27.000000000000004
        return math.ceil(round(self.frac_experience * self.n_total, 9))


HistoryEntry = tuple  # (state, action, reward)


def draw_AB(s, history: Sequence[HistoryEntry], A_pool: ActionSet,
            cfg: SimilarityRewardConfig, rng: np.random.Generator,
            metric: MetricConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Build the multiset of actions averaged by :func:`mean_reward_AB`.

    Returns ``(experience_actions, random_actions)``. Experience actions are
    the top ``top_quantile`` (by reward) of history entries whose state lies
    within ``sim_epsilon`` of ``s``, best first, capped at
    ``cfg.n_experience``. Random actions are drawn uniformly from ``A_pool``
    and fill the remaining ``n_total`` slots.
    """
    s = as_point(s)
    metric = metric or MetricConfig()
    exp = np.empty((0, A_pool.dim))
    if len(history):
        states = np.array([h[0] for h in history], dtype=float)
        d = pairwise_eps(s, states, metric.epsilon)[0]
        similar = np.flatnonzero(d < cfg.sim_epsilon)
        if similar.size:
            rewards = np.array([history[i][2] for i in similar], dtype=float)
            n_top = max(1, math.ceil(round(cfg.top_quantile * similar.size, 9)))
            order = similar[np.argsort(-rewards, kind="stable")][:n_top]
            order = order[: cfg.n_experience]
            exp = np.array([history[i][1] for i in order], dtype=float).reshape(-1, A_pool.dim)
    n_rand = cfg.n_total - exp.shape[0]
    rand = A_pool.actions[rng.integers(0, len(A_pool), size=n_rand)]
    return exp, rand


def mean_reward_AB(s, history: Sequence[HistoryEntry], A_pool: ActionSet,
                   cfg: SimilarityRewardConfig, rng: np.random.Generator,
                   metric: MetricConfig | None = None) -> float:
    """Mean reward of ``s`` over experience actions plus random actions."""
    exp, rand = draw_AB(s, history, A_pool, cfg, rng, metric)
    members = np.vstack([exp, rand])
    return float(np.mean(dot_rows(members, as_point(s))))
