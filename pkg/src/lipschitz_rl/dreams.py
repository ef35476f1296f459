"""Synthetic training states ("dreams").

A dream is ``t * s_i + (1 - t) * s_j + noise`` for two distinct real states.
Its reward is the extension of the real reward function evaluated at the
dream, and its action is the bet whose payoff on the dream is closest to that
reward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DomainError, InsufficientDataError
from .lipschitz import ExtensionModel
from .metric import as_point, as_points
from .reward import ActionSet, dot_rows

MAX_REDRAWS = 100


@dataclass(frozen=True)
class DreamConfig:
    """Dream fraction, noise level and interpolation law.

    ``interp`` is ``"uniform"`` (t ~ U[0, 1]) or ``"fixed:<t>"``.
    The noise standard deviation of coordinate k is ``noise_scale`` times the
    population std of coordinate k over the real states.
    """

    beta: float = 0.5
    noise_scale: float = 0.1
    interp: str = "uniform"
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"beta must lie in [0, 1], got {self.beta}")
        if not (self.noise_scale >= 0 and math.isfinite(self.noise_scale)):
            raise ConfigError(f"noise_scale must be >= 0, got {self.noise_scale}")
        _parse_interp(self.interp)


def _parse_interp(spec: str) -> float | None:
    if spec == "uniform":
        return None
    if spec.startswith("fixed:"):
        try:
            t = float(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad interpolation spec {spec!r}") from None
        if not 0.0 <= t <= 1.0:
            raise ConfigError("fixed interpolation weight must lie in [0, 1]")
        return t
    raise ConfigError(f"unknown interpolation {spec!r}; use 'uniform' or 'fixed:<t>'")


def dream_count(n_real: int, beta: float) -> int:
    """Dreams needed so they make up ``beta`` of the final set (half-up rounding)."""
    if beta == 0:
        return 0
    if beta >= 1:
        raise ConfigError("beta = 1 leaves no real states to dream from")
    return int(math.floor(n_real * beta / (1.0 - beta) + 0.5))


class Dreams(NamedTuple):
    states: np.ndarray   # (count, n)
    parents: np.ndarray  # (count, 2) indices into the real states
    weights: np.ndarray  # (count,) interpolation weight t of the first parent


def generate_dreams(real, count: int, cfg: DreamConfig,
                    rng: np.random.Generator | None = None) -> Dreams:
    """Interpolate random pairs of real states and add scaled Gaussian noise.

    Zero vectors are redrawn (at most ``MAX_REDRAWS`` times per dream).
    """
    if count < 0:
        raise ConfigError("dream count must be >= 0")
    R = as_points(real) if len(real) else np.empty((0, 0))
    if R.shape[0] < 2:
        raise InsufficientDataError("need at least two real states to interpolate")
    rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
    fixed_t = _parse_interp(cfg.interp)
    sigma = cfg.noise_scale * R.std(axis=0)
    states = np.empty((count, R.shape[1]))
    parents = np.empty((count, 2), dtype=int)
    weights = np.empty(count)
    for k in range(count):
        for _ in range(MAX_REDRAWS):
            i, j = rng.choice(R.shape[0], size=2, replace=False)
            t = fixed_t if fixed_t is not None else float(rng.uniform())
            x = t * R[i] + (1.0 - t) * R[j]
            if cfg.noise_scale > 0:
                x = x + sigma * rng.standard_normal(R.shape[1])
            if np.any(x):
                break
        else:
            raise DomainError(f"dream {k} kept landing on the zero vector")
        states[k], parents[k], weights[k] = x, (i, j), t
    return Dreams(states, parents, weights)


class DreamAction(NamedTuple):
    index: int
    action: np.ndarray
    gap: float


def assign_dream_action(s_star, ext: ExtensionModel, A: ActionSet,
                        reward: float | None = None) -> DreamAction:
    """Bet whose payoff ``s* . a`` is closest to the extended reward at ``s*``.

    ``reward`` may be passed when the extension value is already known.
    """
    if A.kind != "l1_simplex_100":
        raise ConfigError("dream actions are drawn from an l1_simplex_100 set")
    s = as_point(s_star)
    target = ext(s) if reward is None else reward
    gaps = np.abs(target - dot_rows(A.actions, s))
    i = int(np.argmin(gaps))
    return DreamAction(i, A.actions[i], float(gaps[i]))


@dataclass
class AugmentedSet:
    """Real training entries plus dreams with their provenance."""

    real_states: list = field(default_factory=list)   # (state, reward, action)
    dream_states: list = field(default_factory=list)  # (state, reward, action, (i, j))

    def __len__(self) -> int:
        return len(self.real_states) + len(self.dream_states)

    @property
    def dream_fraction(self) -> float:
        return len(self.dream_states) / len(self) if len(self) else 0.0

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Stacked (states, rewards, actions, is_dream)."""
        rows = [(s, r, a, False) for s, r, a in self.real_states]
        rows += [(s, r, a, True) for s, r, a, _ in self.dream_states]
        S = np.array([r[0] for r in rows], dtype=float)
        return (S, np.array([r[1] for r in rows], dtype=float),
                np.array([r[2] for r in rows], dtype=float),
                np.array([r[3] for r in rows], dtype=bool))


def build_augmented_set(real: Sequence[tuple], cfg: DreamConfig, ext: ExtensionModel,
                        A: ActionSet) -> AugmentedSet:
    """Add ``dream_count(len(real), beta)`` dreams to the real entries.

    ``real`` holds (state, reward, action) triples; ``ext`` must be the
    extension built from exactly those states and rewards.
    """
    real = [(as_point(s), float(r), np.asarray(a, dtype=float)) for s, r, a in real]
    out = AugmentedSet(real_states=list(real))
    n = dream_count(len(real), cfg.beta)
    if n == 0:
        return out
    dreams = generate_dreams(np.array([s for s, _, _ in real]), n, cfg)
    rewards = ext.evaluate(dreams.states)
    for x, r, (i, j) in zip(dreams.states, rewards, dreams.parents):
        choice = assign_dream_action(x, ext, A, reward=float(r))
        out.dream_states.append((x, float(r), choice.action, (int(i), int(j))))
    return out
