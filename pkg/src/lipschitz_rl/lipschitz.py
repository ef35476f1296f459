"""Lipschitz constants of sampled functions and their McShane/Whitney extensions.

A :class:`SampledRewardFunction` is a finite table ``point -> value`` over a
metric space (either plain ``d_eps`` on states, or the product metric on
concatenated state/action pairs). Its Lipschitz constant ``K`` is the largest
pairwise difference quotient. The extensions

    McShane  T^M(x) = max_b  T(b) - K d(x, b)
    Whitney  T^W(x) = min_b  T(b) + K d(x, b)

agree with the table on its points, are K-Lipschitz everywhere, and bracket
every other K-Lipschitz extension. ``blend(lam)`` is ``(1-lam) T^M + lam T^W``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, IllPosedError, PreconditionError
from .metric import (
    MetricConfig,
    as_point,
    as_points,
    pairwise_angular,
    pairwise_eps,
    pairwise_euclidean,
    pairwise_product,
)

EXTENSION_KINDS = ("mcshane", "whitney", "blend")
_BLOCK = 1024


@dataclass(frozen=True)
class SampledRewardFunction:
    """Finite sample of a real function on a metric space.

    Build instances with :meth:`from_samples` (validates, deduplicates and
    computes ``lipschitz_k``); the raw constructor trusts its arguments.
    ``split`` is None for state points, or the state dimension when points are
    concatenated (state, action) pairs measured with the product distance.
    """

    points: np.ndarray
    values: np.ndarray
    metric: MetricConfig = field(default_factory=MetricConfig)
    split: int | None = None
    lipschitz_k: float = 0.0

    @classmethod
    def from_samples(cls, points, values, metric: MetricConfig | None = None,
                     split: int | None = None) -> "SampledRewardFunction":
        metric = metric or MetricConfig()
        P = _validate_points(points, split)
        v = np.asarray(values, dtype=float).reshape(-1)
        if v.size != P.shape[0]:
            raise DimensionError(f"{P.shape[0]} points but {v.size} values")
        if P.shape[0] == 0:
            raise IllPosedError("a sampled function needs at least one sample")
        if not np.all(np.isfinite(v)):
            raise IllPosedError("sample values must be finite")
        empty = cls(P[:0], v[:0], metric, split, 0.0)
        return empty.with_samples(P, v)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def distances(self, xs) -> np.ndarray:
        """Distance matrix from each row of ``xs`` to every sample point."""
        X = _validate_points(xs, self.split)
        if X.shape[1] != self.dim:
            raise DimensionError(f"point dim {X.shape[1]} != sample dim {self.dim}")
        return _distance(X, self.points, self.metric.epsilon, self.split)

    def with_samples(self, points, values) -> "SampledRewardFunction":
        """Return a copy with extra samples; K is updated incrementally.

        Only distances between new points and all points are computed.
        Exact duplicates with equal values are dropped; duplicates with
        different values raise :class:`IllPosedError`.
        """
        P = _validate_points(points, self.split)
        v = np.asarray(values, dtype=float).reshape(-1)
        if v.size != P.shape[0]:
            raise DimensionError(f"{P.shape[0]} points but {v.size} values")
        if self.size and P.shape[1] != self.dim:
            raise DimensionError(f"point dim {P.shape[1]} != sample dim {self.dim}")
        eps = self.metric.epsilon
        k = self.lipschitz_k
        keep = np.ones(v.size, dtype=bool)
        if self.size:
            for sl in _blocks(v.size):
                D = _distance(P[sl], self.points, eps, self.split)
                k = max(k, _max_quotient(v[sl], self.values, D, keep[sl]))
        for sl in _blocks(v.size):
            D = _distance(P[sl], P[: sl.stop], eps, self.split)
            # pairs (i, j) with j < i inside the new batch
            rows = np.arange(sl.start, sl.stop)
            mask = np.arange(sl.stop)[None, :] < rows[:, None]
            k = max(k, _max_quotient(v[sl], v[: sl.stop], D, keep[sl], mask, keep[: sl.stop]))
        pts = np.concatenate([self.points, P[keep]]) if self.size else P[keep].copy()
        vals = np.concatenate([self.values, v[keep]]) if self.size else v[keep].copy()
        return replace(self, points=pts, values=vals, lipschitz_k=float(k))

    def recompute_k(self) -> float:
        """Brute-force K over all pairs (no incremental bookkeeping)."""
        k = 0.0
        for sl in _blocks(self.size):
            D = _distance(self.points[sl], self.points, self.metric.epsilon, self.split)
            diff = np.abs(self.values[sl, None] - self.values[None, :])
            off = np.arange(self.size)[None, :] != np.arange(sl.start, sl.stop)[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                q = np.where(off, diff / D, 0.0)
            if np.any(off & (D == 0) & (diff > 0)):
                raise IllPosedError("two samples at distance 0 with different values")
            q = np.where(off & (D == 0), 0.0, q)
            if q.size:
                k = max(k, float(q.max()))
        return k


def _validate_points(points, split):
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    if split is None:
        return as_points(P)
    if P.ndim != 2 or not 0 < split < P.shape[1]:
        raise DimensionError(f"pair points need 1 <= split < dim, got split={split}, shape {P.shape}")
    as_points(P[:, :split])
    as_points(P[:, split:])
    return P


def _distance(X, Y, epsilon, split):
    if split is None:
        return pairwise_eps(X, Y, epsilon)
    return pairwise_product(X, Y, epsilon, split)


def _blocks(m: int):
    for start in range(0, m, _BLOCK):
        yield slice(start, min(m, start + _BLOCK))


def _max_quotient(va, vb, D, keep_a, mask=None, keep_b=None) -> float:
    """Largest |va_i - vb_j| / D_ij over the masked pairs.

    Rows of ``va`` that coincide with an earlier point are flagged in
    ``keep_a`` (set to False) when the values agree.
    """
    if mask is None:
        mask = np.ones(D.shape, dtype=bool)
    if keep_b is not None:
        mask = mask & keep_b[None, :]
    diff = np.abs(va[:, None] - vb[None, :])
    zero = mask & (D == 0)
    if np.any(zero & (diff > 0)):
        i, j = np.argwhere(zero & (diff > 0))[0]
        raise IllPosedError(f"samples at distance 0 have different values ({va[i]} vs {vb[j]})")
    if np.any(zero):
        keep_a &= ~np.any(zero, axis=1)
    live = mask & ~zero
    if not np.any(live):
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(live, diff / np.where(live, D, 1.0), 0.0)
    return float(q.max())


def lipschitz_constant(f: SampledRewardFunction) -> float:
    """Largest pairwise difference quotient of ``f`` (0 for one sample)."""
    return f.lipschitz_k


@dataclass(frozen=True)
class ExtensionModel:
    """An evaluable Lipschitz extension of a sampled function."""

    base: SampledRewardFunction
    kind: str = "mcshane"
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in EXTENSION_KINDS:
            raise ConfigError(f"unknown extension kind {self.kind!r}")
        if not (0.0 <= self.lam <= 1.0):
            raise ConfigError(f"blend weight must lie in [0, 1], got {self.lam}")

    def __call__(self, x) -> float:
        return float(self.evaluate(np.atleast_2d(np.asarray(x, dtype=float)))[0])

    def evaluate(self, xs) -> np.ndarray:
        X = np.atleast_2d(np.asarray(xs, dtype=float))
        if X.shape[0] == 0:
            return np.empty(0)
        D = self.base.distances(X)
        return self.evaluate_distances(D)

    def evaluate_distances(self, D: np.ndarray) -> np.ndarray:
        """Extension values given precomputed distances to the samples."""
        K, v = self.base.lipschitz_k, self.base.values
        if self.kind == "mcshane":
            return np.max(v[None, :] - K * D, axis=1)
        if self.kind == "whitney":
            return np.min(v[None, :] + K * D, axis=1)
        lo = np.max(v[None, :] - K * D, axis=1)
        hi = np.min(v[None, :] + K * D, axis=1)
        return (1.0 - self.lam) * lo + self.lam * hi


def parse_extension(spec: str) -> tuple[str, float]:
    """``"mcshane"``, ``"whitney"`` or ``"blend:0.25"`` -> (kind, lam)."""
    if spec == "mcshane":
        return "mcshane", 0.0
    if spec == "whitney":
        return "whitney", 1.0
    if spec.startswith("blend:"):
        try:
            lam = float(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad blend weight in {spec!r}") from None
        if not 0.0 <= lam <= 1.0:
            raise ConfigError(f"blend weight must lie in [0, 1], got {lam}")
        return "blend", lam
    raise ConfigError(f"unknown extension {spec!r}; use mcshane, whitney or blend:<lam>")


def _require(m: ExtensionModel, kind: str) -> None:
    if m.kind != kind:
        raise ConfigError(f"expected a {kind} model, got {m.kind}")


def mcshane_extend(m: ExtensionModel, x) -> float:
    _require(m, "mcshane")
    return m(x)


def whitney_extend(m: ExtensionModel, x) -> float:
    _require(m, "whitney")
    return m(x)


def blend_extend(m: ExtensionModel, x) -> float:
    _require(m, "blend")
    return m(x)


def evaluate_batch(m: ExtensionModel, xs: Sequence) -> list[float]:
    """Extension values at each point; an invalid point aborts with its index."""
    out = []
    for i, x in enumerate(xs):
        try:
            out.append(m(x))
        except (ValueError, IndexError) as exc:
            raise type(exc)(f"point {i}: {exc}") from exc
    return out


class BoundResult(NamedTuple):
    bound: float
    index: int


def propext_bound(f: SampledRewardFunction, x, cfg: MetricConfig | None = None,
                  radius: float = 100.0) -> BoundResult:
    """Upper bound on |R^M(x) - x . a_s0| and the sample s0 attaining it.

    Minimises ``radius*||s - x||_inf + K*Theta(s, x) + eps*K*E(s, x)`` over
    the sample states ``s``; ``a_s0`` is the action recorded for that sample.
    ``radius`` is the l1 radius of the action set (bets sum to 100).
    """
    if f.split is not None:
        raise ConfigError("propext_bound needs a function of states, not pairs")
    eps = (cfg or f.metric).epsilon
    x = as_point(x)
    K = f.lipschitz_k
    theta = pairwise_angular(x, f.points)[0]
    euc = pairwise_euclidean(x, f.points)[0]
    sup = np.max(np.abs(f.points - x[None, :]), axis=1)
    terms = radius * sup + K * theta + eps * K * euc
    i = int(np.argmin(terms))
    return BoundResult(float(terms[i]), i)


def scaled_state_bound(x, lam: float, K: float, epsilon: float, radius: float = 100.0) -> float:
    """Bound for ``x = lam * s`` with ``s`` a sample: the angular term vanishes."""
    x = as_point(x)
    if lam <= 0:
        raise ConfigError("scale factor must be positive")
    return abs(lam - 1.0) / lam * (radius * float(np.max(np.abs(x)))
                                   + epsilon * K * float(np.linalg.norm(x)))


def lower_bound_gap(f: SampledRewardFunction, x, a, cfg: MetricConfig | None = None) -> float:
    """K * (Theta(x, M0) + eps * E(x, M0)), a lower bound on |x.a - R^M(x)|.

    Only valid when ``x . a`` dominates every sample value; otherwise
    :class:`PreconditionError` is raised.
    """
    if f.split is not None:
        raise ConfigError("lower_bound_gap needs a function of states, not pairs")
    eps = (cfg or f.metric).epsilon
    x = as_point(x)
    a = np.asarray(a, dtype=float)
    if a.shape != x.shape:
        raise DimensionError(f"action dim {a.size} != state dim {x.size}")
    payoff = float(x @ a)
    top = float(f.values.max())
    if payoff < top:
        raise PreconditionError(f"x.a = {payoff} is below the largest sample value {top}")
    theta = float(pairwise_angular(x, f.points).min())
    euc = float(pairwise_euclidean(x, f.points).min())
    return f.lipschitz_k * (theta + eps * euc)


def grid_search_lambda(objective: Callable[[float], float],
                       grid: Sequence[float] = (0.0, 0.25, 0.5, 0.75, 1.0)) -> tuple[float, float]:
    """Pick the blend weight maximising ``objective``; ties go to the smaller weight."""
    best_lam, best_val = math.nan, -math.inf
    for lam in grid:
        if not 0.0 <= lam <= 1.0:
            raise ConfigError(f"blend weight {lam} outside [0, 1]")
        val = objective(lam)
        if val > best_val:
            best_lam, best_val = lam, val
    return best_lam, best_val
