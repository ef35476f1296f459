"""Hybrid angular + Euclidean distance on R^n minus the origin.

    d_eps(s1, s2) = Theta(s1, s2) + eps * E(s1, s2)

where Theta is the angle between the two vectors divided by pi (so it lies in
[0, 1]) and E is the Euclidean distance. For eps > 0 this is a metric on
nonzero vectors; it is not induced by any norm.

All kernels work on 2-D arrays of row vectors and accumulate sums of squares
coordinate by coordinate in a fixed order, so a single-pair call and the
corresponding entry of a batch call are bitwise identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DimensionError, DomainError

_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True)
class MetricConfig:
    """Weight of the Euclidean term in ``d_eps``."""

    epsilon: float = 0.1

    def __post_init__(self):
        if not (isinstance(self.epsilon, (int, float)) and math.isfinite(self.epsilon)):
            raise ConfigError(f"epsilon must be a finite real, got {self.epsilon!r}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")


class StateActionPair(NamedTuple):
    state: np.ndarray
    action: np.ndarray

    def concat(self) -> np.ndarray:
        return np.concatenate([self.state, self.action])


def as_vector(x) -> np.ndarray:
    """Coerce to a finite 1-D float array (the zero vector is allowed)."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise DomainError("vector has non-finite coordinates")
    return v


def as_point(x) -> np.ndarray:
    """Validate a point of the state space: finite, 1-D and not the origin."""
    v = as_vector(x)
    if not v.any():
        raise DomainError("the zero vector is not a point of the state space")
    return v


def as_points(X) -> np.ndarray:
    """Validate a stack of points, one per row."""
    A = np.asarray(X, dtype=float)
    if A.ndim == 1:
        A = A[None, :]
    if A.ndim != 2 or A.shape[1] == 0:
        raise DimensionError(f"expected a 2-D array of points, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise DomainError("points have non-finite coordinates")
    zero = ~A.any(axis=1)
    if zero.any():
        raise DomainError(f"zero vector at row {int(np.flatnonzero(zero)[0])}")
    return A


def _row_norms(X: np.ndarray) -> np.ndarray:
    acc = X[:, 0] * X[:, 0]
    for j in range(1, X.shape[1]):
        acc = acc + X[:, j] * X[:, j]
    return np.sqrt(acc)


def _pair_norms(X: np.ndarray, Y: np.ndarray, sign: float) -> np.ndarray:
    # ||x_i + sign * y_j|| for every (i, j)
    d = X[:, None, 0] + sign * Y[None, :, 0]
    acc = d * d
    for j in range(1, X.shape[1]):
        d = X[:, None, j] + sign * Y[None, :, j]
        acc = acc + d * d
    return np.sqrt(acc)


def _unit_rows(X: np.ndarray) -> np.ndarray:
    # divide by the largest coordinate first so tiny or huge rows neither
    # underflow nor overflow when squared
    Z = X / np.abs(X).max(axis=1)[:, None]
    return Z / _row_norms(Z)[:, None]


def _check_dims(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")


def _angular_block(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    # 2*atan2(|u-v|, |u+v|) is the angle between unit vectors u, v; unlike
    # arccos of the cosine it is exact at 0 and at pi.
    return 2.0 * np.arctan2(_pair_norms(U, V, -1.0), _pair_norms(U, V, 1.0)) / math.pi


def _chunks(m: int, p: int, n: int):
    rows = max(1, _CHUNK_ELEMS // max(1, p * n))
    for start in range(0, m, rows):
        yield slice(start, min(m, start + rows))


def pairwise_angular(X, Y) -> np.ndarray:
    """Matrix of Theta(x_i, y_j) for nonzero rows of X and Y."""
    X, Y = as_points(X), as_points(Y)
    _check_dims(X, Y)
    U, V = _unit_rows(X), _unit_rows(Y)
    out = np.empty((U.shape[0], V.shape[0]))
    for sl in _chunks(U.shape[0], V.shape[0], U.shape[1]):
        out[sl] = _angular_block(U[sl], V)
    return out


def pairwise_euclidean(X, Y) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    _check_dims(X, Y)
    out = np.empty((X.shape[0], Y.shape[0]))
    for sl in _chunks(X.shape[0], Y.shape[0], X.shape[1]):
        out[sl] = _pair_norms(X[sl], Y, -1.0)
    return out


def pairwise_eps(X, Y, epsilon: float) -> np.ndarray:
    """Matrix of d_eps(x_i, y_j)."""
    X, Y = as_points(X), as_points(Y)
    _check_dims(X, Y)
    return _eps_matrix(X, Y, epsilon)


def _eps_matrix(X: np.ndarray, Y: np.ndarray, epsilon: float) -> np.ndarray:
    U, V = _unit_rows(X), _unit_rows(Y)
    out = np.empty((X.shape[0], Y.shape[0]))
    for sl in _chunks(X.shape[0], Y.shape[0], X.shape[1]):
        out[sl] = _angular_block(U[sl], V) + epsilon * _pair_norms(X[sl], Y, -1.0)
    return out


def pairwise_product(X, Y, epsilon: float, split: int) -> np.ndarray:
    """d_eps on the first ``split`` coordinates plus d_eps on the rest.

    Rows of X and Y are concatenated (state, action) pairs.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    _check_dims(X, Y)
    if not 0 < split < X.shape[1]:
        raise DimensionError(f"split {split} outside 1..{X.shape[1] - 1}")
    return (pairwise_eps(X[:, :split], Y[:, :split], epsilon)
            + pairwise_eps(X[:, split:], Y[:, split:], epsilon))


def _rowwise_norms(X: np.ndarray, Y: np.ndarray, sign: float) -> np.ndarray:
    # ||x_i + sign * y_i|| for corresponding rows, same summation order as _pair_norms
    d = X[:, 0] + sign * Y[:, 0]
    acc = d * d
    for j in range(1, X.shape[1]):
        d = X[:, j] + sign * Y[:, j]
        acc = acc + d * d
    return np.sqrt(acc)


def paired_eps(X, Y, epsilon: float) -> np.ndarray:
    """d_eps(x_i, y_i) for corresponding rows; equals the diagonal of pairwise_eps."""
    X, Y = as_points(X), as_points(Y)
    if X.shape != Y.shape:
        raise DimensionError(f"shape mismatch: {X.shape} vs {Y.shape}")
    U, V = _unit_rows(X), _unit_rows(Y)
    theta = 2.0 * np.arctan2(_rowwise_norms(U, V, -1.0), _rowwise_norms(U, V, 1.0)) / math.pi
    return theta + epsilon * _rowwise_norms(X, Y, -1.0)


def paired_angular(X, Y) -> np.ndarray:
    """Theta(x_i, y_i) for corresponding rows."""
    return paired_eps(X, Y, 0.0)


def angular_distance(s1, s2) -> float:
    """Angle between two nonzero vectors as a fraction of pi, in [0, 1]."""
    return float(pairwise_angular(as_point(s1), as_point(s2))[0, 0])


def euclidean_distance(s1, s2) -> float:
    a, b = as_vector(s1), as_vector(s2)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.size} vs {b.size}")
    return float(pairwise_euclidean(a, b)[0, 0])


def eps_distance(s1, s2, cfg: MetricConfig) -> float:
    a, b = as_point(s1), as_point(s2)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.size} vs {b.size}")
    return float(_eps_matrix(a[None, :], b[None, :], cfg.epsilon)[0, 0])


def product_distance(p1: StateActionPair, p2: StateActionPair, cfg: MetricConfig) -> float:
    """Sum of the state distance and the action distance of two pairs."""
    return (eps_distance(p1.state, p2.state, cfg)
            + eps_distance(p1.action, p2.action, cfg))


def distance_to_set(s, S, kind: str = "eps", cfg: MetricConfig | None = None) -> float:
    """inf over b in S of d(s, b) for ``kind`` in {angular, euclidean, eps}."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape[0] == 0 or S.size == 0:
        raise DomainError("distance to an empty set is undefined")
    if kind == "angular":
        D = pairwise_angular(as_point(s), S)
    elif kind == "euclidean":
        D = pairwise_euclidean(as_vector(s), S)
    elif kind == "eps":
        D = pairwise_eps(as_point(s), S, (cfg or MetricConfig()).epsilon)
    else:
        raise ConfigError(f"unknown distance kind {kind!r}")
    return float(D.min())
