"""Reinforcement learning by Lipschitz extension of reward functions.

Rewards observed on past market states are extended to unseen states with the
McShane (or Whitney, or blended) formula over a metric that mixes the angle
between state vectors with their Euclidean distance.
"""

from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    DomainError,
    IllPosedError,
    InsufficientDataError,
    LipschitzRLError,
    PreconditionError,
)
from .lipschitz import ExtensionModel, SampledRewardFunction
from .metric import MetricConfig, StateActionPair
from .records import BacktestReport, OhlcvBar, StepRecord
from .reward import ActionSet, SimilarityRewardConfig

__version__ = "0.1.0"

__all__ = [
    "ActionSet",
    "BacktestReport",
    "ConfigError",
    "DataError",
    "DimensionError",
    "DomainError",
    "ExtensionModel",
    "IllPosedError",
    "InsufficientDataError",
    "LipschitzRLError",
    "MetricConfig",
    "OhlcvBar",
    "PreconditionError",
    "SampledRewardFunction",
    "SimilarityRewardConfig",
    "StateActionPair",
    "StepRecord",
]
