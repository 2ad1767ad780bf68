"""Per-step cognitive appraisals and the weighted stress index.

Every appraisal lives in ``[0, 1]``. Logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ValidationError

DEFAULT_STRESS_WEIGHTS = (0.25, 0.05, 0.1, 0.2, 0.35, 0.05)
NEUTRAL_ANTICIPATION = 0.5


class AppraisalVector(NamedTuple):
    mr: float
    certainty: float
    novelty: float
    gc: float
    cp: float
    anticipation: float

    def as_array(self, dtype=np.float64) -> np.ndarray:
        return np.asarray(self, dtype=dtype)


@dataclass(frozen=True)
class AppraisalConfig:
    w: int = 10
    n: int = 7
    epsilon: float = 1e-6
    stress_weights: tuple[float, ...] = DEFAULT_STRESS_WEIGHTS

    def __post_init__(self):
        _check_weights(self.stress_weights)


def _clamp(v: float) -> float:
    return min(1.0, max(0.0, float(v)))


def _check_weights(weights: Sequence[float]) -> None:
    if len(weights) != 6 or any(wi < 0 for wi in weights):
        raise ValidationError(f"stress weights must be 6 non-negative values, got {weights}")
    if abs(math.fsum(weights) - 1.0) > 1e-12:
        raise ValidationError(f"stress weights must sum to 1, got {math.fsum(weights)}")


def _check_simplex(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
        raise ValidationError(f"expected a probability vector, got {probs!r}")
    return p


def motivational_relevance(agent_pos, goal_pos, w: int) -> float:
    """Complement of the normalised Manhattan distance to the goal."""
    manhattan = abs(agent_pos[0] - goal_pos[0]) + abs(agent_pos[1] - goal_pos[1])
    return _clamp(1.0 - (manhattan - 1) / (2 * (w - 1)))


def certainty(action_probs, epsilon: float = 1e-6) -> float:
    p = _check_simplex(action_probs)
    # zero-probability entries contribute 0 * log(eps) = 0
    h = float(-np.sum(p * np.log(np.maximum(p, epsilon))))
    return _clamp(1.0 - h / (1.0 + h))


def novelty(action_probs, epsilon: float = 1e-6) -> float:
    """``KL(uniform || P) / (1 + KL)``."""
    p = np.maximum(_check_simplex(action_probs), epsilon)
    q = 1.0 / p.size
    d = float(np.sum(q * np.log(q / p)))
    return _clamp(d / (1.0 + d))


def goal_congruence(agent_pos, goal_pos, goal_visible: bool, n: int) -> float:
    if not goal_visible:
        return 0.0
    dist = math.hypot(agent_pos[0] - goal_pos[0], agent_pos[1] - goal_pos[1])
    return _clamp(1.0 - dist / math.sqrt(((n - 1) / 2) ** 2 + n**2))


def coping_potential(k_obst: int, n_obst: int, epsilon: float = 1e-6) -> float:
    if not 0 <= k_obst <= n_obst:
        raise ValidationError(f"visible obstacles {k_obst} outside [0, {n_obst}]")
    return _clamp(1.0 - k_obst / (n_obst + epsilon))


def anticipation(actual_reward: float, predicted_reward: float | None) -> float:
    """Complement of the absolute next-reward prediction error.

    ``predicted_reward=None`` marks the first step of an episode, which has no
    previous observation to predict from and gets the neutral value 0.5.
    """
    if predicted_reward is None:
        return NEUTRAL_ANTICIPATION
    return _clamp(1.0 - abs(actual_reward - predicted_reward))


def compute_all(
    agent_pos,
    goal_pos,
    goal_visible: bool,
    k_obst: int,
    n_obst: int,
    action_probs,
    actual_reward: float,
    predicted_reward: float | None,
    config: AppraisalConfig = AppraisalConfig(),
) -> AppraisalVector:
    return AppraisalVector(
        mr=motivational_relevance(agent_pos, goal_pos, config.w),
        certainty=certainty(action_probs, config.epsilon),
        novelty=novelty(action_probs, config.epsilon),
        gc=goal_congruence(agent_pos, goal_pos, goal_visible, config.n),
        cp=coping_potential(k_obst, n_obst, config.epsilon),
        anticipation=anticipation(actual_reward, predicted_reward),
    )


def stress(appraisals: Sequence[float], weights: Sequence[float] = DEFAULT_STRESS_WEIGHTS) -> float:
    """Weighted sum of appraisal complements."""
    _check_weights(weights)
    return float(sum((1.0 - z) * wi for z, wi in zip(appraisals, weights)))
