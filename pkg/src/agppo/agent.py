"""Glue between the grid world, the networks and the appraisals for one decision step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from . import grid_env
from .appraisal import AppraisalConfig, AppraisalVector, compute_all
from .nets import AgentNets


@dataclass
class PolicyOutput:
    features: torch.Tensor
    logits: torch.Tensor
    probs: np.ndarray  # float64, rows renormalised
    log_probs: np.ndarray
    nre_pred: np.ndarray  # prediction of the reward the chosen action will earn


def appraisal_config(cfg: grid_env.GridConfig) -> AppraisalConfig:
    return AppraisalConfig(w=cfg.width, n=cfg.view_size)


@torch.no_grad()
def forward_policy(nets: AgentNets, obs: np.ndarray) -> PolicyOutput:
    feats = nets.encode(obs)
    logits, probs_t = nets.actor_forward(feats)
    nre = nets.nre_forward(feats, probs_t)
    probs = probs_t.double().numpy()
    probs /= probs.sum(axis=1, keepdims=True)
    return PolicyOutput(
        features=feats,
        logits=logits,
        probs=probs,
        log_probs=torch.log_softmax(logits, dim=-1).double().numpy(),
        nre_pred=nre.double().numpy(),
    )


def sample_actions(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF sampling, one uniform draw per row."""
    u = rng.random(len(probs))
    cdf = np.cumsum(probs, axis=1)
    return np.minimum((u[:, None] > cdf).sum(axis=1), probs.shape[1] - 1)


def appraise(
    state: grid_env.GridState,
    probs: np.ndarray,
    last_reward: float,
    last_prediction: float | None,
    acfg: AppraisalConfig,
) -> AppraisalVector:
    """Appraisals of the state the agent is currently in."""
    visible, k_obst = grid_env.visible_entities(state)
    return compute_all(
        state.agent_pos,
        state.goal_pos,
        visible,
        k_obst,
        len(state.obstacle_positions),
        probs,
        last_reward,
        last_prediction,
        acfg,
    )
