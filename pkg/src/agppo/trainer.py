"""Appraisal-guided PPO: rollout collection, GAE on reshaped rewards, clipped updates.

Each iteration collects ``rollout_length`` transitions across ``n_envs``
independent environments (merged in environment-index order), then runs
``n_epochs`` passes of ``n_minibatches`` Adam updates. Advantages are
recomputed with the current critic before every epoch.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import torch

from . import grid_env
from .agent import appraisal_config, appraise, forward_policy, sample_actions
from .appraisal import AppraisalVector, stress
from .errors import ConfigError, TrainingError
from .nets import AgentNets, NetConfig, init_params, save_checkpoint
from .shaping import ShapingConfig, critic_aux, get_config, reshape

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    total_timesteps: int = 1_000_000
    rollout_length: int = 2048
    n_envs: int = 8
    n_minibatches: int = 8
    n_epochs: int = 4
    clip_coef: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    learning_rate: float = 2.5e-4
    adam_eps: float = 1e-5
    coef_policy: float = 1.0
    coef_entropy: float = 0.01
    coef_value: float = 0.5
    coef_nre: float = 1.0
    max_grad_norm: float = 0.5
    normalize_advantages: bool = True
    seed: int = 1
    shaping: str = "baseline"
    env: grid_env.GridConfig = field(default_factory=lambda: grid_env.PRESETS["gw-a-train"])
    conv_channels: tuple[int, int, int] = (32, 64, 256)
    hidden: tuple[int, int] = (256, 64)
    checkpoint_every: int = 0

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ConfigError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0 <= self.gae_lambda <= 1:
            raise ConfigError(f"gae_lambda must be in [0, 1], got {self.gae_lambda}")
        if self.clip_coef <= 0:
            raise ConfigError("clip_coef must be positive")
        if self.rollout_length <= 0 or self.rollout_length % self.n_minibatches:
            raise ConfigError("rollout_length must be a positive multiple of n_minibatches")
        if self.rollout_length % self.n_envs:
            raise ConfigError("rollout_length must be a multiple of n_envs")
        if self.total_timesteps < self.rollout_length:
            raise ConfigError("total_timesteps must cover at least one rollout")
        get_config(self.shaping)

    @property
    def n_iterations(self) -> int:
        return self.total_timesteps // self.rollout_length

    @property
    def shaping_config(self) -> ShapingConfig:
        return get_config(self.shaping)

    @property
    def net_config(self) -> NetConfig:
        return NetConfig(
            view_size=self.env.view_size,
            conv_channels=tuple(self.conv_channels),
            hidden=tuple(self.hidden),
            aux_width=self.shaping_config.aux_width,
        )

    def paper_literal(self) -> "TrainConfig":
        """Unit weights on every loss term."""
        return dataclasses.replace(self, coef_policy=1.0, coef_entropy=1.0, coef_value=1.0, coef_nre=1.0)

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class RolloutBuffer:
    """Transitions stored time-major, shape ``(steps_per_env, n_envs, ...)``."""

    obs: np.ndarray
    actions: np.ndarray
    log_probs: np.ndarray
    probs: np.ndarray
    rewards: np.ndarray
    reshaped: np.ndarray
    values: np.ndarray
    appraisals: np.ndarray
    dones: np.ndarray
    aux: np.ndarray
    last_obs: np.ndarray
    last_aux: np.ndarray
    last_values: np.ndarray
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None
    episode_returns: list[float] = field(default_factory=list)
    episode_wins: list[bool] = field(default_factory=list)

    def __len__(self) -> int:
        return self.actions.size

    def flat(self, name: str) -> np.ndarray:
        arr = getattr(self, name)
        return arr.reshape(arr.shape[0] * arr.shape[1], *arr.shape[2:])


def compute_gae(rewards, values, dones, last_values, gamma: float, lam: float):
    """Generalised advantage estimates and return targets.

    Arrays are time-major; any trailing axes (parallel environments) broadcast.
    ``dones[t]`` marks that transition ``t`` ended its episode, cutting the
    bootstrap from ``t + 1``.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    advantages = np.zeros_like(rewards)
    next_value = np.asarray(last_values, dtype=np.float64)
    running = np.zeros_like(rewards[0])
    for t in reversed(range(len(rewards))):
        live = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_value * live - values[t]
        running = delta + gamma * lam * live * running
        advantages[t] = running
        next_value = values[t]
    return advantages, advantages + values


def clipped_surrogate(ratio, advantages, clip_coef: float):
    """Per-sample PPO objective ``min(r A, clip(r, 1-e, 1+e) A)`` (torch or numpy)."""
    if torch.is_tensor(ratio):
        clipped = torch.clamp(ratio, 1 - clip_coef, 1 + clip_coef)
        return torch.minimum(ratio * advantages, clipped * advantages)
    clipped = np.clip(ratio, 1 - clip_coef, 1 + clip_coef)
    return np.minimum(ratio * advantages, clipped * advantages)


def policy_loss(new_log_probs, old_log_probs, advantages, clip_coef: float):
    ratio = torch.exp(new_log_probs - old_log_probs)
    return -clipped_surrogate(ratio, advantages, clip_coef).mean()


def value_loss(values, targets):
    return ((values - targets) ** 2).mean()


@dataclass
class Minibatch:
    obs: torch.Tensor
    actions: torch.Tensor
    old_log_probs: torch.Tensor
    behaviour_probs: torch.Tensor
    advantages: torch.Tensor
    returns: torch.Tensor
    rewards: torch.Tensor
    aux: torch.Tensor


@dataclass
class LossBreakdown:
    total: torch.Tensor
    policy: float
    value: float
    entropy: float
    nre: float


def total_loss(nets: AgentNets, batch: Minibatch, cfg: TrainConfig, normalize: bool | None = None) -> LossBreakdown:
    """``c_P L_P - c_E L_E + c_V L_V + c_NRE L_NRE`` on one minibatch."""
    normalize = cfg.normalize_advantages if normalize is None else normalize
    feats = nets.encode(batch.obs)
    logits, probs = nets.actor_forward(feats)
    log_probs = torch.log_softmax(logits, dim=-1)
    new_lp = log_probs.gather(1, batch.actions.long().unsqueeze(1)).squeeze(1)
    adv = batch.advantages
    if normalize and len(adv) > 1:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    l_p = policy_loss(new_lp, batch.old_log_probs, adv, cfg.clip_coef)
    l_e = -(probs * log_probs).sum(dim=1).mean()
    l_v = value_loss(nets.critic_forward(feats, batch.aux), batch.returns)
    l_nre = value_loss(nets.nre_forward(feats, batch.behaviour_probs), batch.rewards)
    total = cfg.coef_policy * l_p - cfg.coef_entropy * l_e + cfg.coef_value * l_v + cfg.coef_nre * l_nre
    return LossBreakdown(total, l_p.item(), l_v.item(), l_e.item(), l_nre.item())


class _EnvSlot:
    """One environment instance plus the per-episode context the appraisals need."""

    def __init__(self, cfg: grid_env.GridConfig, seeds: np.random.Generator):
        self.cfg = cfg
        self.seeds = seeds
        self.reset()

    def reset(self):
        self.state, self.obs = grid_env.reset(self.cfg, int(self.seeds.integers(2**63)))
        self.last_reward = 0.0
        self.last_prediction: float | None = None


class RolloutCollector:
    def __init__(self, cfg: TrainConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.shaping = cfg.shaping_config
        self.acfg = appraisal_config(cfg.env)
        self.rng = rng
        seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.n_envs)
        self.slots = [_EnvSlot(cfg.env, np.random.default_rng(s)) for s in seqs]

    def _observe(self, nets: AgentNets):
        obs = np.stack([s.obs for s in self.slots])
        out = forward_policy(nets, obs)
        z = [
            appraise(s.state, out.probs[i], s.last_reward, s.last_prediction, self.acfg)
            for i, s in enumerate(self.slots)
        ]
        aux = np.stack([critic_aux(self.shaping, zi, self.rng) for zi in z])
        with torch.no_grad():
            values = nets.critic_forward(out.features, aux).double().numpy()
        return obs, out, z, aux, values

    def collect(self, nets: AgentNets) -> RolloutBuffer:
        n = self.cfg.n_envs
        steps = self.cfg.rollout_length // n
        view = self.cfg.env.view_size
        aux_w = self.shaping.aux_width
        buf = RolloutBuffer(
            obs=np.zeros((steps, n, view, view, 3), np.float32),
            actions=np.zeros((steps, n), np.int64),
            log_probs=np.zeros((steps, n)),
            probs=np.zeros((steps, n, 3)),
            rewards=np.zeros((steps, n)),
            reshaped=np.zeros((steps, n)),
            values=np.zeros((steps, n)),
            appraisals=np.zeros((steps, n, 6)),
            dones=np.zeros((steps, n)),
            aux=np.zeros((steps, n, aux_w), np.float32),
            last_obs=np.zeros((n, view, view, 3), np.float32),
            last_aux=np.zeros((n, aux_w), np.float32),
            last_values=np.zeros(n),
        )
        for t in range(steps):
            obs, out, z, aux, values = self._observe(nets)
            actions = sample_actions(out.probs, self.rng)
            buf.obs[t], buf.aux[t], buf.values[t], buf.probs[t] = obs, aux, values, out.probs
            buf.actions[t] = actions
            buf.log_probs[t] = out.log_probs[np.arange(n), actions]
            for i, slot in enumerate(self.slots):
                o = grid_env.step(slot.state, int(actions[i]))
                buf.rewards[t, i] = o.reward
                buf.reshaped[t, i] = reshape(o.reward, z[i], self.shaping)
                buf.appraisals[t, i] = z[i]
                buf.dones[t, i] = o.terminated
                if o.terminated:
                    buf.episode_returns.append(o.reward)
                    buf.episode_wins.append(o.won)
                    slot.reset()
                else:
                    slot.obs = o.observation
                    slot.last_reward = o.reward
                    slot.last_prediction = float(out.nre_pred[i])
        obs, _, _, aux, values = self._observe(nets)
        buf.last_obs, buf.last_aux, buf.last_values = obs, aux, values
        return buf


@torch.no_grad()
def _recompute_values(nets: AgentNets, buf: RolloutBuffer, chunk: int = 1024):
    obs, aux = buf.flat("obs"), buf.flat("aux")
    vals = []
    for i in range(0, len(obs), chunk):
        vals.append(nets.critic_forward(nets.encode(obs[i : i + chunk]), aux[i : i + chunk]).double().numpy())
    last = nets.critic_forward(nets.encode(buf.last_obs), buf.last_aux).double().numpy()
    return np.concatenate(vals).reshape(buf.values.shape), last


@dataclass
class IterationLog:
    iteration: int
    env_steps: int
    mean_return: float
    win_rate: float
    L_P: float
    L_V: float
    L_E: float
    L_NRE: float
    mean_stress: float
    lr: float


LOG_FIELDS = [f.name for f in dataclasses.fields(IterationLog)]


def write_log_csv(path, rows: list[IterationLog]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_FIELDS)
        for row in rows:
            writer.writerow([repr(v) for v in dataclasses.astuple(row)])


def learning_rate(cfg: TrainConfig, iteration: int) -> float:
    """Linear decay from ``cfg.learning_rate`` towards 0 over the run (iterations count from 1)."""
    return cfg.learning_rate * (1.0 - (iteration - 1) / cfg.n_iterations)


def _minibatch(buf: RolloutBuffer, idx: np.ndarray, dtype) -> Minibatch:
    def t(name, src=None):
        arr = buf.flat(name) if src is None else src
        return torch.as_tensor(arr[idx], dtype=dtype)

    return Minibatch(
        obs=t("obs"),
        actions=torch.as_tensor(buf.flat("actions")[idx]),
        old_log_probs=t("log_probs"),
        behaviour_probs=t("probs"),
        advantages=t("advantages", buf.advantages.reshape(-1)),
        returns=t("returns", buf.returns.reshape(-1)),
        rewards=t("rewards"),
        aux=t("aux"),
    )


def train(
    cfg: TrainConfig,
    out_dir: str | Path | None = None,
    callback: Callable[[IterationLog], None] | None = None,
) -> tuple[AgentNets, list[IterationLog]]:
    """Run the full training loop; writes ``train_log.csv`` and ``final.ckpt`` when ``out_dir`` is set."""
    torch.set_num_threads(1)
    out_dir = Path(out_dir) if out_dir is not None else None
    nets = init_params(cfg.seed, cfg.net_config)
    optimizer = torch.optim.Adam(nets.parameters(), lr=cfg.learning_rate, eps=cfg.adam_eps)
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(cfg.n_envs + 1)[-1])
    collector = RolloutCollector(cfg, rng)
    weights = collector.acfg.stress_weights
    mb_size = cfg.rollout_length // cfg.n_minibatches
    history: list[IterationLog] = []

    for it in range(1, cfg.n_iterations + 1):
        lr = learning_rate(cfg, it)
        for group in optimizer.param_groups:
            group["lr"] = lr
        buf = collector.collect(nets)
        sums = np.zeros(4)
        n_updates = 0
        for _ in range(cfg.n_epochs):
            values, last = _recompute_values(nets, buf)
            buf.advantages, buf.returns = compute_gae(
                buf.reshaped, values, buf.dones, last, cfg.gamma, cfg.gae_lambda
            )
            perm = rng.permutation(len(buf))
            for start in range(0, len(buf), mb_size):
                batch = _minibatch(buf, perm[start : start + mb_size], nets.dtype)
                losses = total_loss(nets, batch, cfg)
                if not torch.isfinite(losses.total):
                    if out_dir is not None:
                        out_dir.mkdir(parents=True, exist_ok=True)
                        save_checkpoint(out_dir / "diverged.ckpt", nets)
                    raise TrainingError(
                        f"non-finite loss at iteration {it}: policy={losses.policy} value={losses.value} "
                        f"entropy={losses.entropy} nre={losses.nre}"
                    )
                optimizer.zero_grad()
                losses.total.backward()
                torch.nn.utils.clip_grad_norm_(nets.parameters(), cfg.max_grad_norm)
                optimizer.step()
                sums += (losses.policy, losses.value, losses.entropy, losses.nre)
                n_updates += 1
        sums /= n_updates
        mean_stress = float(np.mean([stress(z, weights) for z in buf.flat("appraisals")]))
        row = IterationLog(
            iteration=it,
            env_steps=it * cfg.rollout_length,
            mean_return=float(np.mean(buf.episode_returns)) if buf.episode_returns else math.nan,
            win_rate=float(np.mean(buf.episode_wins)) if buf.episode_wins else math.nan,
            L_P=float(sums[0]),
            L_V=float(sums[1]),
            L_E=float(sums[2]),
            L_NRE=float(sums[3]),
            mean_stress=mean_stress,
            lr=lr,
        )
        history.append(row)
        log.info("iter %d/%d return=%.3f win=%.3f", it, cfg.n_iterations, row.mean_return, row.win_rate)
        if callback is not None:
            callback(row)
        if out_dir is not None and cfg.checkpoint_every and it % cfg.checkpoint_every == 0:
            out_dir.mkdir(parents=True, exist_ok=True)
            save_checkpoint(out_dir / f"iter_{it:05d}.ckpt", nets)

    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_log_csv(out_dir / "train_log.csv", history)
        save_checkpoint(out_dir / "final.ckpt", nets)
    return nets, history
