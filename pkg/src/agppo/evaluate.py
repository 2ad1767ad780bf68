"""Roll a trained agent through evaluation episodes and record traces."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch

from . import grid_env
from .agent import appraisal_config, appraise, forward_policy, sample_actions
from .nets import AgentNets
from .shaping import ShapingConfig, get_config, reshape
from .traces import EpisodeTrace, StepRecord


def evaluate(
    nets: AgentNets,
    config: grid_env.GridConfig,
    seeds: Sequence[int],
    shaping: ShapingConfig | str = "baseline",
    stochastic: bool = False,
    rng: np.random.Generator | None = None,
) -> list[EpisodeTrace]:
    """One episode per seed, stepped in lockstep; greedy (argmax) actions unless ``stochastic``.

    Traces come back in seed order, independent of when each episode ended.
    """
    torch.set_num_threads(1)
    if isinstance(shaping, str):
        shaping = get_config(shaping)
    if stochastic and rng is None:
        rng = np.random.default_rng(0)
    acfg = appraisal_config(config)
    states = [grid_env.reset(config, int(s))[0] for s in seeds]
    obs = [grid_env.render_view(s) for s in states]
    records: list[list[StepRecord]] = [[] for _ in seeds]
    last_reward = [0.0] * len(seeds)
    last_pred: list[float | None] = [None] * len(seeds)
    active = list(range(len(seeds)))

    while active:
        out = forward_policy(nets, np.stack([obs[i] for i in active]))
        if stochastic:
            actions = sample_actions(out.probs, rng)
        else:
            actions = out.probs.argmax(axis=1)
        still = []
        for j, i in enumerate(active):
            st = states[i]
            z = appraise(st, out.probs[j], last_reward[i], last_pred[i], acfg)
            visible, _ = grid_env.visible_entities(st)
            pos, direction, goal = st.agent_pos, int(st.agent_dir), st.goal_pos
            if st.terminated:
                records[i].append(StepRecord(len(records[i]), pos, direction, goal, None, visible, z))
                continue
            a = int(actions[j])
            o = grid_env.step(st, a)
            records[i].append(
                StepRecord(len(records[i]), pos, direction, goal, a, visible, z, o.reward, reshape(o.reward, z, shaping))
            )
            obs[i] = o.observation
            last_reward[i] = o.reward
            last_pred[i] = float(out.nre_pred[j])
            still.append(i)
        active = still
    return [
        EpisodeTrace(recs, seed=int(seed), won=st.won, meta={"shaping": shaping.name})
        for recs, seed, st in zip(records, seeds, states)
    ]
