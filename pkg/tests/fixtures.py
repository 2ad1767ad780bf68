"""Hand-built traces shared by the metric tests and the acceptance suite."""

from agppo.appraisal import AppraisalVector
from agppo.grid_env import Action
from agppo.traces import EpisodeTrace, StepRecord

L, R, F = Action.LEFT, Action.RIGHT, Action.FORWARD


def build_trace(actions, positions, visible, z, final_reward, seed=None):
    """Records with a constant appraisal vector; the last action earns ``final_reward``."""
    assert len(positions) == len(visible) == len(actions) + 1
    records = []
    for i, (pos, vis) in enumerate(zip(positions, visible)):
        last_action = i == len(actions) - 1
        records.append(
            StepRecord(
                step=i,
                agent_pos=pos,
                agent_dir=0,
                goal_pos=(9, 9),
                action=None if i == len(actions) else int(actions[i]),
                goal_visible=vis,
                appraisals=AppraisalVector(*z),
                reward=final_reward if last_action else 0.0,
                reward_shaped=final_reward if last_action else 0.0,
            )
        )
    return EpisodeTrace(records, seed=seed, won=final_reward > 0)


def three_episode_fixture():
    return [
        build_trace(
            [L, L, F, F],
            [(0, 0), (0, 0), (0, 0), (0, 1), (0, 2)],
            [False, True, True, False, True],
            (1, 1, 1, 1, 1, 1),
            0.82,
        ),
        build_trace(
            [R, R, F],
            [(5, 5), (5, 5), (5, 5), (5, 4)],
            [True, False, True, False],
            (0, 0, 0, 0, 0, 0),
            -1.0,
        ),
        build_trace(
            [F, F],
            [(2, 2), (2, 3), (2, 4)],
            [False, False, True],
            (0, 1, 1, 1, 1, 1),
            0.91,
        ),
    ]


# computed by hand, cell by cell, independently of the metric code
FIXTURE_EXPECTED = {
    "n_plays": 3,
    "wins_over_plays": 2 / 3,
    "average_return": (0.82 + 0.91) / 2,
    # 5 records at stress 0, 4 at 1, 3 at 0.25 (only MR is zero)
    "average_stress": 4.75 / 12,
    "aversions": 2,
    "distractions": 3,
    "action_forward": 5 / 9,
    "action_left": 2 / 9,
    "action_right": 2 / 9,
    "score": (0.82 + 0.91 - 1) / 3,
    "roi_total": 12,
    "roi_cells": {(0, 0): 3, (0, 1): 1, (0, 2): 1, (5, 5): 3, (5, 4): 1, (2, 2): 1, (2, 3): 1, (2, 4): 1},
}
