"""
Appraisals, stress and reshaped rewards
=======================================

The six appraisals turn the agent's situation into numbers in [0, 1]. The
reshaping variants then subtract appraisal-dependent penalties from every
reward the agent sees during training.
"""

from agppo import appraisal as ap
from agppo.shaping import CONFIGS, reshape

# a confident policy next to a visible goal, two obstacles in view
near = ap.compute_all(
    agent_pos=(4, 4), goal_pos=(4, 3), goal_visible=True, k_obst=2, n_obst=5,
    action_probs=(0.05, 0.05, 0.9), actual_reward=0.0, predicted_reward=0.1,
)
# an undecided policy, goal far away and out of sight, nothing else around
lost = ap.compute_all(
    agent_pos=(0, 0), goal_pos=(9, 9), goal_visible=False, k_obst=0, n_obst=5,
    action_probs=(1 / 3, 1 / 3, 1 / 3), actual_reward=0.0, predicted_reward=None,
)

for label, z in [("near", near), ("lost", lost)]:
    print(label, {k: round(v, 3) for k, v in z._asdict().items()}, "stress", round(ap.stress(z), 3))

# the same zero reward after each reshaping variant
print(f"\n{'config':10s} {'near':>8s} {'lost':>8s}")
for name, cfg in CONFIGS.items():
    print(f"{name:10s} {reshape(0.0, near, cfg):8.3f} {reshape(0.0, lost, cfg):8.3f}")

# rsv6 pays the agent to be far from the goal and near obstacles, which is
# why agents trained with it stop trying to win
