"""
A walk through the grid world
=============================

Reset a test-environment layout, look at the agent's egocentric view, and
take a few steps by hand.
"""

import numpy as np

from agppo import grid_env
from agppo.grid_env import Action, CellKind

# the GW-A test preset: 10x10, five wandering obstacles, a goal that moves
cfg = grid_env.preset("gw-a-test")
state, obs = grid_env.reset(cfg, seed=2)
print("agent", state.agent_pos, state.agent_dir.name, "goal", state.goal_pos)
print("obstacles", state.obstacle_positions)

# channel 0 holds the cell kind scaled to [0, 1]; the agent sits on the
# bottom row, middle column, looking "up" the array
kinds = np.rint(obs[..., 0] * 4).astype(int)
glyph = {k.value: c for k, c in zip(CellKind, ".#og@")}
print("\n".join("".join(glyph[v] for v in row) for row in kinds))

# channel 1 flags dynamic entities: obstacles and, here, the moving goal
print("dynamic cells in view:", int(obs[..., 1].sum()))

# a short scripted walk; every step reports reward and termination
for action in [Action.FORWARD, Action.LEFT, Action.FORWARD, Action.FORWARD]:
    out = grid_env.step(state, action)
    print(f"{action.name:8s} -> {state.agent_pos} {state.agent_dir.name:2s} "
          f"reward={out.reward:+.2f} goal_visible={out.goal_visible} obstacles_seen={out.k_obst}")
    if out.terminated:
        break

# same seed, same world
print("reset is deterministic:", grid_env.reset(cfg, seed=2)[0] == grid_env.reset(cfg, seed=2)[0])

# winning pays more the sooner it happens
for steps in (10, 50, 100):
    print(f"win after {steps:3d} steps pays {grid_env.terminal_reward(steps, cfg.max_steps, won=True):.2f}")
