"""
Train a small agent and read its report
=======================================

Trains the baseline on the 5x5 task for a few thousand steps, evaluates it
greedily and prints the behaviour report, then checks that every recorded
episode replays exactly. Takes well under a minute.
"""

import tempfile
from pathlib import Path

from agppo import grid_env
from agppo.evaluate import evaluate
from agppo.metrics import aggregate_report, write_roi_pgm
from agppo.traces import replay
from agppo.trainer import TrainConfig, train

env = grid_env.preset("tiny-5x5")
cfg = TrainConfig(
    total_timesteps=8192, rollout_length=512, n_envs=8, n_minibatches=4, n_epochs=4,
    env=env, conv_channels=(16, 32, 64), hidden=(64, 64), learning_rate=1e-3, seed=1,
)
nets, history = train(cfg, callback=lambda row: print(
    f"iter {row.iteration:2d} win {row.win_rate:.2f} entropy {row.L_E:.3f}"))

traces = evaluate(nets, env, range(1000, 1100))
report = aggregate_report(traces, env.width, name="baseline", env="tiny-5x5")
print(f"\nwins {report.wins_over_plays:.2f}  score {report.score:.3f}  "
      f"forward/left/right {report.action_forward:.2f}/{report.action_left:.2f}/{report.action_right:.2f}")

# visit counts, row = y
for row in report.roi:
    print(" ".join(f"{n:4d}" for n in row))

print("replay mismatches:", sum(bool(replay(t, env)) for t in traces))

out = Path(tempfile.mkdtemp()) / "roi.pgm"
write_roi_pgm(out, report.roi)
print("heatmap written to", out)
