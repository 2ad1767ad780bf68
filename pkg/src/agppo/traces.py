"""Episode traces: per-step records, CSV persistence and replay through the environment.

A trace of an episode that took ``k`` actions holds ``k + 1`` records. Record
``i`` describes the state before action ``i``; ``reward`` is the raw reward
that action earned and ``reward_shaped`` the same reward after the
configuration's appraisal penalty. The final record is the terminal state; it
carries no action and zero reward.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from . import grid_env
from .appraisal import AppraisalVector
from .errors import ValidationError

TRACE_HEADER = [
    "step",
    "action",
    "agent_x",
    "agent_y",
    "agent_dir",
    "goal_x",
    "goal_y",
    "goal_visible",
    "mr",
    "certainty",
    "novelty",
    "gc",
    "cp",
    "anticipation",
    "reward",
    "reward_shaped",
    "terminated",
]


@dataclass(frozen=True)
class StepRecord:
    step: int
    agent_pos: tuple[int, int]
    agent_dir: int
    goal_pos: tuple[int, int]
    action: int | None
    goal_visible: bool
    appraisals: AppraisalVector
    reward: float = 0.0
    reward_shaped: float = 0.0

    @property
    def terminal(self) -> bool:
        return self.action is None


@dataclass
class EpisodeTrace:
    records: list[StepRecord]
    seed: int | None = None
    won: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.records:
            raise ValidationError("a trace needs at least one record")
        if [r.step for r in self.records] != list(range(len(self.records))):
            raise ValidationError("trace step indices must run contiguously from 0")
        if sum(r.terminal for r in self.records) != 1 or not self.records[-1].terminal:
            raise ValidationError("a trace must end with exactly one terminal record")

    @property
    def steps(self) -> int:
        return len(self.records) - 1

    @property
    def actions(self) -> list[int]:
        return [r.action for r in self.records[:-1]]

    @property
    def episode_return(self) -> float:
        return sum(r.reward for r in self.records)


def write_trace_csv(path, trace: EpisodeTrace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for r in trace.records:
            writer.writerow(
                [
                    r.step,
                    "" if r.action is None else r.action,
                    r.agent_pos[0],
                    r.agent_pos[1],
                    r.agent_dir,
                    r.goal_pos[0],
                    r.goal_pos[1],
                    int(r.goal_visible),
                    *(repr(float(v)) for v in r.appraisals),
                    repr(float(r.reward)),
                    repr(float(r.reward_shaped)),
                    int(r.terminal),
                ]
            )


def read_trace_csv(path, seed: int | None = None) -> EpisodeTrace:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise ValidationError(f"{path}: unexpected trace header {header}")
        records = []
        for row in reader:
            rec = dict(zip(TRACE_HEADER, row))
            records.append(
                StepRecord(
                    step=int(rec["step"]),
                    agent_pos=(int(rec["agent_x"]), int(rec["agent_y"])),
                    agent_dir=int(rec["agent_dir"]),
                    goal_pos=(int(rec["goal_x"]), int(rec["goal_y"])),
                    action=None if rec["action"] == "" else int(rec["action"]),
                    goal_visible=bool(int(rec["goal_visible"])),
                    appraisals=AppraisalVector(*(float(rec[k]) for k in TRACE_HEADER[8:14])),
                    reward=float(rec["reward"]),
                    reward_shaped=float(rec["reward_shaped"]),
                )
            )
    trace = EpisodeTrace(records, seed=seed)
    trace.won = trace.steps > 0 and records[-2].reward > 0
    return trace


def replay(trace: EpisodeTrace, config: grid_env.GridConfig, seed: int | None = None) -> list[str]:
    """Re-run the trace's actions from the episode seed; returns mismatch descriptions (empty on success)."""
    seed = trace.seed if seed is None else seed
    if seed is None:
        raise ValidationError("replay needs the episode seed")
    state, _ = grid_env.reset(config, seed)
    problems = []

    def check(i, rec):
        got = (state.agent_pos, int(state.agent_dir), state.goal_pos)
        want = (tuple(rec.agent_pos), rec.agent_dir, tuple(rec.goal_pos))
        if got != want:
            problems.append(f"record {i}: state {got} != recorded {want}")

    for i, rec in enumerate(trace.records[:-1]):
        check(i, rec)
        out = grid_env.step(state, rec.action)
        if out.reward != rec.reward:
            problems.append(f"record {i}: reward {out.reward!r} != recorded {rec.reward!r}")
        if out.terminated != trace.records[i + 1].terminal:
            problems.append(f"record {i}: terminated={out.terminated} disagrees with trace")
            break
    else:
        check(len(trace.records) - 1, trace.records[-1])
        if state.won != trace.won:
            problems.append(f"won={state.won} != recorded {trace.won}")
    return problems
