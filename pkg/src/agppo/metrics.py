"""Behavioural metrics over evaluation traces, and their JSON/CSV/PGM exports."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .appraisal import DEFAULT_STRESS_WEIGHTS, stress
from .errors import SchemaError, ValidationError
from .grid_env import Action
from .traces import EpisodeTrace

REPORT_SCHEMA_VERSION = 1
TURNS = (Action.LEFT, Action.RIGHT)


def detect_aversions(trace: EpisodeTrace) -> int:
    """Count turnarounds: two identical turns immediately followed by a forward move."""
    a = trace.actions
    return sum(
        1
        for i in range(len(a) - 2)
        if a[i] in TURNS and a[i + 1] == a[i] and a[i + 2] == Action.FORWARD
    )


def detect_distractions(trace: EpisodeTrace) -> int:
    """Count visible -> not-visible goal transitions."""
    flags = [r.goal_visible for r in trace.records]
    return sum(1 for prev, cur in zip(flags, flags[1:]) if prev and not cur)


def score(traces: Sequence[EpisodeTrace], literal: bool = False) -> float:
    """``(sum of winning returns - n_losses) / n_plays``.

    ``literal=True`` multiplies the summed winning returns by the number of
    wins as well, which is the other way the formula can be read.
    """
    if not traces:
        raise ValidationError("score needs at least one trace")
    wins = [t.episode_return for t in traces if t.won]
    n_losses = len(traces) - len(wins)
    total = math.fsum(wins) * (len(wins) if literal else 1)
    return (total - n_losses) / len(traces)


def action_distribution(traces: Sequence[EpisodeTrace]) -> tuple[float, float, float]:
    """Fractions of (forward, left, right) over every action in every trace."""
    actions = np.concatenate([np.asarray(t.actions, dtype=np.int64) for t in traces]) if traces else np.zeros(0)
    if actions.size == 0:
        raise ValidationError("no actions recorded")
    counts = np.bincount(actions, minlength=3)
    return (
        counts[Action.FORWARD] / actions.size,
        counts[Action.LEFT] / actions.size,
        counts[Action.RIGHT] / actions.size,
    )


def roi_heatmap(traces: Sequence[EpisodeTrace], w: int) -> np.ndarray:
    """Visit counts indexed ``[y, x]``; one count per step record."""
    roi = np.zeros((w, w), dtype=np.int64)
    for t in traces:
        for r in t.records:
            x, y = r.agent_pos
            if not (0 <= x < w and 0 <= y < w):
                raise ValidationError(f"position {r.agent_pos} outside a {w}x{w} grid")
            roi[y, x] += 1
    return roi


@dataclass
class BehaviorReport:
    wins_over_plays: float
    average_return: float
    average_stress: float
    aversions: int
    distractions: int
    action_forward: float
    action_left: float
    action_right: float
    score: float
    roi: list[list[int]]
    n_plays: int = 0
    name: str = ""
    env: str = ""
    schema_version: int = REPORT_SCHEMA_VERSION


# report column order, then the score
TABLE_COLUMNS = [
    "wins_over_plays",
    "average_return",
    "average_stress",
    "aversions",
    "action_forward",
    "action_left",
    "action_right",
    "distractions",
    "score",
]


def aggregate_report(
    traces: Sequence[EpisodeTrace],
    w: int,
    weights: Sequence[float] = DEFAULT_STRESS_WEIGHTS,
    name: str = "",
    env: str = "",
    literal_score: bool = False,
) -> BehaviorReport:
    if not traces:
        raise ValidationError("report needs at least one trace")
    win_returns = [t.episode_return for t in traces if t.won]
    stresses = [stress(r.appraisals, weights) for t in traces for r in t.records]
    fwd, left, right = action_distribution(traces)
    return BehaviorReport(
        wins_over_plays=len(win_returns) / len(traces),
        average_return=float(np.mean(win_returns)) if win_returns else math.nan,
        average_stress=float(np.mean(stresses)),
        aversions=sum(detect_aversions(t) for t in traces),
        distractions=sum(detect_distractions(t) for t in traces),
        action_forward=float(fwd),
        action_left=float(left),
        action_right=float(right),
        score=score(traces, literal=literal_score),
        roi=roi_heatmap(traces, w).tolist(),
        n_plays=len(traces),
        name=name,
        env=env,
    )


def _json_safe(v):
    return None if isinstance(v, float) and math.isnan(v) else v


def write_report_json(path, report: BehaviorReport) -> None:
    data = {k: _json_safe(v) for k, v in asdict(report).items()}
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


def read_report_json(path) -> BehaviorReport:
    data = json.loads(Path(path).read_text())
    if data.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise SchemaError(f"{path}: schema_version {data.get('schema_version')!r} != {REPORT_SCHEMA_VERSION}")
    try:
        if data["average_return"] is None:
            data["average_return"] = math.nan
        return BehaviorReport(**data)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def write_report_csv(path, report: BehaviorReport) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_COLUMNS)
        writer.writerow([repr(getattr(report, c)) for c in TABLE_COLUMNS])


def write_roi_csv(path, roi: np.ndarray) -> None:
    np.savetxt(path, np.asarray(roi), fmt="%d", delimiter=",")


def write_roi_pgm(path, roi: np.ndarray) -> None:
    """Binary 8-bit greyscale PGM (P5), scaled so the most-visited cell is 255."""
    roi = np.asarray(roi, dtype=np.float64)
    peak = roi.max() if roi.size else 0.0
    pixels = np.zeros(roi.shape, np.uint8) if peak == 0 else np.round(roi / peak * 255).astype(np.uint8)
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, dims, maxval, body = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValidationError(f"{path}: not an 8-bit P5 file")
    w, h = (int(v) for v in dims.split())
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)
