"""Seedable dynamic grid world with an egocentric view and sparse terminal rewards.

Coordinates are ``(x, y)`` with ``x`` the column and ``y`` the row; ``y`` grows
downwards, so facing North means moving towards ``y - 1``. Everything outside
the ``width x width`` board reads as Wall.

The API is functional: :func:`reset` builds a :class:`GridState`, and
:func:`step` advances it in place and returns a :class:`StepOutcome`.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ConfigError, UsageError

Pos = tuple[int, int]


class CellKind(enum.IntEnum):
    EMPTY = 0
    WALL = 1
    OBSTACLE = 2
    GOAL = 3
    AGENT = 4


class Direction(enum.IntEnum):
    N = 0
    E = 1
    S = 2
    W = 3


class Action(enum.IntEnum):
    LEFT = 0
    RIGHT = 1
    FORWARD = 2


N_ACTIONS = len(Action)

# forward and right unit vectors per direction, as (dx, dy)
_FORWARD = {Direction.N: (0, -1), Direction.E: (1, 0), Direction.S: (0, 1), Direction.W: (-1, 0)}
_RIGHT = {Direction.N: (1, 0), Direction.E: (0, 1), Direction.S: (-1, 0), Direction.W: (0, -1)}
_NEIGHBOURS = ((0, -1), (1, 0), (0, 1), (-1, 0))


@dataclass(frozen=True)
class GridConfig:
    """Static description of a grid-world variant."""

    width: int = 10
    view_size: int = 7
    n_obstacles: int = 3
    max_steps: int = 100
    dynamic_obstacles: bool = True
    moving_goal: bool = False
    goal_move_period: int = 4
    dynamic_walls: bool = False
    wall_shift_period: int = 50
    n_wall_segments: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.width < 2:
            raise ConfigError(f"width must be >= 2, got {self.width}")
        if self.view_size < 1 or self.view_size % 2 == 0:
            raise ConfigError(f"view_size must be odd and positive, got {self.view_size}")
        if self.view_size > self.width:
            raise ConfigError(f"view_size {self.view_size} exceeds width {self.width}")
        if not 0 <= self.n_obstacles < self.width * self.width - 2:
            raise ConfigError(
                f"n_obstacles must be in [0, {self.width * self.width - 2}), got {self.n_obstacles}"
            )
        if self.max_steps <= 0:
            raise ConfigError(f"max_steps must be positive, got {self.max_steps}")
        if self.goal_move_period <= 0 or self.wall_shift_period <= 0:
            raise ConfigError("goal_move_period and wall_shift_period must be positive")
        if self.n_wall_segments < 0:
            raise ConfigError("n_wall_segments must be non-negative")
        if self.dynamic_walls and self.n_wall_segments == 0:
            raise ConfigError("dynamic_walls requires n_wall_segments > 0")

    def replace(self, **changes) -> "GridConfig":
        return dataclasses.replace(self, **changes)


PRESETS: dict[str, GridConfig] = {
    "gw-a-train": GridConfig(n_obstacles=3, max_steps=100, dynamic_obstacles=True, moving_goal=False),
    "gw-a-test": GridConfig(n_obstacles=5, max_steps=100, dynamic_obstacles=True, moving_goal=True),
    "gw-b": GridConfig(
        n_obstacles=5,
        max_steps=400,
        dynamic_obstacles=True,
        moving_goal=True,
        dynamic_walls=True,
        n_wall_segments=4,
    ),
    "tiny-5x5": GridConfig(
        width=5, view_size=5, n_obstacles=0, max_steps=20, dynamic_obstacles=False, moving_goal=False
    ),
}


def preset(name: str) -> GridConfig:
    """Look up a named environment preset (case-insensitive)."""
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown environment preset {name!r}; valid: {', '.join(PRESETS)}") from None


@dataclass(eq=False)
class GridState:
    config: GridConfig
    agent_pos: Pos
    agent_dir: Direction
    goal_pos: Pos
    obstacle_positions: list[Pos]
    wall_cells: frozenset[Pos]
    rng: np.random.Generator
    step_count: int = 0
    terminated: bool = False
    won: bool = False

    def __eq__(self, other):
        if not isinstance(other, GridState):
            return NotImplemented
        return self._key() == other._key()

    def _key(self):
        return (
            self.config,
            self.agent_pos,
            int(self.agent_dir),
            self.goal_pos,
            tuple(self.obstacle_positions),
            self.wall_cells,
            self.step_count,
            self.terminated,
            self.won,
            repr(self.rng.bit_generator.state),
        )

    def copy(self) -> "GridState":
        rng = np.random.Generator(type(self.rng.bit_generator)())
        rng.bit_generator.state = self.rng.bit_generator.state
        return dataclasses.replace(self, obstacle_positions=list(self.obstacle_positions), rng=rng)


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: float
    terminated: bool
    won: bool
    goal_visible: bool
    k_obst: int
    steps: int
    info: dict = field(default_factory=dict)


def terminal_reward(steps: int, max_steps: int, won: bool) -> float:
    """Sparse episode return: a win decays linearly in the steps taken, anything else is -1."""
    if won:
        return 1.0 - 0.9 * (steps / max_steps)
    return -1.0


def _inside(pos: Pos, width: int) -> bool:
    return 0 <= pos[0] < width and 0 <= pos[1] < width


def _free_region_connected(walls: set[Pos], width: int) -> bool:
    free = np.ones((width, width), dtype=bool)
    for x, y in walls:
        free[y, x] = False
    _, n_components = ndimage.label(free)
    return n_components == 1


def _sample_walls(cfg: GridConfig, rng: np.random.Generator, keep_clear: set[Pos]) -> frozenset[Pos]:
    """Draw straight wall segments whose complement stays 4-connected."""
    w = cfg.width
    max_len = max(2, w // 2)
    for _ in range(1000):
        walls: set[Pos] = set()
        for _ in range(cfg.n_wall_segments):
            length = int(rng.integers(2, max_len + 1))
            horizontal = bool(rng.integers(2))
            x0 = int(rng.integers(w))
            y0 = int(rng.integers(w))
            for i in range(length):
                cell = (x0 + i, y0) if horizontal else (x0, y0 + i)
                if _inside(cell, w) and cell not in keep_clear:
                    walls.add(cell)
        if _free_region_connected(walls, w):
            return frozenset(walls)
    # only reachable for pathological configs; an empty maze is always solvable
    return frozenset()


def reset(config: GridConfig, seed: int | None = None) -> tuple[GridState, np.ndarray]:
    """Sample a fresh layout. Same ``(config, seed)`` always gives the same state."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    w = config.width
    walls = _sample_walls(config, rng, set()) if config.n_wall_segments else frozenset()
    free = [(x, y) for y in range(w) for x in range(w) if (x, y) not in walls]
    needed = config.n_obstacles + 2
    if len(free) < needed:
        raise ConfigError(f"only {len(free)} free cells for {needed} entities")
    picks = rng.choice(len(free), size=needed, replace=False)
    cells = [free[int(i)] for i in picks]
    state = GridState(
        config=config,
        agent_pos=cells[0],
        agent_dir=Direction(int(rng.integers(4))),
        goal_pos=cells[1],
        obstacle_positions=cells[2:],
        wall_cells=walls,
        rng=rng,
    )
    return state, render_view(state)


def _move_obstacles(state: GridState) -> bool:
    """Random-walk every obstacle one cell; returns True if one lands on the agent."""
    w = state.config.width
    for i, (x, y) in enumerate(state.obstacle_positions):
        occupied = set(state.obstacle_positions)
        options = []
        for dx, dy in _NEIGHBOURS:
            cell = (x + dx, y + dy)
            if (
                _inside(cell, w)
                and cell not in state.wall_cells
                and cell not in occupied
                and cell != state.goal_pos
            ):
                options.append(cell)
        if not options:
            continue
        target = options[int(state.rng.integers(len(options)))]
        state.obstacle_positions[i] = target
        if target == state.agent_pos:
            return True
    return False


def _move_goal(state: GridState) -> None:
    w = state.config.width
    x, y = state.goal_pos
    blocked = set(state.obstacle_positions) | state.wall_cells | {state.agent_pos}
    options = [
        (x + dx, y + dy)
        for dx, dy in _NEIGHBOURS
        if _inside((x + dx, y + dy), w) and (x + dx, y + dy) not in blocked
    ]
    if options:
        state.goal_pos = options[int(state.rng.integers(len(options)))]


def step(state: GridState, action: int) -> StepOutcome:
    """Advance ``state`` in place by one agent action."""
    if state.terminated:
        raise UsageError("step() called on a terminated episode; call reset() first")
    cfg = state.config
    action = Action(action)
    state.step_count += 1

    if action == Action.LEFT:
        state.agent_dir = Direction((state.agent_dir - 1) % 4)
    elif action == Action.RIGHT:
        state.agent_dir = Direction((state.agent_dir + 1) % 4)
    else:
        dx, dy = _FORWARD[state.agent_dir]
        target = (state.agent_pos[0] + dx, state.agent_pos[1] + dy)
        if target == state.goal_pos:
            state.agent_pos = target
            state.terminated = state.won = True
        elif target in state.obstacle_positions:
            state.terminated = True
        elif _inside(target, cfg.width) and target not in state.wall_cells:
            state.agent_pos = target

    if not state.terminated and cfg.dynamic_obstacles and _move_obstacles(state):
        state.terminated = True
    if not state.terminated:
        if cfg.moving_goal and state.step_count % cfg.goal_move_period == 0:
            _move_goal(state)
        if cfg.dynamic_walls and state.step_count % cfg.wall_shift_period == 0:
            keep = {state.agent_pos, state.goal_pos, *state.obstacle_positions}
            state.wall_cells = _sample_walls(cfg, state.rng, keep)
        if state.step_count >= cfg.max_steps:
            state.terminated = True

    reward = terminal_reward(state.step_count, cfg.max_steps, state.won) if state.terminated else 0.0
    goal_visible, k_obst = visible_entities(state)
    return StepOutcome(
        observation=render_view(state),
        reward=reward,
        terminated=state.terminated,
        won=state.won,
        goal_visible=goal_visible,
        k_obst=k_obst,
        steps=state.step_count,
    )


_VIEW_OFFSETS: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def view_offsets(view_size: int, direction: Direction) -> tuple[np.ndarray, np.ndarray]:
    """World ``(dx, dy)`` offsets of every view cell; row 0 is the far edge of the view."""
    key = (view_size, int(direction))
    if key not in _VIEW_OFFSETS:
        rows, cols = np.mgrid[0:view_size, 0:view_size]
        ahead = view_size - 1 - rows
        lateral = cols - (view_size - 1) // 2
        fx, fy = _FORWARD[Direction(direction)]
        rx, ry = _RIGHT[Direction(direction)]
        _VIEW_OFFSETS[key] = (ahead * fx + lateral * rx, ahead * fy + lateral * ry)
    return _VIEW_OFFSETS[key]


def _view_cells(state: GridState) -> tuple[np.ndarray, np.ndarray]:
    dx, dy = view_offsets(state.config.view_size, state.agent_dir)
    return state.agent_pos[0] + dx, state.agent_pos[1] + dy


def render_view(state: GridState) -> np.ndarray:
    """Egocentric ``(n, n, 3)`` observation with the agent at the bottom centre facing up."""
    cfg = state.config
    w, n = cfg.width, cfg.view_size
    kinds = np.zeros((w, w), dtype=np.int64)
    dynamic = np.zeros((w, w), dtype=bool)
    for x, y in state.wall_cells:
        kinds[y, x] = CellKind.WALL
    for x, y in state.obstacle_positions:
        kinds[y, x] = CellKind.OBSTACLE
        dynamic[y, x] = cfg.dynamic_obstacles
    gx, gy = state.goal_pos
    kinds[gy, gx] = CellKind.GOAL
    dynamic[gy, gx] = cfg.moving_goal
    ax, ay = state.agent_pos
    kinds[ay, ax] = CellKind.AGENT
    dynamic[ay, ax] = False

    xs, ys = _view_cells(state)
    inside = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < w)
    xc, yc = np.clip(xs, 0, w - 1), np.clip(ys, 0, w - 1)
    obs = np.zeros((n, n, 3), dtype=np.float32)
    obs[..., 0] = np.where(inside, kinds[yc, xc], CellKind.WALL) / 4.0
    obs[..., 1] = np.where(inside, dynamic[yc, xc], False)
    return obs


def visible_entities(state: GridState) -> tuple[bool, int]:
    """Whether the goal is inside the view window, and how many obstacles are (no occlusion)."""
    xs, ys = _view_cells(state)
    window = set(zip(xs.ravel().tolist(), ys.ravel().tolist()))
    goal_visible = state.goal_pos in window
    k_obst = sum(1 for p in state.obstacle_positions if p in window)
    return goal_visible, k_obst
