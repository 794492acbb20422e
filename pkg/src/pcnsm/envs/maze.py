"""Discrete gridworld maze with deliberately aliased observations.

The robot only senses the 4-bit wall-adjacency pattern of its cell, so
distinct cells routinely look identical; resolving them requires history.
Used as the exact, enumerable counterpart to the continuous arena.
"""

from __future__ import annotations

import numpy as np

from .base import EnvDescriptor

WALL, FREE, GOAL, START = "#", ".", "G", "S"

#: Actions: N, E, S, W as (row delta, col delta); bumping a wall is a no-op.
MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))

STEP_REWARD = -1.0
GOAL_REWARD = 100.0


class MazeError(ValueError):
    """Raised for malformed maze maps."""


class MazeEnv:
    def __init__(self, rows):
        rows = [str(r) for r in rows]
        if not rows:
            raise MazeError("maze map is empty")
        width = len(rows[0])
        if width == 0 or any(len(r) != width for r in rows):
            raise MazeError("maze map rows must be nonempty and equal length")
        bad = {c for r in rows for c in r} - {WALL, FREE, GOAL, START}
        if bad:
            raise MazeError(f"maze map has invalid characters: {sorted(bad)}")
        starts = [(i, j) for i, r in enumerate(rows) for j, c in enumerate(r)
                  if c == START]
        goals = [(i, j) for i, r in enumerate(rows) for j, c in enumerate(r)
                 if c == GOAL]
        if len(starts) != 1:
            raise MazeError(f"maze map must have exactly one start, found "
                            f"{len(starts)}")
        if len(goals) != 1:
            raise MazeError(f"maze map must have exactly one goal, found "
                            f"{len(goals)}")
        self.rows = rows
        self.height = len(rows)
        self.width = width
        self.start = starts[0]
        self.goal = goals[0]
        self.pos = self.start
        self.descriptor = EnvDescriptor(action_count=4, obs_dim=4,
                                        obs_scale_bound=2.0)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            rows = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        return cls(rows)

    def _is_wall(self, i, j):
        if not (0 <= i < self.height and 0 <= j < self.width):
            return True  # outside the map counts as wall
        return self.rows[i][j] == WALL

    def observe(self, pos=None):
        """4-bit wall pattern (N, E, S, W) of the given cell as a vector."""
        i, j = self.pos if pos is None else pos
        return np.array([float(self._is_wall(i + di, j + dj))
                         for di, dj in MOVES])

    def reset(self, place_rng=None, sense_rng=None):
        self.pos = self.start
        return self.observe(), 0.0

    def new_trial(self, rng=None):
        self.pos = self.start

    def step(self, action, rng=None):
        if not 0 <= action < 4:
            raise ValueError(f"action index {action} out of range")
        di, dj = MOVES[action]
        i, j = self.pos
        if not self._is_wall(i + di, j + dj):
            self.pos = (i + di, j + dj)
        done = self.pos == self.goal
        reward = GOAL_REWARD if done else STEP_REWARD
        return self.observe(), reward, done
