"""Shared data model: experiences, histories, agent configuration, run records.

A History is the agent's only state: an append-only, chronologically ordered
list of (action, observation, reward) triples with one local value estimate
(q-value) attached to each entry.  Time indices are 1-based throughout, so
``history.entry(1)`` is the first experience of a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_observation, check_scalar

#: Sentinel stored in the action column for entries that carry no action
#: (the first entry of a run, or the first entry after resuming from a
#: persisted history).
NO_ACTION = -1


@dataclass(frozen=True)
class Experience:
    """One history entry: the action that led into the current sensing,
    the observation received, and the reward co-delivered with it."""

    action: int | None
    observation: np.ndarray
    reward: float


@dataclass
class StepRecord:
    """Per-step log row used to reconstruct learning curves."""

    t: int
    chosen_action: int
    was_exploratory: bool
    reward: float
    q_of_chosen: float
    per_action_q: np.ndarray


@dataclass(frozen=True)
class AgentConfig:
    """Learner hyperparameters, immutable for the duration of a run."""

    k: int = 3
    epsilon: float = 0.3
    gamma: float = 0.3
    beta: float = 0.5
    lam: float = 0.8
    endo_updates_per_step: int = 32
    truncation_tol: float = 1e-6
    seed: int = 0
    exogenous_updates: bool = False

    def __post_init__(self):
        check_scalar(self.k, "k", 1, integral=True)
        check_scalar(self.epsilon, "epsilon", 0.0, 1.0)
        check_scalar(self.gamma, "gamma", 0.0, 1.0, high_open=True)
        check_scalar(self.beta, "beta", 0.0, 1.0, low_open=True)
        check_scalar(self.lam, "lam", 0.0, 1.0, high_open=True)
        check_scalar(self.endo_updates_per_step, "endo_updates_per_step", 0,
                     integral=True)
        check_scalar(self.truncation_tol, "truncation_tol", 0.0, low_open=True)
        check_scalar(self.seed, "seed", 0, 2**64 - 1, integral=True)


class History:
    """Append-only experience list with aligned per-entry q-values.

    Entries and q-values are stored in growing numpy arrays so metric code
    can operate on contiguous views without copying.
    """

    def __init__(self, obs_dim):
        self.obs_dim = check_scalar(obs_dim, "obs_dim", 1, integral=True)
        self._n = 0
        cap = 64
        self._obs = np.empty((cap, obs_dim), dtype=float)
        self._actions = np.empty(cap, dtype=np.int64)
        self._rewards = np.empty(cap, dtype=float)
        self._q = np.empty(cap, dtype=float)

    def __len__(self):
        return self._n

    def _grow(self):
        cap = self._obs.shape[0] * 2
        self._obs = np.concatenate([self._obs, np.empty_like(self._obs)])
        for name in ("_actions", "_rewards", "_q"):
            arr = getattr(self, name)
            setattr(self, name, np.concatenate([arr, np.empty_like(arr)]))
        assert self._obs.shape[0] == cap

    # -- views over the filled prefix (time t maps to row t - 1) ----------

    @property
    def observations(self):
        return self._obs[: self._n]

    @property
    def actions(self):
        """Action column with :data:`NO_ACTION` for null-sentinel entries."""
        return self._actions[: self._n]

    @property
    def rewards(self):
        return self._rewards[: self._n]

    @property
    def qvalues(self):
        return self._q[: self._n]

    # -- operations -------------------------------------------------------

    def append(self, exp: Experience, initial_q: float, *,
               session_boundary: bool = False):
        """Append one experience and its starting q-value.

        A null-sentinel action is only accepted for the first entry, or when
        ``session_boundary`` marks a resume discontinuity (e.g. evaluation
        runs continuing from a persisted history).
        """
        obs = as_observation(exp.observation, self.obs_dim)
        reward = check_scalar(exp.reward, "reward")
        initial_q = check_scalar(initial_q, "initial_q")
        if exp.action is None:
            if self._n > 0 and not session_boundary:
                raise ValueError(
                    "null-sentinel action is only valid for the first entry")
            action = NO_ACTION
        else:
            action = check_scalar(exp.action, "action", 0, integral=True)
        if self._n == self._obs.shape[0]:
            self._grow()
        i = self._n
        self._obs[i] = obs
        self._actions[i] = action
        self._rewards[i] = reward
        self._q[i] = initial_q
        self._n = i + 1

    def entry(self, t) -> Experience:
        """Return the experience at time t (1-based)."""
        self._check_t(t)
        action = int(self._actions[t - 1])
        return Experience(
            action=None if action == NO_ACTION else action,
            observation=self._obs[t - 1].copy(),
            reward=float(self._rewards[t - 1]),
        )

    def q(self, t) -> float:
        self._check_t(t)
        return float(self._q[t - 1])

    def set_q(self, t, value):
        self._check_t(t)
        if not math.isfinite(value):
            raise ValueError(f"q-value must be finite, got {value!r}")
        self._q[t - 1] = value

    def suffix_observations(self, t, window):
        """Observations at times t, t-1, ... back to max(1, t-window+1),
        newest first."""
        self._check_t(t)
        check_scalar(window, "window", 1, integral=True)
        count = min(t, window)
        return [self._obs[t - 1 - i].copy() for i in range(count)]

    def _check_t(self, t):
        if not 1 <= t <= self._n:
            raise IndexError(f"time index {t} outside history of length {self._n}")
