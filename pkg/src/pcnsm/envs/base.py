"""Environment contract shared by the reference environments.

An environment exposes a constant :class:`EnvDescriptor` and three methods:

* ``reset(place_rng, sense_rng)`` -> (observation, reward): fresh random (or
  scenario-fixed) placement starting a new run or evaluation episode.
* ``step(action, rng)`` -> (observation, reward, trial_done): execute one
  action and sense.
* ``new_trial(rng)``: begin the next trial in a continuing run (relocate
  the target / reset the start position) without touching the agent.
"""

from __future__ import annotations

from dataclasses import dataclass

from .._validation import check_scalar


@dataclass(frozen=True)
class EnvDescriptor:
    """Constants the learner needs: the action-set size, the observation
    dimension, and an upper bound on single-observation distance (used to
    derive the metric truncation window)."""

    action_count: int
    obs_dim: int
    obs_scale_bound: float

    def __post_init__(self):
        check_scalar(self.action_count, "action_count", 1, integral=True)
        check_scalar(self.obs_dim, "obs_dim", 1, integral=True)
        check_scalar(self.obs_scale_bound, "obs_scale_bound", 0.0, low_open=True)
