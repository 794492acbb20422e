"""Shared helpers for building random histories."""

import numpy as np
import pytest

from pcnsm.core import NO_ACTION, Experience, History


def make_history(rng, length, dim=2, action_count=3, discrete=False,
                 obs_values=(0.0, 1.0)):
    """Random history of the given length; first entry carries the null
    action.  With ``discrete`` the observations are drawn from a small
    value set so exact matches occur."""
    h = History(dim)
    for t in range(1, length + 1):
        if discrete:
            obs = rng.choice(obs_values, size=dim)
            reward = float(rng.choice([-1.0, 0.0, 1.0]))
        else:
            obs = rng.normal(size=dim)
            reward = float(rng.normal())
        action = NO_ACTION if t == 1 else int(rng.integers(action_count))
        h.append(Experience(None if action == NO_ACTION else action,
                            obs, reward), float(rng.normal()))
    return h


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
