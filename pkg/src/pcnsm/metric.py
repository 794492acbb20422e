"""Distance functions over observation histories.

Two interchangeable measures are provided behind :class:`MetricSpec`:

* ``match-length`` -- the discrete measure 1 / (1 + n), where n counts the
  contiguous experience triples that match exactly, walking back in time
  from the two compared indices.  Intended for discrete observations.
* ``discounted`` -- an exponentially discounted sum of Euclidean distances
  between aligned observation suffixes.  Actions and rewards are ignored.

The discounted sum formally runs over the whole shared suffix; it is
truncated at a window chosen so the discarded geometric tail is below a
configured tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_scalar

MATCH_LENGTH = "match-length"
DISCOUNTED = "discounted"


def derive_window(lam, obs_scale_bound, tol):
    """Smallest window W such that the truncated tail of the discounted sum,
    lam**W * obs_scale_bound / (1 - lam), is at most tol.

    Returns 1 for lam == 0 (the sum then has a single term).
    """
    lam = check_scalar(lam, "lam", 0.0, 1.0, high_open=True)
    obs_scale_bound = check_scalar(obs_scale_bound, "obs_scale_bound", 0.0,
                                   low_open=True)
    tol = check_scalar(tol, "tol", 0.0, low_open=True)
    if lam == 0.0:
        return 1
    w = max(1, math.ceil(math.log(tol * (1.0 - lam) / obs_scale_bound)
                         / math.log(lam)))
    # Guard against log/ceil rounding on either side.
    while w > 1 and lam ** (w - 1) * obs_scale_bound / (1.0 - lam) <= tol:
        w -= 1
    while lam ** w * obs_scale_bound / (1.0 - lam) > tol:
        w += 1
    return w


@dataclass(frozen=True)
class MetricSpec:
    """Selects and parameterizes the history distance function."""

    kind: str
    lam: float = 0.0
    window: int = 1
    obs_scale_bound: float = 1.0

    def __post_init__(self):
        if self.kind not in (MATCH_LENGTH, DISCOUNTED):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        check_scalar(self.lam, "lam", 0.0, 1.0, high_open=True)
        check_scalar(self.window, "window", 1, integral=True)
        check_scalar(self.obs_scale_bound, "obs_scale_bound", 0.0, low_open=True)

    @classmethod
    def discrete(cls):
        """Exact-match measure for discrete observation spaces."""
        return cls(kind=MATCH_LENGTH)

    @classmethod
    def discounted(cls, lam, obs_scale_bound, tol=1e-6):
        """Discounted Euclidean measure with the truncation window derived
        from the geometric tail bound."""
        window = derive_window(lam, obs_scale_bound, tol)
        return cls(kind=DISCOUNTED, lam=lam, window=window,
                   obs_scale_bound=obs_scale_bound)


def match_length(history, t, t_prime):
    """Number of contiguous, exactly equal triples ending at t and t_prime,
    walking back in time."""
    history._check_t(t)
    history._check_t(t_prime)
    actions = history.actions
    rewards = history.rewards
    obs = history.observations
    n = 0
    while t - n >= 1 and t_prime - n >= 1:
        i, j = t - n - 1, t_prime - n - 1
        if (actions[i] != actions[j] or rewards[i] != rewards[j]
                or not np.array_equal(obs[i], obs[j])):
            break
        n += 1
    return n


def nsm_distance(history, t, t_prime):
    """Discrete distance 1 / (1 + match_length); always in (0, 1]."""
    return 1.0 / (1.0 + match_length(history, t, t_prime))


def discounted_distance(history, t, t_prime, spec):
    """Discounted sum of Euclidean distances between the observation
    suffixes ending at t and t_prime.

    Sums lam**tau * ||o_{t-tau} - o_{t'-tau}|| for tau = 0 .. min(t, t',
    window) - 1.  Identical index pairs give exactly 0 and the function is
    exactly symmetric in (t, t_prime).
    """
    if spec.kind != DISCOUNTED:
        raise ValueError("spec.kind must be 'discounted'")
    history._check_t(t)
    history._check_t(t_prime)
    obs = history.observations
    terms = min(t, t_prime, spec.window)
    a = obs[t - terms: t][::-1]
    b = obs[t_prime - terms: t_prime][::-1]
    norms = np.sqrt(((a - b) ** 2).sum(axis=1))
    weights = spec.lam ** np.arange(terms)
    return float(np.dot(weights, norms))


def anchor_distances(history, spec, anchor):
    """Vector of distances from the history state at ``anchor`` to every
    earlier state t = 1 .. anchor-1 (index t maps to slot t - 1)."""
    history._check_t(anchor)
    if anchor == 1:
        return np.empty(0)
    if spec.kind == MATCH_LENGTH:
        return np.array([nsm_distance(history, t, anchor)
                         for t in range(1, anchor)])
    obs = history.observations
    out = np.zeros(anchor - 1)
    for tau in range(min(spec.window, anchor)):
        ref = obs[anchor - 1 - tau]
        seg = obs[: anchor - 1 - tau]
        if seg.shape[0] == 0:
            break
        norms = np.sqrt(((seg - ref) ** 2).sum(axis=1))
        out[tau:] += (spec.lam ** tau) * norms
    return out
