"""Neighborhood construction, value estimation, action selection, and the
per-step learning loop.

At every step the agent appends the newest experience, then for each action
collects the k stored history states nearest to the current one under the
configured metric.  The neighborhood means of the per-entry q-values give
per-action value estimates; the greedy action maximizes value while the
exploratory action maximizes mean neighborhood distance (the action about
which the least is known).  Value updates happen in two passes: optional
neighborhood updates at the moment of selection, and replayed updates on
randomly drawn stored entries between environment interactions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import NO_ACTION, Experience, StepRecord
from .metric import MATCH_LENGTH, anchor_distances

#: Candidate-set conventions for splitting the history by action.
#: "entry" keys state t under the action stored in entry t (the action that
#: led into observation t); "successor" keys state t under the action stored
#: in entry t+1 (the action taken after observing t).
ACTION_SOURCES = ("entry", "successor")


@dataclass(frozen=True)
class Neighborhood:
    """The (up to) k nearest stored states for one action, distances sorted
    nondecreasing with ties resolved toward more recent entries."""

    action: int
    member_times: np.ndarray
    member_distances: np.ndarray

    def __len__(self):
        return len(self.member_times)


@dataclass
class ActionValues:
    """Per-action value estimates and mean neighborhood distances; actions
    with empty neighborhoods carry value 0 and the +inf distance sentinel."""

    q: np.ndarray
    mean_distance: np.ndarray


def _select_members(row, times, k):
    """k smallest distances from ``row`` over candidate ``times``; exact
    tie-break toward larger t."""
    if times.size == 0:
        return times.astype(np.int64), np.empty(0)
    dists = row[times - 1]
    if times.size > k:
        kth = np.partition(dists, k - 1)[k - 1]
        keep = dists <= kth
        times = times[keep]
        dists = dists[keep]
    order = np.lexsort((-times, dists))[:k]
    return times[order], dists[order]


class DirectSearch:
    """Neighborhood search that recomputes distances from scratch on every
    query.  Simple and allocation-free of caches; preferred for tests and
    short histories."""

    def __init__(self, history, spec, action_count, k, action_source="entry"):
        if action_source not in ACTION_SOURCES:
            raise ValueError(f"unknown action_source {action_source!r}")
        self.history = history
        self.spec = spec
        self.action_count = action_count
        self.k = k
        self.action_source = action_source
        #: When set, only entries at times <= candidate_limit may join
        #: neighborhoods.  Frozen-policy evaluation sets this to the length
        #: of the training history, so entries appended while evaluating
        #: (whose q-values are frozen initializer estimates) cannot feed
        #: back into their own value estimates.
        self.candidate_limit = None

    def notify_append(self):
        pass

    def row(self, anchor):
        return anchor_distances(self.history, self.spec, anchor)

    def neighborhoods(self, anchor):
        row = self.row(anchor)
        actions = self.history.actions
        if self.action_source == "entry":
            keys = actions[: anchor - 1]
        else:
            keys = actions[1:anchor]
        bound = anchor - 1
        if self.candidate_limit is not None:
            bound = min(bound, self.candidate_limit)
        out = []
        for a in range(self.action_count):
            times = np.nonzero(keys[:bound] == a)[0].astype(np.int64) + 1
            members, dists = _select_members(row, times, self.k)
            out.append(Neighborhood(a, members, dists))
        return out


class CachedSearch:
    """Incremental neighborhood search.

    Distance rows are built once per append via the recurrences

        d(T, s) = e(T, s) + lam * d(T-1, s-1) - lam**W * e(T-W, s-W)
        n(T, s) = n(T-1, s-1) + 1  if the triples at T and s match, else 0

    and kept for the lifetime of the run, so replayed updates anchored at
    interior times reuse them for free.  Per-action candidate time lists are
    maintained alongside.
    """

    def __init__(self, history, spec, action_count, k, action_source="entry"):
        if action_source not in ACTION_SOURCES:
            raise ValueError(f"unknown action_source {action_source!r}")
        self.history = history
        self.spec = spec
        self.action_count = action_count
        self.k = k
        self.action_source = action_source
        self.candidate_limit = None  # same meaning as on DirectSearch
        self._rows = [None]  # rows[t] holds the row for anchor t
        self._count = 0
        self._times = [[] for _ in range(action_count)]
        self._times_arr = [np.empty(0, dtype=np.int64)] * action_count
        self._times_dirty = [False] * action_count

    def notify_append(self):
        """Ingest the newest history entry; must be called exactly once per
        append, in order."""
        self._count += 1
        T = self._count
        assert T <= len(self.history), "cache out of sync with history"
        obs = self.history.observations
        actions = self.history.actions
        if self.spec.kind == MATCH_LENGTH:
            self._append_match_row(T, obs, actions)
        else:
            self._append_discounted_row(T, obs)
        self._register_action(T, actions)

    def _register_action(self, T, actions):
        a = int(actions[T - 1])
        if self.action_source == "entry":
            if a != NO_ACTION:
                self._times[a].append(T)
                self._times_dirty[a] = True
        else:
            # Entry T's action keys its predecessor state T-1.
            if a != NO_ACTION and T >= 2:
                self._times[a].append(T - 1)
                self._times_dirty[a] = True

    def _append_discounted_row(self, T, obs):
        if T == 1:
            self._rows.append(np.empty(0))
            return
        lam = self.spec.lam
        w = self.spec.window
        cur = obs[T - 1]
        row = np.sqrt(((obs[: T - 1] - cur) ** 2).sum(axis=1))
        prev = self._rows[T - 1]
        if prev.size:
            row[1:] += lam * prev
        if T - 1 > w:
            # Terms older than the window fall out of the truncated sum.
            ref = obs[T - 1 - w]
            tail = np.sqrt(((obs[: T - 1 - w] - ref) ** 2).sum(axis=1))
            row[w:] -= (lam ** w) * tail
            np.maximum(row, 0.0, out=row)
        self._rows.append(row)

    def _append_match_row(self, T, obs, actions):
        # Rows store match lengths; distances are derived on query.
        if T == 1:
            self._rows.append(np.empty(0))
            return
        cur = T - 1
        eq = ((actions[: T - 1] == actions[cur])
              & (self.history.rewards[: T - 1] == self.history.rewards[cur])
              & np.all(obs[: T - 1] == obs[cur], axis=1))
        shifted = np.zeros(T - 1)
        prev = self._rows[T - 1]
        if prev.size:
            shifted[1:] = prev
        self._rows.append(np.where(eq, shifted + 1.0, 0.0))

    def row(self, anchor):
        row = self._rows[anchor]
        if self.spec.kind == MATCH_LENGTH:
            return 1.0 / (1.0 + row)
        return row

    def _times_for(self, a, anchor):
        if self._times_dirty[a]:
            self._times_arr[a] = np.asarray(self._times[a], dtype=np.int64)
            self._times_dirty[a] = False
        arr = self._times_arr[a]
        bound = anchor
        if self.candidate_limit is not None:
            bound = min(bound, self.candidate_limit + 1)
        cut = np.searchsorted(arr, bound)
        return arr[:cut]

    def neighborhoods(self, anchor):
        row = self.row(anchor)
        out = []
        for a in range(self.action_count):
            times = self._times_for(a, anchor)
            members, dists = _select_members(row, times, self.k)
            out.append(Neighborhood(a, members, dists))
        return out


def build_neighborhoods(history, spec, k, action_count, anchor=None,
                        action_source="entry"):
    """One Neighborhood per action for the state at ``anchor`` (default:
    the history tail), over candidates strictly before the anchor."""
    if anchor is None:
        anchor = len(history)
    search = DirectSearch(history, spec, action_count, k, action_source)
    return search.neighborhoods(anchor)


def q_estimate(nbhd, history):
    """Mean stored q-value over the neighborhood; 0 when it is empty."""
    if len(nbhd) == 0:
        return 0.0
    return float(np.mean(history.qvalues[nbhd.member_times - 1]))


def action_values(nbhds, history):
    q = np.array([q_estimate(nb, history) for nb in nbhds])
    mean_distance = np.array(
        [float(np.mean(nb.member_distances)) if len(nb) else np.inf
         for nb in nbhds])
    return ActionValues(q=q, mean_distance=mean_distance)


def greedy_action(values):
    """Argmax of the value estimates; ties resolve to the lowest index."""
    return int(np.argmax(values.q))


def exploration_action(values):
    """Argmax of mean neighborhood distance.  Untried actions carry the
    +inf sentinel and therefore outrank every tried action."""
    return int(np.argmax(values.mean_distance))


def select_action(values, epsilon, rng):
    """Exploratory action with probability epsilon, greedy otherwise."""
    if rng.random() < epsilon:
        return exploration_action(values), True
    return greedy_action(values), False


def exogenous_update(history, nbhd, bootstrap, beta, gamma):
    """Blend each neighborhood member's q toward its own reward plus the
    discounted current-state value estimate."""
    for t in nbhd.member_times:
        t = int(t)
        target = history.rewards[t - 1] + gamma * bootstrap
        history.set_q(t, (1.0 - beta) * history.q(t) + beta * target)


def endogenous_updates(history, n, spec, k, beta, gamma, rng, action_count,
                       search=None, action_source="entry"):
    """Replay n value updates on uniformly drawn stored entries.

    Each draw picks t in [1, T-1], re-estimates the per-action values at the
    successor state t+1, and blends q(t) toward R_t plus the discounted best
    successor value.  No-op when fewer than two entries exist.
    """
    T = len(history)
    if n <= 0 or T < 2:
        return
    if search is None:
        search = DirectSearch(history, spec, action_count, k, action_source)
    rewards = history.rewards
    for _ in range(n):
        t = int(rng.integers(1, T))
        nbhds = search.neighborhoods(t + 1)
        best = max(q_estimate(nb, history) for nb in nbhds)
        target = rewards[t - 1] + gamma * best
        history.set_q(t, (1.0 - beta) * history.q(t) + beta * target)


def init_new_q(history, values):
    """Starting q-value for a fresh entry: the greedy action's estimate
    (0 when every neighborhood is empty)."""
    return float(values.q[greedy_action(values)])


def agent_step(history, config, spec, observation, reward, rng, action_count,
               prev_action=None, search=None, frozen=False,
               forced_action=None, action_source="entry",
               session_boundary=False):
    """Run one full decision step and return (action, StepRecord).

    Appends the new experience (carrying the previously executed action),
    builds neighborhoods, selects an action, applies the configured update
    passes, and initializes the new entry's q-value from the greedy
    estimate.  With ``frozen`` set, selection is greedy and no stored
    q-value changes.  ``forced_action`` overrides selection (the override is
    recorded as non-exploratory and draws nothing from the rng).
    """
    history.append(Experience(prev_action, observation, reward), 0.0,
                   session_boundary=session_boundary)
    if search is not None:
        search.notify_append()
    else:
        search = DirectSearch(history, spec, action_count, config.k,
                              action_source)
    T = len(history)
    nbhds = search.neighborhoods(T)
    values = action_values(nbhds, history)
    a_hat = greedy_action(values)
    if forced_action is not None:
        action, exploratory = int(forced_action), False
    else:
        epsilon = 0.0 if frozen else config.epsilon
        action, exploratory = select_action(values, epsilon, rng)
    if not frozen:
        if config.exogenous_updates:
            exogenous_update(history, nbhds[a_hat], float(values.q[a_hat]),
                             config.beta, config.gamma)
        endogenous_updates(history, config.endo_updates_per_step, spec,
                           config.k, config.beta, config.gamma, rng,
                           action_count, search=search,
                           action_source=action_source)
    history.set_q(T, init_new_q(history, values))
    record = StepRecord(
        t=T,
        chosen_action=action,
        was_exploratory=exploratory,
        reward=float(history.rewards[T - 1]),
        q_of_chosen=float(values.q[action]),
        per_action_q=values.q.copy(),
    )
    return action, record
