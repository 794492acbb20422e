"""Estimator-style wrapper around the per-step learning loop.

``PCNSMAgent`` follows scikit-learn conventions: hyperparameters are plain
constructor arguments (so ``get_params`` / ``set_params`` and ``clone``
compose with the wider ecosystem), and fitted state lives in
trailing-underscore attributes created by :meth:`setup` / :meth:`fit`.
Because the learner is an online agent rather than a batch transformer, the
prediction surface is :meth:`step` (one sense-act cycle) instead of
``predict``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .core import AgentConfig, History
from .learner import ACTION_SOURCES, CachedSearch, DirectSearch, agent_step
from .metric import DISCOUNTED, MATCH_LENGTH, MetricSpec


class PCNSMAgent(BaseEstimator):
    """Instance-based agent over observation histories.

    Parameters
    ----------
    k : neighbor count per action.
    epsilon : probability of taking the exploratory action.
    gamma : value discount.
    beta : value-update blend rate.
    lam : metric discount for the discounted sequence distance.
    endo_updates_per_step : replayed value updates per environment step.
    truncation_tol : tolerance bounding the truncated metric tail.
    exogenous_updates : also update the greedy neighborhood at selection
        time (off by default; replayed updates are the primary mechanism).
    metric : "discounted" or "match-length".
    action_source : candidate-set convention, "entry" or "successor"
        (see :data:`pcnsm.learner.ACTION_SOURCES`).
    seed : seed for the agent's private rng (ignored when an explicit rng
        is passed to :meth:`setup`).
    cached_search : keep incremental distance rows (linear per-step cost)
        instead of recomputing distances per query.
    """

    def __init__(self, k=3, epsilon=0.3, gamma=0.3, beta=0.5, lam=0.8,
                 endo_updates_per_step=32, truncation_tol=1e-6,
                 exogenous_updates=False, metric="discounted",
                 action_source="entry", seed=0, cached_search=True):
        self.k = k
        self.epsilon = epsilon
        self.gamma = gamma
        self.beta = beta
        self.lam = lam
        self.endo_updates_per_step = endo_updates_per_step
        self.truncation_tol = truncation_tol
        self.exogenous_updates = exogenous_updates
        self.metric = metric
        self.action_source = action_source
        self.seed = seed
        self.cached_search = cached_search

    # -- state construction ----------------------------------------------

    def setup(self, descriptor, rng=None):
        """Bind the agent to an environment contract and reset all state."""
        if self.metric not in (DISCOUNTED, MATCH_LENGTH):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.action_source not in ACTION_SOURCES:
            raise ValueError(f"unknown action_source {self.action_source!r}")
        self.config_ = AgentConfig(
            k=self.k, epsilon=self.epsilon, gamma=self.gamma, beta=self.beta,
            lam=self.lam, endo_updates_per_step=self.endo_updates_per_step,
            truncation_tol=self.truncation_tol, seed=self.seed,
            exogenous_updates=self.exogenous_updates)
        if self.metric == DISCOUNTED:
            self.spec_ = MetricSpec.discounted(
                self.lam, descriptor.obs_scale_bound, self.truncation_tol)
        else:
            self.spec_ = MetricSpec.discrete()
        self.action_count_ = descriptor.action_count
        self.history_ = History(descriptor.obs_dim)
        self.search_ = self._make_search(self.history_)
        self.rng_ = rng if rng is not None else np.random.default_rng(self.seed)
        self.frozen_ = False
        self._prev_action = None
        self._boundary = False
        return self

    def _make_search(self, history):
        cls = CachedSearch if self.cached_search else DirectSearch
        return cls(history, self.spec_, self.action_count_, self.k,
                   self.action_source)

    def warm_start(self, history):
        """Continue from a persisted history.  The next appended entry marks
        a session boundary and carries the null-sentinel action."""
        if history.obs_dim != self.history_.obs_dim:
            raise ValueError("history dimension does not match environment")
        self.history_ = history
        self.search_ = self._make_search(history)
        if isinstance(self.search_, CachedSearch):
            for _ in range(len(history)):
                self.search_.notify_append()
        self.begin_session()
        return self

    def begin_session(self):
        """Mark a sensing discontinuity (fresh placement, resumed run)."""
        self._prev_action = None
        self._boundary = True

    def freeze(self):
        """Switch to evaluation: greedy selection, no q-value changes, and
        entries appended from here on are excluded from candidate sets (their
        q-values are frozen initializer estimates, so letting them join
        neighborhoods would feed the estimates back into themselves)."""
        self.frozen_ = True
        self.search_.candidate_limit = len(self.history_)
        return self

    def unfreeze(self):
        self.frozen_ = False
        self.search_.candidate_limit = None
        return self

    # -- interaction ------------------------------------------------------

    def step(self, observation, reward, forced_action=None):
        """Consume one (observation, reward) pair and choose the next
        action.  Returns (action, StepRecord)."""
        action, record = agent_step(
            self.history_, self.config_, self.spec_, observation, reward,
            self.rng_, self.action_count_, prev_action=self._prev_action,
            search=self.search_, frozen=self.frozen_,
            forced_action=forced_action, action_source=self.action_source,
            session_boundary=self._boundary)
        self._boundary = False
        self._prev_action = action
        return action, record

    def fit(self, env, max_actions=1000, trials=None, trial_timeout=1000,
            seed=None):
        """Train online against an environment for up to ``max_actions``
        steps.  Returns self; per-step records land in ``records_``."""
        from .harness import drive

        seed = self.seed if seed is None else seed
        ss = np.random.SeedSequence(seed)
        agent_seed, env_seed, place_seed = ss.spawn(3)
        self.setup(env.descriptor, rng=np.random.default_rng(agent_seed))
        steps, trial_rows = drive(
            self, env, np.random.default_rng(env_seed),
            np.random.default_rng(place_seed), max_actions=max_actions,
            trials=trials if trials is not None else max_actions,
            trial_timeout=trial_timeout)
        self.records_ = [rec for _, rec in steps]
        self.trial_rows_ = trial_rows
        return self
