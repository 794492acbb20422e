"""Learner tests: neighborhood selection, value estimation, update rules,
and equivalence of the direct and incremental search paths."""

import numpy as np
import pytest

from pcnsm.core import AgentConfig, Experience, History
from pcnsm.learner import (ACTION_SOURCES, ActionValues, CachedSearch,
                           DirectSearch, action_values, agent_step, build_neighborhoods,
                           endogenous_updates, exogenous_update,
                           exploration_action, greedy_action, init_new_q,
                           q_estimate, select_action, _select_members)
from pcnsm.metric import MetricSpec

from conftest import make_history


def make_searches(history, spec, action_count=3, k=3, action_source="entry"):
    direct = DirectSearch(history, spec, action_count, k, action_source)
    cached = CachedSearch(history, spec, action_count, k, action_source)
    for _ in range(len(history)):
        cached.notify_append()
    return direct, cached


class TestSelectMembers:
    def test_k_smallest(self):
        row = np.array([0.5, 0.1, 0.9, 0.3, 0.2])
        times = np.arange(1, 6)
        members, dists = _select_members(row, times, 3)
        assert members.tolist() == [2, 5, 4]
        assert dists.tolist() == [0.1, 0.2, 0.3]

    def test_tie_breaks_toward_recent(self):
        row = np.array([0.3, 0.3, 0.3, 0.3])
        times = np.arange(1, 5)
        members, dists = _select_members(row, times, 2)
        assert members.tolist() == [4, 3]

    def test_tie_straddling_kth_place(self):
        # Three candidates tie at the cut; the most recent ones win.
        row = np.array([0.1, 0.5, 0.5, 0.5])
        times = np.arange(1, 5)
        members, _ = _select_members(row, times, 2)
        assert members.tolist() == [1, 4]

    def test_fewer_candidates_than_k(self):
        row = np.array([0.7, 0.2])
        times = np.arange(1, 3)
        members, dists = _select_members(row, times, 5)
        assert members.tolist() == [2, 1]

    def test_empty(self):
        members, dists = _select_members(np.empty(0), np.empty(0, dtype=int), 3)
        assert members.size == 0 and dists.size == 0


class TestSearchEquivalence:
    @pytest.mark.parametrize("action_source", ACTION_SOURCES)
    @pytest.mark.parametrize("kind", ["discrete", "discounted"])
    def test_direct_equals_cached(self, rng, kind, action_source):
        for trial in range(10):
            n = int(rng.integers(2, 60))
            if kind == "discrete":
                h = make_history(rng, n, dim=2, discrete=True)
                spec = MetricSpec.discrete()
            else:
                h = make_history(rng, n, dim=2)
                spec = MetricSpec.discounted(0.8, 6.0, tol=1e-3)
            direct, cached = make_searches(h, spec,
                                           action_source=action_source)
            for anchor in {1, n // 2 + 1, n}:
                nd = direct.neighborhoods(anchor)
                nc = cached.neighborhoods(anchor)
                for a, b in zip(nd, nc):
                    assert a.action == b.action
                    assert a.member_times.tolist() == b.member_times.tolist()
                    np.testing.assert_allclose(a.member_distances,
                                               b.member_distances,
                                               rtol=1e-9, atol=1e-9)

    def test_candidate_limit_respected(self, rng):
        h = make_history(rng, 40, dim=2)
        spec = MetricSpec.discounted(0.8, 6.0, tol=1e-3)
        direct, cached = make_searches(h, spec)
        for search in (direct, cached):
            search.candidate_limit = 15
            for nb in search.neighborhoods(40):
                assert all(t <= 15 for t in nb.member_times)

    def test_rejects_unknown_action_source(self, rng):
        h = make_history(rng, 5)
        spec = MetricSpec.discrete()
        with pytest.raises(ValueError):
            DirectSearch(h, spec, 2, 3, "both")
        with pytest.raises(ValueError):
            CachedSearch(h, spec, 2, 3, "both")

    def test_candidates_strictly_before_anchor(self, rng):
        h = make_history(rng, 30, dim=2)
        spec = MetricSpec.discounted(0.5, 6.0, tol=1e-3)
        direct, cached = make_searches(h, spec)
        for search in (direct, cached):
            for anchor in (2, 15, 30):
                for nb in search.neighborhoods(anchor):
                    assert all(t < anchor for t in nb.member_times)


class TestValueEstimation:
    def build(self, qvals, actions_for_entries):
        """History with scripted q-values; entry t+1 carries action index
        actions_for_entries[t]."""
        h = History(1)
        h.append(Experience(None, [0.0], 0.0), qvals[0])
        for a, q in zip(actions_for_entries, qvals[1:]):
            h.append(Experience(a, [0.0], 0.0), q)
        return h

    def test_q_estimate_mean(self):
        # Anchor is the last entry; candidates are strictly before it.
        h = self.build([1.0, 2.0, 4.0, 0.0], [0, 0, 1])
        nbhds = build_neighborhoods(h, MetricSpec.discrete(), k=3,
                                    action_count=2)
        # Action 0 candidates are entries 2 and 3 under entry keying.
        assert q_estimate(nbhds[0], h) == pytest.approx(3.0)
        assert q_estimate(nbhds[1], h) == 0.0  # empty -> 0

    def test_action_values_sentinel(self):
        h = self.build([1.0, 2.0, 0.0], [0, 1])
        nbhds = build_neighborhoods(h, MetricSpec.discrete(), k=3,
                                    action_count=2)
        vals = action_values(nbhds, h)
        assert vals.mean_distance[1] == np.inf
        assert np.isfinite(vals.mean_distance[0])

    def test_greedy_tie_lowest_index(self):
        vals = ActionValues(q=np.array([2.0, 2.0, 1.0]),
                            mean_distance=np.array([0.1, 0.2, 0.3]))
        assert greedy_action(vals) == 0

    def test_exploration_prefers_untried(self):
        vals = ActionValues(q=np.array([5.0, 0.0]),
                            mean_distance=np.array([0.5, np.inf]))
        assert exploration_action(vals) == 1

    def test_select_action_epsilon_extremes(self):
        vals = ActionValues(q=np.array([5.0, 0.0]),
                            mean_distance=np.array([0.1, 0.9]))
        rng = np.random.default_rng(0)
        a, exploratory = select_action(vals, 0.0, rng)
        assert (a, exploratory) == (0, False)
        a, exploratory = select_action(vals, 1.0, rng)
        assert (a, exploratory) == (1, True)

    def test_init_new_q_is_greedy_estimate(self):
        vals = ActionValues(q=np.array([3.0, 7.0]),
                            mean_distance=np.array([0.1, 0.1]))
        assert init_new_q(None, vals) == 7.0


def test_action_values_empty_history_all_zero():
    h = History(1)
    h.append(Experience(None, [0.0], 0.0), 0.0)
    nbhds = build_neighborhoods(h, MetricSpec.discrete(), k=3, action_count=4)
    vals = action_values(nbhds, h)
    assert vals.q.tolist() == [0.0] * 4
    assert all(d == np.inf for d in vals.mean_distance)


class TestUpdates:
    def test_exogenous_update_formula(self):
        h = History(1)
        h.append(Experience(None, [0.0], 2.0), 1.0)
        h.append(Experience(0, [0.0], 3.0), 5.0)
        h.append(Experience(0, [0.0], 1.0), 7.0)
        nbhds = build_neighborhoods(h, MetricSpec.discrete(), k=3,
                                    action_count=1)
        exogenous_update(h, nbhds[0], bootstrap=10.0, beta=0.5, gamma=0.5)
        # Sole member is entry 2: q <- 0.5*5 + 0.5*(3 + 0.5*10) = 6.5
        assert h.q(2) == pytest.approx(6.5)
        assert h.q(1) == 1.0  # non-members untouched
        assert h.q(3) == 7.0

    def test_endogenous_moves_toward_fixed_point(self):
        # Single-action constant chain: q* = R / (1 - gamma).
        rng = np.random.default_rng(0)
        h = History(1)
        h.append(Experience(None, [0.0], 1.0), 0.0)
        for _ in range(9):
            h.append(Experience(0, [0.0], 1.0), 0.0)
        spec = MetricSpec.discrete()
        endogenous_updates(h, 5000, spec, k=1, beta=1.0, gamma=0.5, rng=rng,
                           action_count=1)
        interior = [h.q(t) for t in range(2, 10)]
        assert all(abs(q - 2.0) < 1e-6 for q in interior)

    def test_endogenous_noop_cases(self, rng):
        h = History(1)
        h.append(Experience(None, [0.0], 1.0), 3.0)
        spec = MetricSpec.discrete()
        endogenous_updates(h, 10, spec, k=1, beta=1.0, gamma=0.5, rng=rng,
                           action_count=1)
        assert h.q(1) == 3.0  # single entry: nothing to draw
        h.append(Experience(0, [0.0], 1.0), 4.0)
        endogenous_updates(h, 0, spec, k=1, beta=1.0, gamma=0.5, rng=rng,
                           action_count=1)
        assert h.q(2) == 4.0  # n = 0: no updates


class TestAgentStep:
    def run_steps(self, frozen=False):
        h = History(1)
        config = AgentConfig(k=1, epsilon=0.0, gamma=0.5, beta=0.5,
                             endo_updates_per_step=4)
        spec = MetricSpec.discrete()
        rng = np.random.default_rng(0)
        records = []
        prev = None
        for t in range(1, 6):
            action, rec = agent_step(
                h, config, spec, np.array([float(t % 2)]), 1.0, rng, 2,
                prev_action=prev, frozen=frozen)
            prev = action
            records.append(rec)
        return h, records

    def test_records_well_formed(self):
        h, records = self.run_steps()
        for t, rec in enumerate(records, start=1):
            assert rec.t == t
            assert 0 <= rec.chosen_action < 2
            assert rec.reward == 1.0
            assert rec.per_action_q.shape == (2,)
            assert rec.q_of_chosen == rec.per_action_q[rec.chosen_action]

    def test_frozen_changes_no_stored_q(self):
        h = History(1)
        config = AgentConfig(k=1, epsilon=0.3, gamma=0.5, beta=0.5,
                             endo_updates_per_step=8)
        spec = MetricSpec.discrete()
        rng = np.random.default_rng(0)
        prev = None
        for t in range(1, 5):
            prev, _ = agent_step(h, config, spec, np.array([0.0]), 1.0, rng,
                                 2, prev_action=prev)
        before = h.qvalues.copy()
        prev, rec = agent_step(h, config, spec, np.array([0.0]), 1.0, rng, 2,
                               prev_action=prev, frozen=True)
        assert not rec.was_exploratory
        np.testing.assert_array_equal(h.qvalues[:4], before)

    def test_forced_action_recorded_non_exploratory(self):
        h = History(1)
        config = AgentConfig(k=1, epsilon=1.0, endo_updates_per_step=0)
        spec = MetricSpec.discrete()
        rng = np.random.default_rng(0)
        action, rec = agent_step(h, config, spec, np.array([0.0]), 0.0, rng,
                                 3, forced_action=2)
        assert action == 2
        assert not rec.was_exploratory

    def test_shared_search_matches_fresh_search(self, rng):
        # Driving with a persistent CachedSearch must equal the per-step
        # DirectSearch path action-for-action and q-for-q.
        def run(with_cache):
            h = History(1)
            config = AgentConfig(k=2, epsilon=0.3, gamma=0.5, beta=0.5,
                                 endo_updates_per_step=3)
            spec = MetricSpec.discounted(0.5, 4.0, tol=1e-3)
            local = np.random.default_rng(99)
            search = (CachedSearch(h, spec, 2, 2, "entry")
                      if with_cache else None)
            prev = None
            actions = []
            for t in range(1, 25):
                obs = np.array([float((t * 7) % 3)])
                prev, rec = agent_step(h, config, spec, obs, float(t % 4),
                                       local, 2, prev_action=prev,
                                       search=search)
                actions.append(prev)
            return actions, h.qvalues.copy()

        a1, q1 = run(True)
        a2, q2 = run(False)
        assert a1 == a2
        np.testing.assert_allclose(q1, q2, rtol=1e-9, atol=1e-9)
