from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import random_trace, random_world
from skillet.episodes import (
    EpisodeRecorder,
    check_replay,
    episode_from_doc,
    episode_to_doc,
    involved_objects,
    load_episode,
    save_episode,
)
from skillet.errors import ActionError, NotRecordingError
from skillet.world import PrimitiveAction, lit


def act(kind, *args):
    return PrimitiveAction.make(kind, "human", *args)


def record_toast(state):
    rec = EpisodeRecorder(state, "ep-toast")
    rec.record(act("pick", "bread1"))
    rec.record(act("place", "bread1", "toaster1"))
    rec.record(act("press", "toaster1"))
    return rec.finish("toast bread")


def record_heat_milk(state):
    rec = EpisodeRecorder(state, "ep-heat")
    rec.record(act("open", "microwave1"))
    rec.record(act("pick", "cup1"))
    rec.record(act("place", "cup1", "microwave1"))
    rec.record(act("close", "microwave1"))
    rec.record(act("press", "microwave1"))
    return rec.finish("heat milk")


class TestRecorder:
    def test_begin_snapshots_current_state(self, kitchen):
        _, state, _ = kitchen
        rec = EpisodeRecorder(state)
        assert rec.before == state

    def test_empty_trace_is_flagged(self, kitchen):
        _, state, _ = kitchen
        episode = EpisodeRecorder(state).finish("noop")
        assert episode.is_empty
        assert episode.is_degenerate
        assert episode.before.facts == episode.after.facts

    def test_touched_for_pick(self, kitchen):
        _, state, _ = kitchen
        rec = EpisodeRecorder(state)
        event = rec.record(act("pick", "bread1"))
        assert event.touched == {"bread1"}

    def test_touched_for_place_includes_target(self, kitchen):
        _, state, _ = kitchen
        rec = EpisodeRecorder(state)
        rec.record(act("pick", "bread1"))
        event = rec.record(act("place", "bread1", "toaster1"))
        assert event.touched == {"bread1", "toaster1"}

    def test_illegal_action_rejected(self, kitchen):
        _, state, _ = kitchen
        rec = EpisodeRecorder(state)
        rec.record(act("pick", "bread1"))
        with pytest.raises(ActionError):
            rec.record(act("pick", "cup1"))
        # failed action is not appended
        assert len(rec.events) == 1

    def test_record_after_finish_fails(self, kitchen):
        _, state, _ = kitchen
        rec = EpisodeRecorder(state)
        rec.finish("noop")
        with pytest.raises(NotRecordingError):
            rec.record(act("pick", "bread1"))

    def test_event_indices_strictly_increase(self, kitchen):
        _, state, _ = kitchen
        episode = record_toast(state)
        assert [e.index for e in episode.events] == [0, 1, 2]


class TestFinish:
    def test_toast_label_and_effects(self, kitchen):
        _, state, _ = kitchen
        episode = record_toast(state)
        assert episode.label == "toast bread"
        assert episode.after.holds(lit("toasted", "bread1"))

    def test_heat_runs_final_tick(self, kitchen):
        _, state, _ = kitchen
        episode = record_heat_milk(state)
        assert episode.after.holds(lit("temp", "milk1", "hot"))
        assert not episode.after.holds(lit("powered", "microwave1"))


class TestInvolvedObjects:
    def test_toast(self, kitchen):
        _, state, _ = kitchen
        assert involved_objects(record_toast(state)) == {"bread1", "toaster1"}

    def test_empty(self, kitchen):
        _, state, _ = kitchen
        assert involved_objects(EpisodeRecorder(state).finish("noop")) == frozenset()

    def test_heat_includes_carried_milk(self, kitchen):
        _, state, _ = kitchen
        episode = record_heat_milk(state)
        assert involved_objects(episode) == {"milk1", "cup1", "microwave1"}

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_involved_subset_of_registry(self, seed):
        rng = random.Random(seed)
        _, state = random_world(rng)
        rec = EpisodeRecorder(state)
        actions, _ = random_trace(rng, state, "human", 6)
        rec2 = EpisodeRecorder(state)
        for a in actions:
            rec2.record(a)
        episode = rec2.finish("fuzz")
        assert involved_objects(episode) <= set(episode.before.registry)


class TestReplayInvariant:
    def test_recorder_episode_replays(self, kitchen):
        _, state, _ = kitchen
        assert check_replay(record_toast(state))
        assert check_replay(record_heat_milk(state))

    @settings(max_examples=80, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_fuzzed_episodes_replay(self, seed):
        rng = random.Random(seed)
        _, state = random_world(rng)
        rec = EpisodeRecorder(state)
        for _ in range(rng.randint(0, 7)):
            from generators import legal_actions

            candidates = legal_actions(rec.current, "human")
            if not candidates:
                break
            rec.record(rng.choice(candidates))
        assert check_replay(rec.finish("fuzz"))


class TestEpisodeLog:
    def test_round_trip(self, kitchen, tmp_path):
        tree, state, _ = kitchen
        episode = record_toast(state)
        path = tmp_path / "toast.yaml"
        save_episode(str(path), tree, episode)
        tree2, loaded = load_episode(str(path))
        assert loaded.label == episode.label
        assert loaded.before.facts == episode.before.facts
        assert loaded.after.facts == episode.after.facts
        assert [e.action for e in loaded.events] == [e.action for e in episode.events]
        assert check_replay(loaded)

    def test_doc_shape(self, kitchen):
        tree, state, _ = kitchen
        doc = episode_to_doc(tree, record_toast(state))
        assert doc["label"] == "toast bread"
        assert doc["events"][0]["action"] == "pick(bread1)"
        tree2, episode = episode_from_doc(doc)
        assert involved_objects(episode) == {"bread1", "toaster1"}
