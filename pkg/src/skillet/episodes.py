"""Demonstration recording: before/after snapshots plus the action-event trace."""

from __future__ import annotations

from dataclasses import dataclass

import yaml

from .errors import NotRecordingError
from .world import (
    Literal,
    PrimitiveAction,
    TypeTree,
    WorldState,
    apply_action,
    diff_states,
    direct_contents,
    load_domain,
    nested_contents,
    serialize_domain,
    tick_devices,
)


@dataclass(frozen=True)
class ActionEvent:
    index: int
    actor: str
    action: PrimitiveAction
    touched: frozenset[str]


@dataclass(frozen=True)
class Episode:
    id: str
    label: str
    before: WorldState
    events: tuple[ActionEvent, ...]
    after: WorldState

    @property
    def is_empty(self) -> bool:
        return not self.events

    def diff(self) -> tuple[frozenset[Literal], frozenset[Literal]]:
        return diff_states(self.before, self.after)

    @property
    def is_degenerate(self) -> bool:
        added, removed = self.diff()
        return not added and not removed


def touched_objects(state: WorldState, action: PrimitiveAction) -> frozenset[str]:
    """Objects an action acts on: args, plus cargo travelling with them.

    Containers carry their contents when moved, pressing a device acts on
    whatever is inside it, placing into a container acts on what is already
    there (a dunked teabag touches the water), and pouring moves the portions.
    """
    facts = state.facts
    touched = {a for a in action.args if a in state.registry}
    kind = action.kind
    if kind in ("pick", "place"):
        touched.update(nested_contents(facts, action.args[0]))
    if kind == "place":
        target = action.args[1]
        if target in state.registry:
            touched.update(direct_contents(facts, target))
    elif kind == "press":
        touched.update(nested_contents(facts, action.args[0]))
    elif kind == "pour":
        src = action.args[0]
        touched.update(
            x for x in direct_contents(facts, src) if state.ctx.traits[x].portion
        )
    return frozenset(touched)


class EpisodeRecorder:
    """Single-owner demonstration recorder.

    Created on "begin"; each recorded event advances a private simulated copy
    of the world, so illegal demonstrations are rejected at record time.
    """

    def __init__(self, state: WorldState, episode_id: str = "ep-1"):
        self.episode_id = episode_id
        self.before = state
        self.current = state
        self.events: list[ActionEvent] = []
        self._done = False

    def record(self, action: PrimitiveAction) -> ActionEvent:
        """Append one event; raises ActionError if illegal in the current state."""
        if self._done:
            raise NotRecordingError("episode already ended")
        touched = touched_objects(self.current, action)
        self.current = apply_action(self.current, action)
        event = ActionEvent(len(self.events), action.actor, action, touched)
        self.events.append(event)
        return event

    def finish(self, label: str) -> Episode:
        """Close the episode: one final device tick, then snapshot."""
        if self._done:
            raise NotRecordingError("episode already ended")
        self._done = True
        after = tick_devices(self.current)
        return Episode(self.episode_id, label, self.before, tuple(self.events), after)


def involved_objects(episode: Episode) -> frozenset[str]:
    """Union of touched objects over the episode's events."""
    out: set[str] = set()
    for event in episode.events:
        out.update(event.touched)
    return frozenset(out)


def replay(episode: Episode) -> WorldState:
    """Re-run the trace from the before-snapshot (with the closing tick)."""
    state = episode.before
    for event in episode.events:
        state = apply_action(state, event.action)
    return tick_devices(state)


def check_replay(episode: Episode) -> bool:
    """Episode integrity: replaying the trace must reproduce the after-state."""
    return replay(episode).facts == episode.after.facts


# --- episode log files --------------------------------------------------------

def episode_to_doc(tree: TypeTree, episode: Episode) -> dict:
    scene = serialize_domain(tree, episode.before)
    return {
        "id": episode.id,
        "label": episode.label,
        "types": scene["types"],
        "zones": scene["zones"],
        "objects": scene["objects"],
        "before": [str(f) for f in episode.before.sorted_facts()],
        "events": [
            {
                "index": e.index,
                "actor": e.actor,
                "action": f"{e.action.kind}({', '.join(e.action.args)})",
                "touched": sorted(e.touched),
            }
            for e in episode.events
        ],
        "after": [str(f) for f in episode.after.sorted_facts()],
    }


def episode_from_doc(doc: dict) -> tuple[TypeTree, Episode]:
    base = {k: doc.get(k) for k in ("types", "zones", "objects")}
    tree, before = load_domain({**base, "facts": doc.get("before", [])})
    _, after = load_domain({**base, "facts": doc.get("after", [])})
    events = []
    for entry in doc.get("events", []):
        head = Literal.parse(entry["action"])
        action = PrimitiveAction.make(head.predicate, entry["actor"], *head.args)
        events.append(
            ActionEvent(
                int(entry["index"]),
                entry["actor"],
                action,
                frozenset(entry.get("touched", [])),
            )
        )
    episode = Episode(
        str(doc.get("id", "ep-1")),
        str(doc.get("label", "")),
        before,
        tuple(events),
        after,
    )
    return tree, episode


def save_episode(path: str, tree: TypeTree, episode: Episode) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(episode_to_doc(tree, episode), fh, sort_keys=False)


def load_episode(path: str) -> tuple[TypeTree, Episode]:
    with open(path, "r", encoding="utf-8") as fh:
        return episode_from_doc(yaml.safe_load(fh))
