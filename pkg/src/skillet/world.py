"""Typed-object kitchen world: discrete fluents, manipulations, device dynamics.

States are immutable values; every operation returns a fresh state and never
mutates its input, so snapshots can be shared freely across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

import yaml

from .errors import (
    ActionError,
    CapacityViolation,
    ContainmentCycle,
    DeviceFlagViolation,
    DomainError,
    DuplicateIdError,
    FunctionalViolation,
    RegistryMismatch,
    UnknownIdError,
    UnknownParentError,
    UnknownTypeError,
    VocabularyError,
)

ROOT_TYPE = "thing"
ZONE_TYPE = "zone"

TEMP_LEVELS = ("cold", "ambient", "hot")

#: predicate name -> arity
VOCABULARY = {
    "at": 2,
    "in": 2,
    "holding": 2,
    "open": 1,
    "powered": 1,
    "temp": 2,
    "toasted": 1,
    "brewed": 1,
}

ACTION_KINDS = {
    "pick": 1,
    "place": 2,
    "open": 1,
    "close": 1,
    "press": 1,
    "pour": 2,
}

_LITERAL_RE = re.compile(r"^\s*([a-z_][\w-]*)\s*\(\s*([^()]*?)\s*\)\s*$")


class Literal:
    """A ground or lifted atom, e.g. ``at(bread1, counter)``.

    Instances are interned with a cached hash: fact sets are manipulated
    constantly during search, and interning turns most membership probes
    into pointer comparisons.
    """

    __slots__ = ("predicate", "args", "_hash")
    _intern: dict[tuple[str, tuple[str, ...]], "Literal"] = {}

    def __new__(cls, predicate: str, args: tuple[str, ...] = ()):
        args = tuple(args)
        key = (predicate, args)
        cached = cls._intern.get(key)
        if cached is not None:
            return cached
        inst = super().__new__(cls)
        inst.predicate = predicate
        inst.args = args
        inst._hash = hash(key)
        cls._intern[key] = inst
        return inst

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Literal):
            return NotImplemented
        return self.predicate == other.predicate and self.args == other.args

    def __lt__(self, other: "Literal") -> bool:
        return (self.predicate, self.args) < (other.predicate, other.args)

    def __reduce__(self):
        return (Literal, (self.predicate, self.args))

    def __repr__(self) -> str:
        return f"Literal({self.predicate!r}, {self.args!r})"

    def __str__(self) -> str:
        return f"{self.predicate}({', '.join(self.args)})"

    @classmethod
    def parse(cls, text: str) -> "Literal":
        m = _LITERAL_RE.match(text)
        if not m:
            raise VocabularyError(f"cannot parse literal {text!r}")
        name, body = m.group(1), m.group(2)
        args = tuple(a.strip() for a in body.split(",")) if body.strip() else ()
        return cls(name, args)


def lit(predicate: str, *args: str) -> Literal:
    return Literal(predicate, args)


class PrimitiveAction(NamedTuple):
    """One manipulation: pick/place/open/close/press/pour."""

    kind: str
    actor: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.kind}({', '.join(self.args)})"

    @classmethod
    def make(cls, kind: str, actor: str, *args: str) -> "PrimitiveAction":
        if kind not in ACTION_KINDS:
            raise VocabularyError(f"unknown action kind {kind!r}")
        if len(args) != ACTION_KINDS[kind]:
            raise VocabularyError(
                f"{kind} takes {ACTION_KINDS[kind]} argument(s), got {len(args)}"
            )
        return cls(kind, actor, tuple(args))


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    type: str
    capacity: int = 0


@dataclass(frozen=True)
class Traits:
    device: bool = False
    pressable: bool = False
    door: bool = False
    fixed: bool = False
    vessel: bool = False
    portion: bool = False
    infuser: bool = False
    agent: bool = False


#: Built-in behaviour anchored on well-known type names.  A domain file opts
#: into a behaviour by descending its types from one of these names.
TYPE_TRAITS: dict[str, Traits] = {
    "toaster": Traits(device=True, pressable=True),
    "microwave": Traits(device=True, pressable=True, door=True, fixed=True),
    "fridge": Traits(device=True, door=True, fixed=True),
    "kettle": Traits(device=True, pressable=True, vessel=True),
    "vessel": Traits(vessel=True),
    "liquid": Traits(portion=True),
    "teabag": Traits(infuser=True),
    "agent": Traits(agent=True),
    "human": Traits(agent=True),
    "robot": Traits(agent=True),
}

#: Device types with tick rules, in the fixed firing order.
HEAT_DEVICE_RULES = ("microwave", "fridge", "kettle")


class TypeTree:
    """Single-rooted object type hierarchy."""

    def __init__(self, parents: Mapping[str, str]):
        self._parent = dict(parents)
        self._children: dict[str, list[str]] = {ROOT_TYPE: []}
        for child, parent in sorted(self._parent.items()):
            self._children.setdefault(parent, []).append(child)
            self._children.setdefault(child, [])
        self._ancestors: dict[str, tuple[str, ...]] = {}

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]]) -> "TypeTree":
        parents: dict[str, str] = {}
        for child, parent in edges:
            if child == ROOT_TYPE:
                raise UnknownParentError(f"{ROOT_TYPE!r} cannot have a parent")
            if child in parents:
                raise DuplicateIdError(f"duplicate type {child!r}")
            parents[child] = parent
        tree = cls(parents)
        for child, parent in parents.items():
            if parent != ROOT_TYPE and parent not in parents:
                raise UnknownParentError(f"type {child!r} has unknown parent {parent!r}")
        # no cycles: every node must reach the root
        for name in parents:
            tree.ancestors(name)
        return tree

    def __contains__(self, name: str) -> bool:
        return name == ROOT_TYPE or name in self._parent

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TypeTree):
            return NotImplemented
        return self._parent == other._parent

    def __hash__(self) -> int:
        return hash(frozenset(self._parent.items()))

    def names(self) -> list[str]:
        return sorted([ROOT_TYPE, *self._parent])

    def parent(self, name: str) -> str | None:
        return self._parent.get(name)

    def children(self, name: str) -> list[str]:
        return list(self._children.get(name, []))

    def ancestors(self, name: str) -> tuple[str, ...]:
        """Chain from ``name`` up to and including the root."""
        cached = self._ancestors.get(name)
        if cached is not None:
            return cached
        chain = [name]
        seen = {name}
        cur = name
        while cur != ROOT_TYPE:
            cur = self._parent.get(cur)
            if cur is None:
                raise UnknownTypeError(f"type {chain[0]!r} not rooted at {ROOT_TYPE!r}")
            if cur in seen:
                raise UnknownParentError(f"type cycle through {cur!r}")
            seen.add(cur)
            chain.append(cur)
        result = tuple(chain)
        self._ancestors[name] = result
        return result

    def is_subtype(self, name: str, ancestor: str) -> bool:
        if name == ZONE_TYPE or ancestor == ZONE_TYPE:
            return name == ancestor
        return ancestor in self.ancestors(name)

    def lca(self, a: str, b: str) -> str:
        if a == ZONE_TYPE or b == ZONE_TYPE:
            if a == b:
                return a
            raise UnknownTypeError(f"no common ancestor of {a!r} and {b!r}")
        chain_a = self.ancestors(a)
        chain_b = set(self.ancestors(b))
        for t in chain_a:
            if t in chain_b:
                return t
        return ROOT_TYPE

    def siblings(self, name: str) -> list[str]:
        parent = self._parent.get(name)
        if parent is None:
            return []
        return sorted(c for c in self._children.get(parent, []) if c != name)

    def traits_of(self, name: str) -> Traits:
        if name == ZONE_TYPE:
            return Traits()
        for t in self.ancestors(name):
            if t in TYPE_TRAITS:
                return TYPE_TRAITS[t]
        return Traits()

    def device_rule(self, name: str) -> str | None:
        """Which tick rule (if any) governs devices of this type."""
        for t in self.ancestors(name):
            if t in HEAT_DEVICE_RULES or t == "toaster":
                return t
        return None

    def edges(self) -> list[tuple[str, str]]:
        return sorted(self._parent.items())


class WorldContext:
    """Shared derived tables for one (tree, registry, zones) combination."""

    def __init__(
        self,
        tree: TypeTree,
        registry: Mapping[str, ObjectInstance],
        zones: Mapping[str, tuple[float, float]],
    ):
        self.tree = tree
        self.registry = dict(registry)
        self.zones = dict(zones)
        self.traits: dict[str, Traits] = {}
        self.rule_kind: dict[str, str | None] = {}
        for oid, obj in registry.items():
            self.traits[oid] = tree.traits_of(obj.type)
            self.rule_kind[oid] = tree.device_rule(obj.type)
        self.agents = sorted(o for o, t in self.traits.items() if t.agent)
        self.objects = sorted(o for o in registry if not self.traits[o].agent)
        self.containers = sorted(
            o for o in self.objects if registry[o].capacity > 0
        )
        self.pickables = sorted(
            o
            for o in self.objects
            if not (self.traits[o].portion or self.traits[o].fixed)
        )
        self.vessels = sorted(o for o in self.objects if self.traits[o].vessel)
        self.devices = sorted(o for o in self.objects if self.traits[o].device)
        # candidate-literal tables so hot paths probe membership instead of
        # scanning whole fact sets
        self.loc_lits: dict[str, tuple[Literal, ...]] = {}
        for o in self.objects:
            cands = [Literal("at", (o, z)) for z in sorted(zones)]
            cands += [Literal("in", (o, c)) for c in self.containers if c != o]
            cands += [Literal("holding", (a, o)) for a in self.agents]
            self.loc_lits[o] = tuple(cands)
        self.content_lits: dict[str, tuple[tuple[str, Literal], ...]] = {
            c: tuple(
                (x, Literal("in", (x, c))) for x in self.objects if x != c
            )
            for c in self.containers
        }
        self.holding_lits: dict[str, tuple[tuple[str, Literal], ...]] = {
            a: tuple((o, Literal("holding", (a, o))) for o in self.objects)
            for a in self.agents
        }

    def capacity(self, oid: str) -> int:
        return self.registry[oid].capacity

    def location_of(self, facts: frozenset[Literal], oid: str) -> Literal | None:
        for cand in self.loc_lits.get(oid, ()):
            if cand in facts:
                return cand
        return None

    def contents(self, facts: frozenset[Literal], container: str) -> list[str]:
        return [
            x for x, cand in self.content_lits.get(container, ()) if cand in facts
        ]

    def held_by(self, facts: frozenset[Literal], actor: str) -> str | None:
        for o, cand in self.holding_lits.get(actor, ()):
            if cand in facts:
                return o
        return None

    def require(self, oid: str) -> ObjectInstance:
        obj = self.registry.get(oid)
        if obj is None:
            raise UnknownIdError(f"unknown object {oid!r}")
        return obj


# --- fact-set helpers (hot path: operate on plain frozensets of Literal) ----

def location_of(facts: frozenset[Literal], oid: str) -> Literal | None:
    """The unique location fact of ``oid`` (at/in/holding), if any."""
    for f in facts:
        if (f.predicate in ("at", "in") and f.args[0] == oid) or (
            f.predicate == "holding" and f.args[1] == oid
        ):
            return f
    return None


def direct_contents(facts: frozenset[Literal], container: str) -> list[str]:
    return sorted(f.args[0] for f in facts if f.predicate == "in" and f.args[1] == container)


def nested_contents(facts: frozenset[Literal], container: str) -> list[str]:
    """Transitive contents, the container itself excluded."""
    out: list[str] = []
    frontier = [container]
    while frontier:
        cur = frontier.pop()
        inner = direct_contents(facts, cur)
        out.extend(inner)
        frontier.extend(inner)
    return sorted(set(out))


def holding_of(facts: frozenset[Literal], actor: str) -> str | None:
    for f in facts:
        if f.predicate == "holding" and f.args[0] == actor:
            return f.args[1]
    return None


def _blocked_by(ctx: WorldContext, facts: frozenset[Literal], oid: str) -> str | None:
    """Closed doored device on the containment chain above ``oid``, if any."""
    cur = oid
    for _ in range(len(ctx.registry) + 1):
        loc = ctx.location_of(facts, cur)
        if loc is None or loc.predicate != "in":
            return None
        outer = loc.args[1]
        if ctx.traits.get(outer, Traits()).door and lit("open", outer) not in facts:
            return outer
        cur = outer
    return None


def _grounded_at_zone(ctx: WorldContext, facts: frozenset[Literal], oid: str) -> bool:
    """True when the containment chain of ``oid`` ends at a zone."""
    cur = oid
    for _ in range(len(ctx.registry) + 1):
        loc = ctx.location_of(facts, cur)
        if loc is None:
            return False
        if loc.predicate == "at":
            return True
        if loc.predicate == "holding":
            return False
        cur = loc.args[1]
    return False


def _nested_contents_fast(
    ctx: WorldContext, facts: frozenset[Literal], container: str
) -> list[str]:
    out: list[str] = []
    frontier = [container]
    while frontier:
        inner = ctx.contents(facts, frontier.pop())
        out.extend(inner)
        frontier.extend(inner)
    return out


def _reach_check(ctx: WorldContext, facts: frozenset[Literal], oid: str) -> str | None:
    """Failing condition keeping ``oid`` out of reach, or None."""
    if not _grounded_at_zone(ctx, facts, oid):
        return f"at({oid}, ?) or in({oid}, ?)"
    blocker = _blocked_by(ctx, facts, oid)
    if blocker is not None:
        return f"open({blocker})"
    return None


def _maybe_brew(ctx: WorldContext, facts: set[Literal], container: str) -> None:
    """Steeping rule: infuser plus hot portion in one vessel brews it."""
    if lit("brewed", container) in facts:
        return
    if not ctx.traits.get(container, Traits()).vessel:
        return
    inner = [x for x, cand in ctx.content_lits.get(container, ()) if cand in facts]
    has_infuser = any(ctx.traits[x].infuser for x in inner)
    has_hot = any(
        ctx.traits[x].portion and lit("temp", x, "hot") in facts for x in inner
    )
    if has_infuser and has_hot:
        facts.add(lit("brewed", container))


def _set_temp(facts: set[Literal], oid: str, level: str) -> None:
    for old in TEMP_LEVELS:
        if old != level:
            facts.discard(lit("temp", oid, old))
    facts.add(lit("temp", oid, level))


def check_action(
    ctx: WorldContext, facts: frozenset[Literal], action: PrimitiveAction
) -> str | None:
    """Failing precondition of ``action`` (as a literal/condition string), or None."""
    actor = action.actor
    kind = action.kind
    if actor not in ctx.registry or not ctx.traits[actor].agent:
        raise UnknownIdError(f"unknown agent {actor!r}")
    for i, oid in enumerate(action.args):
        if oid in ctx.registry:
            continue
        if oid in ctx.zones:
            if kind == "place" and i == 1:
                continue
            return f"object({oid})"
        raise UnknownIdError(f"unknown id {oid!r}")
    if kind == "pick":
        (o,) = action.args
        tr = ctx.traits[o]
        if tr.agent or tr.portion or tr.fixed:
            return f"pickable({o})"
        if ctx.held_by(facts, actor) is not None:
            return f"holding({actor}, nothing)"
        return _reach_check(ctx, facts, o)

    if kind == "place":
        o, target = action.args
        if lit("holding", actor, o) not in facts:
            return f"holding({actor}, {o})"
        if target in ctx.zones:
            return None
        if ctx.capacity(target) <= 0:
            return f"container({target})"
        if ctx.traits[target].door and lit("open", target) not in facts:
            return f"open({target})"
        reach = _reach_check(ctx, facts, target)
        if reach is not None:
            return reach
        if target == o or target in _nested_contents_fast(ctx, facts, o):
            return f"outside({target}, {o})"
        if len(ctx.contents(facts, target)) >= ctx.capacity(target):
            return f"capacity({target})"
        return None

    if kind in ("open", "close"):
        (d,) = action.args
        if not ctx.traits[d].door:
            return f"door({d})"
        is_open = lit("open", d) in facts
        if kind == "open" and is_open:
            return f"closed({d})"
        if kind == "close" and not is_open:
            return f"open({d})"
        return None

    if kind == "press":
        (d,) = action.args
        if not ctx.traits[d].device:
            return f"device({d})"
        if not ctx.traits[d].pressable:
            return f"pressable({d})"
        return None

    if kind == "pour":
        src, dst = action.args
        if lit("holding", actor, src) not in facts:
            return f"holding({actor}, {src})"
        if not ctx.traits[src].vessel:
            return f"vessel({src})"
        if not ctx.traits[dst].vessel:
            return f"vessel({dst})"
        if src == dst:
            return f"distinct({src}, {dst})"
        if ctx.traits[dst].door and lit("open", dst) not in facts:
            return f"open({dst})"
        reach = _reach_check(ctx, facts, dst)
        if reach is not None:
            return reach
        moved = [x for x in ctx.contents(facts, src) if ctx.traits[x].portion]
        if not moved:
            return f"in(liquid, {src})"
        if len(ctx.contents(facts, dst)) + len(moved) > ctx.capacity(dst):
            return f"capacity({dst})"
        return None

    raise VocabularyError(f"unknown action kind {kind!r}")


def apply_action_facts(
    ctx: WorldContext, facts: frozenset[Literal], action: PrimitiveAction
) -> frozenset[Literal]:
    """Apply a legal action to a fact set.  Callers must check legality first."""
    out = set(facts)
    actor, kind = action.actor, action.kind
    if kind == "pick":
        (o,) = action.args
        out.discard(ctx.location_of(facts, o))
        out.add(lit("holding", actor, o))
    elif kind == "place":
        o, target = action.args
        out.discard(lit("holding", actor, o))
        if target in ctx.zones:
            out.add(lit("at", o, target))
        else:
            out.add(lit("in", o, target))
            _maybe_brew(ctx, out, target)
    elif kind == "open":
        out.add(lit("open", action.args[0]))
    elif kind == "close":
        out.discard(lit("open", action.args[0]))
    elif kind == "press":
        (d,) = action.args
        if ctx.rule_kind.get(d) == "toaster":
            for x in _nested_contents_fast(ctx, facts, d):
                out.add(lit("toasted", x))
        else:
            out.add(lit("powered", d))
    elif kind == "pour":
        src, dst = action.args
        for x in ctx.contents(facts, src):
            if ctx.traits[x].portion:
                out.discard(lit("in", x, src))
                out.add(lit("in", x, dst))
        _maybe_brew(ctx, out, dst)
    return frozenset(out)


def tick_facts(ctx: WorldContext, facts: frozenset[Literal]) -> frozenset[Literal]:
    """One synchronous device pass, rule order microwave -> fridge -> kettle."""
    out = set(facts)
    for rule in HEAT_DEVICE_RULES:
        for d in ctx.devices:
            if ctx.rule_kind[d] != rule:
                continue
            if rule == "microwave":
                if lit("open", d) in out or lit("powered", d) not in out:
                    continue
                inner = nested_contents(frozenset(out), d)
                if not inner:
                    continue
                for x in inner:
                    _set_temp(out, x, "hot")
                out.discard(lit("powered", d))
            elif rule == "fridge":
                if lit("open", d) in out:
                    continue
                for x in nested_contents(frozenset(out), d):
                    _set_temp(out, x, "cold")
            elif rule == "kettle":
                if lit("powered", d) not in out:
                    continue
                inner = nested_contents(frozenset(out), d)
                if not inner:
                    continue
                for x in inner:
                    _set_temp(out, x, "hot")
                out.discard(lit("powered", d))
    return frozenset(out)


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot: registry, zone geometry, facts and object poses."""

    registry: Mapping[str, ObjectInstance]
    zones: Mapping[str, tuple[float, float]]
    facts: frozenset[Literal]
    poses: Mapping[str, tuple[float, float]]
    ctx: WorldContext = field(compare=False, repr=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WorldState):
            return NotImplemented
        return (
            self.registry == other.registry
            and self.zones == other.zones
            and self.facts == other.facts
            and self.poses == other.poses
        )

    def __hash__(self) -> int:
        return hash((frozenset(self.registry), frozenset(self.zones), self.facts))

    def replace_facts(self, facts: frozenset[Literal]) -> "WorldState":
        return WorldState(self.registry, self.zones, facts, self.poses, self.ctx)

    def object_ids(self) -> list[str]:
        return sorted(self.registry)

    def pose_of(self, oid: str) -> tuple[float, float] | None:
        return self.poses.get(oid)

    def holds(self, literal: Literal) -> bool:
        return literal in self.facts

    def sorted_facts(self) -> list[Literal]:
        return sorted(self.facts)


def cascade_pose(
    state_facts: frozenset[Literal],
    poses: dict[str, tuple[float, float]],
    oid: str,
    pos: tuple[float, float],
) -> None:
    poses[oid] = pos
    for inner in nested_contents(state_facts, oid):
        poses[inner] = pos


def apply_action(state: WorldState, action: PrimitiveAction) -> WorldState:
    """Apply one manipulation, returning a new state.

    Raises ActionError naming the failing condition when a built-in
    precondition does not hold.
    """
    ctx = state.ctx
    failing = check_action(ctx, state.facts, action)
    if failing is not None:
        raise ActionError(
            f"cannot {action.kind} {', '.join(action.args)}: requires {failing}",
            condition=failing,
        )
    new_facts = apply_action_facts(ctx, state.facts, action)
    poses = dict(state.poses)
    if action.kind == "pick":
        # a held object has no resting pose until it is put down again
        o = action.args[0]
        poses.pop(o, None)
        for inner in nested_contents(new_facts, o):
            poses.pop(inner, None)
    elif action.kind == "place":
        o, target = action.args
        pos = ctx.zones.get(target) or poses.get(target)
        if pos is not None:
            cascade_pose(new_facts, poses, o, pos)
    elif action.kind == "pour":
        _, dst = action.args
        pos = poses.get(dst)
        if pos is not None:
            for f in new_facts:
                if f.predicate == "in" and f.args[1] == dst:
                    poses[f.args[0]] = pos
    return WorldState(state.registry, state.zones, new_facts, poses, ctx)


def tick_devices(state: WorldState) -> WorldState:
    """Run one device-dynamics pass (microwave, fridge, kettle order)."""
    return state.replace_facts(tick_facts(state.ctx, state.facts))


def diff_states(
    before: WorldState, after: WorldState
) -> tuple[frozenset[Literal], frozenset[Literal]]:
    """(added, removed) fact sets between two snapshots of one registry."""
    if dict(before.registry) != dict(after.registry):
        raise RegistryMismatch("states describe different object registries")
    return after.facts - before.facts, before.facts - after.facts


# --- state validation --------------------------------------------------------

def validate_world(
    tree: TypeTree,
    registry: Mapping[str, ObjectInstance],
    zones: Mapping[str, tuple[float, float]],
    facts: Iterable[Literal],
) -> None:
    """Raise a distinctly-typed DomainError on the first invariant violation."""
    facts = list(facts)
    ids = set(registry) | set(zones)
    for f in facts:
        arity = VOCABULARY.get(f.predicate)
        if arity is None:
            raise VocabularyError(f"unknown predicate {f.predicate!r} in {f}")
        if len(f.args) != arity:
            raise VocabularyError(f"{f.predicate} expects {arity} args: {f}")
        if f.predicate == "temp":
            if f.args[1] not in TEMP_LEVELS:
                raise VocabularyError(f"bad temperature level in {f}")
            if f.args[0] not in registry:
                raise UnknownIdError(f"unknown id {f.args[0]!r} in {f}")
        elif f.predicate == "at":
            if f.args[0] not in registry:
                raise UnknownIdError(f"unknown id {f.args[0]!r} in {f}")
            if f.args[1] not in zones:
                raise UnknownIdError(f"unknown zone {f.args[1]!r} in {f}")
        else:
            for a in f.args:
                if a not in ids:
                    raise UnknownIdError(f"unknown id {a!r} in {f}")

    traits = {oid: tree.traits_of(obj.type) for oid, obj in registry.items()}
    fact_set = frozenset(facts)
    for f in facts:
        if f.predicate in ("open", "powered"):
            if not traits[f.args[0]].device:
                raise DeviceFlagViolation(f"{f} on non-device object")
        if f.predicate == "holding":
            if not traits[f.args[0]].agent:
                raise FunctionalViolation(f"{f}: holder is not an agent")
            if traits[f.args[1]].agent:
                raise FunctionalViolation(f"{f}: agents cannot be held")
        if f.predicate == "in" and traits[f.args[1]].agent:
            raise FunctionalViolation(f"{f}: agents are not containers")

    for oid, obj in sorted(registry.items()):
        if traits[oid].agent:
            bad = [f for f in facts if f.predicate in ("at", "in", "temp") and f.args[0] == oid]
            if bad:
                raise FunctionalViolation(f"agent {oid!r} carries object fluents: {bad[0]}")
            continue
        locs = [
            f
            for f in facts
            if (f.predicate in ("at", "in") and f.args[0] == oid)
            or (f.predicate == "holding" and f.args[1] == oid)
        ]
        if len(locs) != 1:
            raise FunctionalViolation(
                f"object {oid!r} must have exactly one location fact, found {len(locs)}"
            )
        temps = [f for f in facts if f.predicate == "temp" and f.args[0] == oid]
        if len(temps) != 1:
            raise FunctionalViolation(
                f"object {oid!r} must have exactly one temp fact, found {len(temps)}"
            )
    for cid, obj in sorted(registry.items()):
        inner = direct_contents(fact_set, cid)
        if inner and obj.capacity <= 0:
            raise CapacityViolation(f"{cid!r} is not a container but contains {inner}")
        if len(inner) > obj.capacity:
            raise CapacityViolation(
                f"{cid!r} holds {len(inner)} > capacity {obj.capacity}"
            )
    # containment must ground out at zones or hands, never cycle
    for oid in registry:
        if traits[oid].agent:
            continue
        seen = set()
        cur = oid
        while True:
            loc = location_of(fact_set, cur)
            if loc is None or loc.predicate != "in":
                break
            cur = loc.args[1]
            if cur in seen or cur == oid:
                raise ContainmentCycle(f"containment cycle through {oid!r}")
            seen.add(cur)


# --- domain document ----------------------------------------------------------

def load_domain(doc: Mapping | str) -> tuple[TypeTree, WorldState]:
    """Build (tree, initial state) from a domain document (mapping or YAML text)."""
    if isinstance(doc, str):
        doc = yaml.safe_load(doc) or {}
    if not isinstance(doc, Mapping):
        raise DomainError("domain document must be a mapping")

    edges: list[tuple[str, str]] = []
    for entry in doc.get("types", []) or []:
        if not isinstance(entry, Mapping) or "name" not in entry or "parent" not in entry:
            raise DomainError(f"bad type entry: {entry!r}")
        edges.append((str(entry["name"]), str(entry["parent"])))
    tree = TypeTree.from_edges(edges)

    zones: dict[str, tuple[float, float]] = {}
    for entry in doc.get("zones", []) or []:
        zid = str(entry["id"])
        if zid in zones:
            raise DuplicateIdError(f"duplicate zone id {zid!r}")
        x, y = entry.get("pos", [0.0, 0.0])
        zones[zid] = (float(x), float(y))

    registry: dict[str, ObjectInstance] = {}
    for entry in doc.get("objects", []) or []:
        oid = str(entry["id"])
        if oid in registry or oid in zones:
            raise DuplicateIdError(f"duplicate id {oid!r}")
        otype = str(entry["type"])
        if otype not in tree:
            raise UnknownTypeError(f"object {oid!r} has unknown type {otype!r}")
        registry[oid] = ObjectInstance(oid, otype, int(entry.get("capacity", 0) or 0))

    facts: set[Literal] = set()
    for text in doc.get("facts", []) or []:
        f = Literal.parse(str(text))
        if f in facts:
            raise DuplicateIdError(f"duplicate fact {f}")
        facts.add(f)

    # ambient is the default temperature for anything not stated
    traits = {oid: tree.traits_of(obj.type) for oid, obj in registry.items()}
    stated = {f.args[0] for f in facts if f.predicate == "temp"}
    for oid in registry:
        if not traits[oid].agent and oid not in stated:
            facts.add(lit("temp", oid, "ambient"))

    validate_world(tree, registry, zones, facts)
    ctx = WorldContext(tree, registry, zones)
    fact_set = frozenset(facts)

    poses: dict[str, tuple[float, float]] = {}
    for oid, xy in (doc.get("poses", {}) or {}).items():
        if oid not in registry:
            raise UnknownIdError(f"pose given for unknown object {oid!r}")
        poses[str(oid)] = (float(xy[0]), float(xy[1]))

    def resolve_pose(oid: str, trail: tuple[str, ...] = ()) -> tuple[float, float] | None:
        if oid in poses:
            return poses[oid]
        if oid in trail:
            raise ContainmentCycle(f"containment cycle through {oid!r}")
        loc = location_of(fact_set, oid)
        if loc is None:
            return None
        if loc.predicate == "at":
            return zones[loc.args[1]]
        if loc.predicate == "in":
            return resolve_pose(loc.args[1], trail + (oid,))
        return None

    for oid in registry:
        if traits[oid].agent:
            continue
        pos = resolve_pose(oid)
        if pos is not None:
            poses[oid] = pos

    return tree, WorldState(registry, zones, fact_set, poses, ctx)


def serialize_domain(tree: TypeTree, state: WorldState) -> dict:
    """Document equivalent to the one that produced (tree, state)."""
    return {
        "types": [
            {"name": child, "parent": parent} for child, parent in tree.edges()
        ],
        "zones": [
            {"id": zid, "pos": [px, py]}
            for zid, (px, py) in sorted(state.zones.items())
        ],
        "objects": [
            {"id": obj.id, "type": obj.type, **({"capacity": obj.capacity} if obj.capacity else {})}
            for obj in sorted(state.registry.values(), key=lambda o: o.id)
        ],
        "facts": [str(f) for f in state.sorted_facts()],
        "poses": {oid: [px, py] for oid, (px, py) in sorted(state.poses.items())},
    }


def load_domain_file(path: str) -> tuple[TypeTree, WorldState, dict]:
    """Load a domain file; returns the raw document too (goal/assist sections)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh) or {}
    tree, state = load_domain(doc)
    return tree, state, doc
