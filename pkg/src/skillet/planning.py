"""Forward state-space planner over primitives and learned skills.

Search is best-first on f = g + h_add (additive delete relaxation), FIFO on
ties.  Because h_add is not admissible, the search keeps exploring below the
incumbent's cost bound (pruning with the admissible h_max companion) until the
space is exhausted, so the returned plan cost is exactly optimal at the small
problem sizes this engine targets.
"""

from __future__ import annotations

import heapq
import itertools
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import (
    ActionError,
    GoalInstanceError,
    PlanBudgetError,
    StepInfeasibleError,
    UnknownCommandError,
    UnsolvableError,
    VocabularyError,
)
from .skills import KnowledgeBase, SkillSchema, candidate_bindings, ground_effects
from .world import (
    Literal,
    cascade_pose,
    PrimitiveAction,
    VOCABULARY,
    WorldContext,
    WorldState,
    apply_action,
    apply_action_facts,
    check_action,
    direct_contents,
    lit,
    nested_contents,
)

INF = 10 ** 9

ORIGIN_SKILL = "learned-skill"
ORIGIN_PRIMITIVE = "primitive"


@dataclass(frozen=True)
class PlannerConfig:
    node_budget: int = 200_000


@dataclass(frozen=True)
class Goal:
    literals: frozenset[Literal]
    text: str = ""

    def __post_init__(self):
        if not self.literals:
            raise VocabularyError("goal must contain at least one literal")
        for f in self.literals:
            if f.predicate not in VOCABULARY:
                raise VocabularyError(f"unknown predicate in goal literal {f}")

    def holds_in(self, facts: frozenset[Literal]) -> bool:
        return self.literals <= facts


@dataclass(frozen=True)
class GroundOperator:
    """One applicable step: a manipulation primitive or a grounded skill.

    For primitives the literal sets are the nominal (relaxed) model; their
    exact semantics live in the world simulator.  For skills the sets are
    exact.
    """

    name: str
    origin: str
    actor: str
    args: tuple[str, ...]
    preconds: frozenset[Literal]
    adds: frozenset[Literal]
    dels: frozenset[Literal]
    action: PrimitiveAction | None = None
    schema: str = ""
    cost: int = 1
    #: single literal that must hold for the operator to possibly apply;
    #: lets the successor loop skip most operators with one membership probe
    gate: Literal | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.origin, self.name)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Plan:
    goal: Goal
    steps: tuple[GroundOperator, ...]
    trajectory: tuple[WorldState, ...]
    status: str = "proposed"
    rejected_step: int | None = None

    @property
    def cost(self) -> int:
        return len(self.steps)


# --- operator pool -----------------------------------------------------------

def _primitive(ctx: WorldContext, action: PrimitiveAction) -> GroundOperator:
    pre, adds = _relaxed_primitive_model(ctx, action)
    gate = None
    if action.kind in ("place", "pour"):
        gate = lit("holding", action.actor, action.args[0])
    elif action.kind == "close":
        gate = lit("open", action.args[0])
    return GroundOperator(
        name=str(action),
        origin=ORIGIN_PRIMITIVE,
        actor=action.actor,
        args=action.args,
        preconds=frozenset(pre),
        adds=frozenset(adds),
        dels=frozenset(),
        action=action,
        gate=gate,
    )


def _relaxed_primitive_model(
    ctx: WorldContext, action: PrimitiveAction
) -> tuple[tuple[Literal, ...], tuple[Literal, ...]]:
    """Delete-relaxation view of a primitive: subset of its real preconditions,
    superset of its possible effects (keeps h_max admissible)."""
    a = action.actor
    kind = action.kind
    if kind == "pick":
        (o,) = action.args
        return (), (lit("holding", a, o),)
    if kind == "place":
        o, t = action.args
        loc = lit("at", o, t) if t in ctx.zones else lit("in", o, t)
        adds = [loc]
        if t in ctx.registry and ctx.traits[t].vessel:
            adds.append(lit("brewed", t))
        return (lit("holding", a, o),), tuple(adds)
    if kind == "open":
        return (), (lit("open", action.args[0]),)
    if kind == "close":
        return (), ()
    if kind == "press":
        (d,) = action.args
        if ctx.rule_kind.get(d) == "toaster":
            return (), tuple(lit("toasted", o) for o in ctx.objects)
        return (), (lit("powered", d),)
    if kind == "pour":
        s, d = action.args
        adds = [lit("in", x, d) for x in ctx.objects if ctx.traits[x].portion]
        adds.append(lit("brewed", d))
        return (lit("holding", a, s),), tuple(adds)
    raise VocabularyError(f"unknown action kind {kind!r}")


def primitive_operators(state: WorldState, actor: str) -> list[GroundOperator]:
    """Every syntactically well-formed primitive for one actor, fixed order."""
    ctx = state.ctx
    ops: list[GroundOperator] = []
    targets = sorted(state.zones) + [c for c in ctx.containers]
    for o in ctx.pickables:
        ops.append(_primitive(ctx, PrimitiveAction.make("pick", actor, o)))
    for o in ctx.pickables:
        for t in targets:
            if t != o:
                ops.append(_primitive(ctx, PrimitiveAction.make("place", actor, o, t)))
    for d in ctx.devices:
        if ctx.traits[d].door:
            ops.append(_primitive(ctx, PrimitiveAction.make("open", actor, d)))
            ops.append(_primitive(ctx, PrimitiveAction.make("close", actor, d)))
    for d in ctx.devices:
        if ctx.traits[d].pressable:
            ops.append(_primitive(ctx, PrimitiveAction.make("press", actor, d)))
    for s in ctx.vessels:
        for d in ctx.vessels:
            if s != d:
                ops.append(_primitive(ctx, PrimitiveAction.make("pour", actor, s, d)))
    return ops


def ground_skill(
    schema: SkillSchema, state: WorldState, tree=None
) -> list[GroundOperator]:
    """All type-correct groundings of a schema against the present objects."""
    tree = tree if tree is not None else state.ctx.tree
    ops: list[GroundOperator] = []
    for binding in candidate_bindings(schema, tree, state):
        args = tuple(binding[p.var] for p in schema.params)
        pre, adds, dels = ground_effects(schema, binding)
        ops.append(
            GroundOperator(
                name=f"{schema.name}({', '.join(args)})",
                origin=ORIGIN_SKILL,
                actor="",
                args=args,
                preconds=pre,
                adds=adds,
                dels=dels,
                schema=schema.name,
                gate=min(pre) if pre else None,
            )
        )
    return ops


def operator_pool(
    state: WorldState, kb: KnowledgeBase, actor: str
) -> list[GroundOperator]:
    ops = primitive_operators(state, actor)
    for schema in kb.schemas:
        ops.extend(ground_skill(schema, state, kb.tree))
    return ops


# --- operator semantics --------------------------------------------------------

def _skill_result(
    ctx: WorldContext, facts: frozenset[Literal], op: GroundOperator
) -> frozenset[Literal] | str:
    """Resulting facts of a skill step, or the failing condition string."""
    if not op.preconds <= facts:
        missing = sorted(op.preconds - facts)
        return str(missing[0])
    result = (facts - op.dels) | op.adds
    touched_loc: set[str] = set()
    touched_temp: set[str] = set()
    gained: dict[str, int] = {}
    for f in op.adds | op.dels:
        if f.predicate in ("at", "in"):
            touched_loc.add(f.args[0])
        elif f.predicate == "holding":
            touched_loc.add(f.args[1])
        elif f.predicate == "temp":
            touched_temp.add(f.args[0])
    for f in op.adds:
        if f.predicate == "in":
            gained[f.args[1]] = gained.get(f.args[1], 0) + 1
    for oid in touched_loc:
        n = sum(
            1
            for f in result
            if (f.predicate in ("at", "in") and f.args[0] == oid)
            or (f.predicate == "holding" and f.args[1] == oid)
        )
        if n != 1:
            return f"one-location({oid})"
    for oid in touched_temp:
        n = sum(1 for f in result if f.predicate == "temp" and f.args[0] == oid)
        if n != 1:
            return f"one-temp({oid})"
    for c in gained:
        if len(direct_contents(result, c)) > ctx.capacity(c):
            return f"capacity({c})"
    return result


def operator_result(
    ctx: WorldContext, facts: frozenset[Literal], op: GroundOperator
) -> frozenset[Literal] | None:
    """Successor fact set, or None when the operator does not apply."""
    if op.origin == ORIGIN_PRIMITIVE:
        if check_action(ctx, facts, op.action) is not None:
            return None
        return apply_action_facts(ctx, facts, op.action)
    result = _skill_result(ctx, facts, op)
    return None if isinstance(result, str) else result


def apply_operator(state: WorldState, op: GroundOperator) -> WorldState:
    """Apply one plan step to a full world snapshot (poses included)."""
    if op.origin == ORIGIN_PRIMITIVE:
        return apply_action(state, op.action)
    result = _skill_result(state.ctx, state.facts, op)
    if isinstance(result, str):
        raise ActionError(
            f"skill step {op.name} not applicable: requires {result}",
            condition=result,
        )
    poses = dict(state.poses)
    for f in sorted(op.adds):
        if f.predicate == "at" and f.args[1] in state.zones:
            cascade_pose(result, poses, f.args[0], state.zones[f.args[1]])
        elif f.predicate == "in" and f.args[1] in poses:
            cascade_pose(result, poses, f.args[0], poses[f.args[1]])
    return WorldState(state.registry, state.zones, result, poses, state.ctx)


def successor_states(
    ctx: WorldContext, facts: frozenset[Literal], pool: Sequence[GroundOperator]
) -> list[tuple[int, frozenset[Literal]]]:
    """(operator index, next facts) for every applicable operator, pool order."""
    out = []
    for idx, op in enumerate(pool):
        gate = op.gate
        if gate is not None and gate not in facts:
            continue
        nxt = operator_result(ctx, facts, op)
        if nxt is not None:
            out.append((idx, nxt))
    return out


# --- delete relaxation heuristic ------------------------------------------------

class _Relaxation:
    """Joint h_add / h_max evaluation over the relaxed operator pool.

    Literals are interned to integers once per planning episode; each call
    then runs a counter-based generalized-Dijkstra pass with a bucket queue
    (costs are small non-negative integers under unit action costs).
    """

    def __init__(self, ctx: WorldContext, pool: Sequence[GroundOperator]):
        self._index: dict[Literal, int] = {}
        entries: list[tuple[tuple[Literal, ...], tuple[Literal, ...]]] = []
        for op in pool:
            if op.origin == ORIGIN_PRIMITIVE:
                pre, adds = _relaxed_primitive_model(ctx, op.action)
            else:
                pre, adds = tuple(op.preconds), tuple(op.adds)
            if adds:
                entries.append((pre, adds))
        for pre, adds in entries:
            for f in pre:
                self._index.setdefault(f, len(self._index))
            for f in adds:
                self._index.setdefault(f, len(self._index))
        self.n_lits = len(self._index)
        self.op_pre: list[tuple[int, ...]] = []
        self.op_add: list[tuple[int, ...]] = []
        self.watchers: list[list[int]] = [[] for _ in range(self.n_lits)]
        self.free_ops: list[int] = []
        for i, (pre, adds) in enumerate(entries):
            pre_ids = tuple(self._index[f] for f in pre)
            add_ids = tuple(self._index[f] for f in adds)
            self.op_pre.append(pre_ids)
            self.op_add.append(add_ids)
            if pre_ids:
                for p in set(pre_ids):
                    self.watchers[p].append(i)
            else:
                self.free_ops.append(i)

    def encode_goal(self, goal: frozenset[Literal]) -> tuple[int, ...]:
        """Goal literal ids; literals no operator adds are appended to the
        index so they still read as satisfied/unreachable per state."""
        ids = []
        for f in sorted(goal):
            i = self._index.get(f)
            if i is None:
                i = len(self._index)
                self._index[f] = i
                self.watchers.append([])
                self.n_lits += 1
            ids.append(i)
        return tuple(ids)

    def h_max(self, facts: frozenset[Literal], goal_ids: tuple[int, ...]) -> int:
        """Layered relaxed reachability; admissible under unit costs."""
        index = self._index
        level = [INF] * self.n_lits
        frontier: list[int] = []
        for f in facts:
            i = index.get(f)
            if i is not None and level[i] != 0:
                level[i] = 0
                frontier.append(i)
        unsat = [len(set(p)) for p in self.op_pre]
        ready = list(self.free_ops)
        depth = 0
        while True:
            for lit_id in frontier:
                for op in self.watchers[lit_id]:
                    unsat[op] -= 1
                    if unsat[op] == 0:
                        ready.append(op)
            frontier = []
            for op in ready:
                for a in self.op_add[op]:
                    if level[a] == INF:
                        level[a] = depth + 1
                        frontier.append(a)
            ready = []
            if not frontier:
                break
            depth += 1
        out = 0
        for g in goal_ids:
            if level[g] >= INF:
                return INF
            if level[g] > out:
                out = level[g]
        return out

    def h_add(self, facts: frozenset[Literal], goal_ids: tuple[int, ...]) -> int:
        """Additive delete-relaxation cost (bucketed Dijkstra; inadmissible)."""
        index = self._index
        ca = [INF] * self.n_lits
        buckets: list[list[int]] = [[]]
        for f in facts:
            i = index.get(f)
            if i is not None and ca[i] != 0:
                ca[i] = 0
                buckets[0].append(i)
        unsat = [len(set(p)) for p in self.op_pre]
        pre_sum = [0] * len(self.op_pre)
        for op in self.free_ops:
            for a in self.op_add[op]:
                if ca[a] > 1:
                    ca[a] = 1
                    while len(buckets) <= 1:
                        buckets.append([])
                    buckets[1].append(a)
        popped = [False] * self.n_lits
        level = 0
        while level < len(buckets):
            queue = buckets[level]
            idx = 0
            while idx < len(queue):
                lit_id = queue[idx]
                idx += 1
                if popped[lit_id] or ca[lit_id] != level:
                    continue
                popped[lit_id] = True
                for op in self.watchers[lit_id]:
                    pre_sum[op] += level
                    unsat[op] -= 1
                    if unsat[op] == 0:
                        na = pre_sum[op] + 1
                        for a in self.op_add[op]:
                            if na < ca[a]:
                                ca[a] = na
                                while len(buckets) <= na:
                                    buckets.append([])
                                buckets[na].append(a)
            level += 1
        out = 0
        for g in goal_ids:
            if ca[g] >= INF:
                return INF
            out += ca[g]
        return out

    def h(
        self, facts: frozenset[Literal], goal_ids: tuple[int, ...]
    ) -> tuple[int, int]:
        hm = self.h_max(facts, goal_ids)
        if hm >= INF:
            return INF, INF
        return self.h_add(facts, goal_ids), hm


# --- search ---------------------------------------------------------------------

def _search(
    ctx: WorldContext,
    init: frozenset[Literal],
    goal: Goal,
    pool: Sequence[GroundOperator],
    budget: int,
) -> list[int]:
    goal_set = goal.literals
    if goal_set <= init:
        return []

    relax = _Relaxation(ctx, pool)
    goal_ids = relax.encode_goal(goal_set)
    h0_add, h0_max = relax.h(init, goal_ids)
    if h0_max >= INF:
        raise UnsolvableError(f"goal unreachable: {goal.text or sorted(goal_set)}")

    hcache: dict[frozenset[Literal], tuple[int, int]] = {init: (h0_add, h0_max)}
    gbest: dict[frozenset[Literal], int] = {init: 0}
    parent: dict[frozenset[Literal], tuple[frozenset[Literal], int] | None] = {init: None}
    heap: list[tuple[int, int, int, int, frozenset[Literal]]] = [
        (h0_add, 0, 0, h0_max, init)
    ]
    counter = itertools.count(1)
    best_state: frozenset[Literal] | None = None
    best_cost = INF
    expanded = 0

    while heap:
        _, _, g, hmax_s, s = heapq.heappop(heap)
        if g > gbest.get(s, INF) or g + 1 >= best_cost or g + hmax_s >= best_cost:
            continue
        expanded += 1
        if expanded > budget:
            raise PlanBudgetError(f"node budget {budget} exceeded")
        g2 = g + 1
        child_bound = g2 + hmax_s - 1  # children satisfy h_max >= hmax_s - 1
        for idx, s2 in successor_states(ctx, s, pool):
            if g2 >= gbest.get(s2, INF):
                continue
            if goal_set <= s2:
                if g2 < best_cost:
                    gbest[s2] = g2
                    parent[s2] = (s, idx)
                    best_state, best_cost = s2, g2
                continue
            if child_bound >= best_cost:
                continue
            hs = hcache.get(s2)
            if hs is None:
                hs = relax.h(s2, goal_ids)
                hcache[s2] = hs
            h_add, h_max = hs
            if h_max >= INF or g2 + h_max >= best_cost:
                continue
            gbest[s2] = g2
            parent[s2] = (s, idx)
            heapq.heappush(heap, (g2 + h_add, next(counter), g2, h_max, s2))

    if best_state is None:
        raise UnsolvableError(f"goal unreachable: {goal.text or sorted(goal_set)}")
    path: list[int] = []
    cur = best_state
    while parent[cur] is not None:
        prev, idx = parent[cur]
        path.append(idx)
        cur = prev
    path.reverse()
    return path


def _build_plan(
    state: WorldState, goal: Goal, steps: Sequence[GroundOperator]
) -> Plan:
    trajectory = [state]
    for op in steps:
        trajectory.append(apply_operator(trajectory[-1], op))
    return Plan(goal, tuple(steps), tuple(trajectory))


def plan(
    state: WorldState,
    goal: Goal,
    kb: KnowledgeBase,
    actor: str = "robot",
    config: PlannerConfig = PlannerConfig(),
    banned: Iterable[GroundOperator] = (),
) -> Plan:
    """Optimal unit-cost plan from ``state`` to ``goal``.

    Raises UnsolvableError or PlanBudgetError.  Deterministic: identical
    inputs yield identical step lists.
    """
    pool = operator_pool(state, kb, actor)
    banned_keys = {op.key for op in banned}
    if banned_keys:
        pool = [op for op in pool if op.key not in banned_keys]
    path = _search(state.ctx, state.facts, goal, pool, config.node_budget)
    return _build_plan(state, goal, [pool[i] for i in path])


def replan_excluding(
    state: WorldState,
    goal: Goal,
    kb: KnowledgeBase,
    banned: Iterable[GroundOperator],
    actor: str = "robot",
    config: PlannerConfig = PlannerConfig(),
) -> Plan:
    """Like plan(), with the banned operators removed from the pool."""
    return plan(state, goal, kb, actor=actor, config=config, banned=banned)


def simulate_plan(p: Plan, state: WorldState) -> Plan:
    """Recompute the trajectory of a proposed plan against ``state``."""
    if p.status != "proposed":
        raise ActionError(f"only proposed plans can be simulated, not {p.status!r}")
    trajectory = [state]
    for i, op in enumerate(p.steps):
        try:
            trajectory.append(apply_operator(trajectory[-1], op))
        except ActionError as exc:
            raise StepInfeasibleError(
                f"step {i} ({op.name}) infeasible: {exc}",
                index=i,
                condition=exc.condition,
            ) from exc
    return replace(p, trajectory=tuple(trajectory))


# --- goal parsing ------------------------------------------------------------------

_WS = re.compile(r"\s+")


def normalize_command(text: str) -> str:
    return _WS.sub(" ", text.strip().lower()).rstrip(".!?")


def parse_goal(
    command: str, state: WorldState, templates: Mapping[str, Sequence[str]]
) -> Goal:
    """Instantiate a registered goal template against the present objects.

    Template literals use ``$type`` placeholders, bound to the first
    type-correct instance in lexicographic order.
    """
    normalized = normalize_command(command)
    table = {normalize_command(k): v for k, v in templates.items()}
    if normalized not in table:
        raise UnknownCommandError(f"no goal template matches {command!r}")
    tree = state.ctx.tree
    literals: set[Literal] = set()
    binding: dict[str, str] = {}
    for text in table[normalized]:
        f = Literal.parse(str(text))
        args = []
        for a in f.args:
            if not a.startswith("$"):
                args.append(a)
                continue
            type_name = a[1:]
            if a not in binding:
                matches = [
                    oid
                    for oid in sorted(state.registry)
                    if tree.is_subtype(state.registry[oid].type, type_name)
                ]
                if not matches:
                    raise GoalInstanceError(
                        f"no instance of type {type_name!r} for goal {command!r}"
                    )
                binding[a] = matches[0]
            args.append(binding[a])
        literals.add(Literal(f.predicate, tuple(args)))
    return Goal(frozenset(literals), text=normalized)


# --- serialization -------------------------------------------------------------------

def plan_to_text(p: Plan) -> str:
    """The plan document shown to users and printed by the CLI."""
    lines = [
        "goal: " + " & ".join(str(f) for f in sorted(p.goal.literals)),
        f"status: {p.status}"
        + (f" (step {p.rejected_step})" if p.rejected_step is not None else ""),
        f"steps: {len(p.steps)}",
    ]
    for i, op in enumerate(p.steps):
        lines.append(f"  {i + 1}. [{op.origin}] {op.name}")
        if i + 1 < len(p.trajectory):
            added = p.trajectory[i + 1].facts - p.trajectory[i].facts
            removed = p.trajectory[i].facts - p.trajectory[i + 1].facts
            for f in sorted(added):
                lines.append(f"     + {f}")
            for f in sorted(removed):
                lines.append(f"     - {f}")
    return "\n".join(lines)


def plan_to_doc(p: Plan) -> dict:
    """Structured form of the plan document (wire payload)."""
    steps = []
    for i, op in enumerate(p.steps):
        entry = {
            "index": i,
            "origin": op.origin,
            "name": op.name,
            "args": list(op.args),
        }
        if i + 1 < len(p.trajectory):
            entry["added"] = [
                str(f) for f in sorted(p.trajectory[i + 1].facts - p.trajectory[i].facts)
            ]
            entry["removed"] = [
                str(f) for f in sorted(p.trajectory[i].facts - p.trajectory[i + 1].facts)
            ]
        steps.append(entry)
    return {
        "goal": [str(f) for f in sorted(p.goal.literals)],
        "status": p.status,
        "steps": steps,
        "text": plan_to_text(p),
    }
