"""Proactive assistance: infer the human's goal, predict the next action,
and propose an ergonomically better placement for the object they will need."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import (
    AllGoalsUnreachableError,
    DomainError,
    StaleProposalError,
    UnknownIdError,
    UnreachablePoseError,
    UnsolvableError,
)
from .episodes import ActionEvent
from .planning import Goal, GroundOperator, PlannerConfig, plan
from .skills import KnowledgeBase
from .world import Literal, WorldState, apply_action, cascade_pose

INF = float("inf")

Pose = tuple[float, float]


@dataclass(frozen=True)
class HumanModel:
    agent: str
    seat: Pose
    comfy_reach: float
    max_reach: float
    dist_weight: float
    bend_weight: float

    def __post_init__(self):
        if not (0 < self.comfy_reach < self.max_reach):
            raise DomainError("need 0 < comfy_reach < max_reach")
        if self.dist_weight < 0 or self.bend_weight < 0:
            raise DomainError("reach-cost weights must be non-negative")


@dataclass(frozen=True)
class GoalEntry:
    name: str
    goal: Goal
    prior: float


@dataclass(frozen=True)
class GoalLibrary:
    entries: tuple[GoalEntry, ...]
    beta: float = 1.0

    def __post_init__(self):
        if not self.entries:
            raise DomainError("goal library is empty")
        if self.beta <= 0:
            raise DomainError("rationality beta must be positive")
        total = sum(e.prior for e in self.entries)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"goal priors sum to {total}, expected 1")


@dataclass(frozen=True)
class InterventionProposal:
    object_id: str
    from_pose: Pose
    to_pose: Pose
    cost_before: float
    cost_after: float

    @property
    def announcement(self) -> dict:
        """Hologram cue payload shown before the relocation happens."""
        return {
            "kind": "hologram",
            "object": self.object_id,
            "pose": list(self.to_pose),
        }


def _dist(a: Pose, b: Pose) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def ergonomic_cost(human: HumanModel, pose: Pose) -> float:
    """Reach cost: linear in distance plus quadratic penalty past comfy reach."""
    d = _dist(human.seat, pose)
    if d > human.max_reach:
        raise UnreachablePoseError(
            f"pose {pose} is {d:.3f} m from seat, beyond max reach {human.max_reach}"
        )
    over = max(0.0, d - human.comfy_reach)
    return human.dist_weight * d + human.bend_weight * over * over


def _cost_to(
    state: WorldState,
    goal: Goal,
    kb: KnowledgeBase,
    actor: str,
    config: PlannerConfig,
) -> float:
    try:
        return float(plan(state, goal, kb, actor=actor, config=config).cost)
    except UnsolvableError:
        return INF


def infer_goal(
    prefix: Sequence[ActionEvent],
    library: GoalLibrary,
    state: WorldState,
    kb: KnowledgeBase,
    actor: str = "human",
    config: PlannerConfig = PlannerConfig(),
) -> list[tuple[GoalEntry, float]]:
    """Posterior over library goals given the observed action prefix.

    An observer assumes near-optimal behaviour: each goal is weighted by
    prior * exp(-beta * (cost constrained to start with the prefix - optimal
    cost)).  Goals unreachable under the prefix get zero mass.
    """
    after = state
    for event in prefix:
        after = apply_action(after, event.action)
    k = float(len(prefix))

    weights: list[float] = []
    for entry in library.entries:
        base = _cost_to(state, entry.goal, kb, actor, config)
        constrained = (
            k + _cost_to(after, entry.goal, kb, actor, config) if base < INF else INF
        )
        if base >= INF or constrained >= INF:
            weights.append(0.0)
            continue
        delta = constrained - base
        weights.append(entry.prior * math.exp(-library.beta * delta))

    total = sum(weights)
    if total <= 0.0:
        raise AllGoalsUnreachableError("no library goal is consistent with the prefix")
    return [
        (entry, w / total) for entry, w in zip(library.entries, weights)
    ]


def predict_next_action(
    state: WorldState,
    posterior: Sequence[tuple[GoalEntry, float]],
    kb: KnowledgeBase,
    actor: str = "human",
    config: PlannerConfig = PlannerConfig(),
) -> GroundOperator | None:
    """First step of the optimal plan to the most likely goal.

    Posterior ties break in library order; a goal that already holds yields
    None (nothing left to predict).
    """
    if not posterior:
        raise AllGoalsUnreachableError("empty posterior")
    best = max(range(len(posterior)), key=lambda i: (posterior[i][1], -i))
    entry = posterior[best][0]
    if entry.goal.holds_in(state.facts):
        return None
    p = plan(state, entry.goal, kb, actor=actor, config=config)
    return p.steps[0] if p.steps else None


def _target_object(state: WorldState, op: GroundOperator) -> str | None:
    """The object a predicted primitive manipulates at its resting place."""
    if op.action is None:
        return None
    kind = op.action.kind
    if kind == "pick":
        return op.action.args[0]
    if kind in ("place", "pour"):
        target = op.action.args[1]
        return target if target in state.registry else None
    if kind in ("open", "close", "press"):
        return op.action.args[0]
    return None


def grid_positions(
    x_range: tuple[float, float], y_range: tuple[float, float], spacing: float
) -> list[Pose]:
    """Lexicographically ordered candidate grid over a rectangle."""
    if spacing <= 0:
        raise DomainError("grid spacing must be positive")

    def axis(lo: float, hi: float) -> list[float]:
        n = int(round((hi - lo) / spacing))
        return [round(lo + i * spacing, 9) for i in range(n + 1)]

    return [(x, y) for x in axis(*x_range) for y in axis(*y_range)]


def propose_intervention(
    state: WorldState,
    predicted: GroundOperator,
    human: HumanModel,
    region: Sequence[Pose],
    min_gain: float = 0.05,
) -> InterventionProposal | None:
    """Relocate the predicted action's target to the best grid position.

    Returns None unless some candidate strictly beats the current cost by
    more than ``min_gain``.  Ties break toward the position nearest the
    current pose, then by grid order.
    """
    target = _target_object(state, predicted)
    if target is None:
        return None
    traits = state.ctx.traits.get(target)
    if traits is None or traits.agent or traits.portion or traits.fixed:
        return None
    if not any(
        f.predicate == "at" and f.args[0] == target for f in state.facts
    ):
        return None
    from_pose = state.pose_of(target)
    if from_pose is None:
        return None

    try:
        cost_before = ergonomic_cost(human, from_pose)
    except UnreachablePoseError:
        cost_before = INF

    best: tuple[float, float, int] | None = None
    best_pose: Pose | None = None
    for idx, pose in enumerate(region):
        if _dist(human.seat, pose) > human.max_reach:
            continue
        cost = ergonomic_cost(human, pose)
        key = (cost, _dist(pose, from_pose), idx)
        if best is None or key < best:
            best = key
            best_pose = pose
    if best_pose is None:
        return None
    cost_after = best[0]
    if not cost_after < cost_before - min_gain:
        return None
    return InterventionProposal(target, from_pose, best_pose, cost_before, cost_after)


def apply_intervention(
    state: WorldState, proposal: InterventionProposal
) -> WorldState:
    """Move the object to the agreed pose; facts are untouched."""
    if proposal.object_id not in state.registry:
        raise UnknownIdError(f"unknown object {proposal.object_id!r}")
    current = state.pose_of(proposal.object_id)
    if current != proposal.from_pose:
        raise StaleProposalError(
            f"{proposal.object_id} moved since the proposal was made"
        )
    poses = dict(state.poses)
    cascade_pose(state.facts, poses, proposal.object_id, proposal.to_pose)
    return WorldState(state.registry, state.zones, state.facts, poses, state.ctx)


# --- domain-document section ------------------------------------------------------

@dataclass(frozen=True)
class AssistSetup:
    human: HumanModel
    library: GoalLibrary
    region: tuple[Pose, ...]
    min_gain: float


def parse_assist_section(doc: Mapping, state: WorldState) -> AssistSetup | None:
    """Read the optional ``assist`` section of a domain document."""
    section = doc.get("assist")
    if not section:
        return None
    h = section["human"]
    human = HumanModel(
        agent=str(h.get("agent", "human")),
        seat=(float(h["seat"][0]), float(h["seat"][1])),
        comfy_reach=float(h["comfy_reach"]),
        max_reach=float(h["max_reach"]),
        dist_weight=float(h["dist_weight"]),
        bend_weight=float(h["bend_weight"]),
    )
    entries = []
    for g in section.get("goals", []):
        literals = frozenset(Literal.parse(str(t)) for t in g["literals"])
        entries.append(
            GoalEntry(str(g["name"]), Goal(literals, text=str(g["name"])), float(g["prior"]))
        )
    library = GoalLibrary(tuple(entries), beta=float(section.get("beta", 1.0)))
    r = section.get("region", {})
    region = grid_positions(
        (float(r["x"][0]), float(r["x"][1])),
        (float(r["y"][0]), float(r["y"][1])),
        float(r.get("spacing", 0.1)),
    )
    return AssistSetup(
        human=human,
        library=library,
        region=tuple(region),
        min_gain=float(section.get("min_gain", 0.05)),
    )
