"""Curiosity: hypothesis generation over untested skill/object-type pairs,
question posing with highlights, and answer folding into parameter constraints."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import AlreadyAnsweredError, NoInstanceError
from .planning import ground_skill
from .skills import KnowledgeBase, Param, SkillSchema
from .world import ZONE_TYPE, WorldState


@dataclass(frozen=True)
class Hypothesis:
    schema: str
    param_index: int
    candidate_type: str
    status: str = "open"
    score: int = 0

    @property
    def id(self) -> str:
        return f"{self.schema}#{self.param_index}#{self.candidate_type}"


@dataclass(frozen=True)
class QuestionEvent:
    hypothesis: Hypothesis
    text: str
    highlight: frozenset[str]


def _instances_of(state: WorldState, type_name: str) -> list[str]:
    tree = state.ctx.tree
    return [
        oid
        for oid in sorted(state.registry)
        if tree.is_subtype(state.registry[oid].type, type_name)
    ]


def generate_hypotheses(kb: KnowledgeBase, state: WorldState) -> list[Hypothesis]:
    """One open hypothesis per (schema param, untested sibling type with an
    instance present)."""
    tree = kb.tree
    out: list[Hypothesis] = []
    seen: set[tuple[str, int, str]] = set()
    for schema in kb.schemas:
        for idx, param in enumerate(schema.params):
            if param.type == ZONE_TYPE:
                continue
            covered = param.allowed | param.excluded
            for evidenced in sorted(param.allowed):
                for sibling in tree.siblings(evidenced):
                    if sibling in covered:
                        continue
                    key = (schema.name, idx, sibling)
                    if key in seen:
                        continue
                    if not _instances_of(state, sibling):
                        continue
                    seen.add(key)
                    out.append(Hypothesis(schema.name, idx, sibling))
    return out


def _with_candidate(schema: SkillSchema, param_index: int, type_name: str) -> SkillSchema:
    p = schema.params[param_index]
    widened = Param(p.var, p.type, p.allowed | {type_name}, p.excluded - {type_name})
    params = tuple(
        widened if i == param_index else q for i, q in enumerate(schema.params)
    )
    return replace(schema, params=params)


def hypothesis_gain(h: Hypothesis, kb: KnowledgeBase, state: WorldState) -> int:
    """How many new ground operators confirming the hypothesis would enable."""
    schema = kb.get(h.schema)
    before = len(ground_skill(schema, state, kb.tree))
    after = len(ground_skill(_with_candidate(schema, h.param_index, h.candidate_type), state, kb.tree))
    return max(0, after - before)


def rank_hypotheses(
    hypotheses: list[Hypothesis], kb: KnowledgeBase, state: WorldState
) -> list[Hypothesis]:
    """Score by enabled-grounding count, descending; deterministic tie-break."""
    scored = [
        replace(h, score=hypothesis_gain(h, kb, state)) for h in hypotheses
    ]
    scored.sort(
        key=lambda h: (-h.score, h.schema, h.candidate_type, h.param_index)
    )
    return scored


def pose_question(
    h: Hypothesis, kb: KnowledgeBase, state: WorldState
) -> QuestionEvent:
    """Render the hypothesis as a yes/no question, highlighting the candidate
    object and the devices the skill is known to use."""
    if h.status != "open":
        raise AlreadyAnsweredError(f"hypothesis {h.id} is {h.status}")
    schema = kb.get(h.schema)
    candidates = _instances_of(state, h.candidate_type)
    if not candidates:
        raise NoInstanceError(f"no {h.candidate_type} instance present")
    subject = candidates[0]

    highlight = {subject}
    device_phrase = ""
    tree = kb.tree
    for i, param in enumerate(schema.params):
        if param.type == ZONE_TYPE:
            continue
        device_types = [t for t in sorted(param.allowed) if tree.traits_of(t).device]
        instances = [oid for t in device_types for oid in _instances_of(state, t)]
        if instances:
            highlight.add(instances[0])
            if i != h.param_index and not device_phrase:
                device_phrase = f" in {instances[0]}"

    verb = schema.name.split()[0] if schema.name.split() else "use"
    if tree.traits_of(h.candidate_type).device:
        text = f"Can I {verb} with {subject}?"
    else:
        text = f"Can I {verb} {subject}{device_phrase}?"
    return QuestionEvent(h, text, frozenset(highlight))


def apply_answer(
    kb: KnowledgeBase, h: Hypothesis, answer: str
) -> tuple[KnowledgeBase, Hypothesis]:
    """Fold a yes/no answer into the schema's parameter constraints.

    Yes widens the allowed set (lifting to the parent type once every child
    is allowed); no adds the type to the excluded set.
    """
    if h.status != "open":
        raise AlreadyAnsweredError(f"hypothesis {h.id} is {h.status}")
    if answer not in ("yes", "no"):
        raise ValueError(f"answer must be yes or no, got {answer!r}")
    schema = kb.get(h.schema)
    p = schema.params[h.param_index]
    tree = kb.tree
    if answer == "yes":
        allowed = set(p.allowed | {h.candidate_type})
        parent = tree.parent(h.candidate_type)
        if parent is not None and parent in tree:
            children = set(tree.children(parent))
            if children and children <= allowed:
                allowed -= children
                allowed.add(parent)
        new_param = Param(p.var, p.type, frozenset(allowed), p.excluded - frozenset(allowed))
        status = "confirmed"
    else:
        new_param = Param(p.var, p.type, p.allowed, p.excluded | {h.candidate_type})
        status = "rejected"
    params = tuple(
        new_param if i == h.param_index else q for i, q in enumerate(schema.params)
    )
    new_schema = replace(schema, params=params)
    new_schema.validate(tree)
    return kb.replace_schema(new_schema), replace(h, status=status)
