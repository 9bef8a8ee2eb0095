"""Lifted skill schemas: induced from episodes, generalized over the type tree."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import yaml

from .errors import DegenerateEpisodeError, KnowledgeBaseError
from .episodes import Episode, involved_objects
from .world import ROOT_TYPE, ZONE_TYPE, Literal, TypeTree, WorldState


@dataclass(frozen=True)
class Param:
    var: str
    type: str
    allowed: frozenset[str]
    excluded: frozenset[str] = frozenset()

    def admits(self, tree: TypeTree, type_name: str) -> bool:
        """Is an object of ``type_name`` an acceptable binding?"""
        if any(tree.is_subtype(type_name, ex) for ex in self.excluded):
            return False
        return any(tree.is_subtype(type_name, ok) for ok in self.allowed)


@dataclass(frozen=True)
class SkillSchema:
    name: str
    params: tuple[Param, ...]
    preconds: frozenset[Literal]
    adds: frozenset[Literal]
    dels: frozenset[Literal]
    evidence: frozenset[str]

    def param(self, var: str) -> Param:
        for p in self.params:
            if p.var == var:
                return p
        raise KeyError(var)

    def validate(self, tree: TypeTree) -> None:
        vars_declared = {p.var for p in self.params}
        for group in (self.preconds, self.adds, self.dels):
            for f in group:
                for a in f.args:
                    if a.startswith("?") and a not in vars_declared:
                        raise KnowledgeBaseError(f"undeclared variable {a} in {f}")
        if self.adds & self.dels:
            raise KnowledgeBaseError(f"{self.name}: adds and deletes overlap")
        for p in self.params:
            if p.allowed & p.excluded:
                raise KnowledgeBaseError(f"{p.var}: allowed and excluded overlap")
            if p.type != ZONE_TYPE and p.type not in tree:
                raise KnowledgeBaseError(f"{p.var}: unknown type {p.type}")


@dataclass(frozen=True)
class KnowledgeBase:
    tree: TypeTree
    schemas: tuple[SkillSchema, ...] = ()

    def names(self) -> list[str]:
        return [s.name for s in self.schemas]

    def get(self, name: str) -> SkillSchema:
        for s in self.schemas:
            if s.name == name:
                return s
        raise KnowledgeBaseError(f"no skill named {name!r}")

    def add(self, schema: SkillSchema) -> "KnowledgeBase":
        """Add a schema, de-duplicating the name with a numeric suffix."""
        name = schema.name
        existing = set(self.names())
        k = 2
        while name in existing:
            name = f"{schema.name} ({k})"
            k += 1
        schema = replace(schema, name=name)
        schema.validate(self.tree)
        schemas = tuple(sorted([*self.schemas, schema], key=lambda s: s.name))
        return KnowledgeBase(self.tree, schemas)

    def replace_schema(self, schema: SkillSchema) -> "KnowledgeBase":
        schemas = tuple(
            sorted(
                [s for s in self.schemas if s.name != schema.name] + [schema],
                key=lambda s: s.name,
            )
        )
        return KnowledgeBase(self.tree, schemas)


def _substitute(literals: frozenset[Literal], binding: dict[str, str]) -> frozenset[Literal]:
    return frozenset(
        Literal(f.predicate, tuple(binding.get(a, a) for a in f.args)) for f in literals
    )


def _restrict(
    facts: frozenset[Literal], involved: frozenset[str], zones: frozenset[str]
) -> frozenset[Literal]:
    """Keep literals whose non-zone arguments are all involved objects."""
    kept = set()
    for f in facts:
        ok = True
        for a in f.args:
            if a in zones or a in ("cold", "ambient", "hot"):
                continue
            if a not in involved:
                ok = False
                break
        if ok and any(a in involved for a in f.args):
            kept.add(f)
    return frozenset(kept)


def induce_skill(episode: Episode, tree: TypeTree) -> SkillSchema:
    """Lift one episode into a schema.

    Preconditions are the before-facts mentioning only involved objects; the
    effects are the episode diff under the same restriction.  Involved object
    ids become typed variables; zone ids appearing in kept literals become
    zone variables.
    """
    added, removed = episode.diff()
    if not added and not removed:
        raise DegenerateEpisodeError(f"episode {episode.id!r} changed nothing")

    involved = involved_objects(episode)
    zone_ids = frozenset(episode.before.zones)
    preconds = _restrict(episode.before.facts, involved, zone_ids)
    adds = _restrict(added, involved, zone_ids)
    dels = _restrict(removed, involved, zone_ids)

    zones_used = sorted(
        {a for f in (preconds | adds | dels) for a in f.args if a in zone_ids}
    )

    binding: dict[str, str] = {}
    params: list[Param] = []
    counters: dict[str, int] = {}

    def fresh(type_name: str) -> str:
        n = counters.get(type_name, 0)
        counters[type_name] = n + 1
        return f"?{type_name}{n}"

    for oid in sorted(involved):
        otype = episode.before.registry[oid].type
        var = fresh(otype)
        binding[oid] = var
        params.append(Param(var, otype, frozenset({otype})))
    for zid in zones_used:
        var = fresh(ZONE_TYPE)
        binding[zid] = var
        params.append(Param(var, ZONE_TYPE, frozenset({ZONE_TYPE})))

    schema = SkillSchema(
        name=episode.label,
        params=tuple(params),
        preconds=_substitute(preconds, binding),
        adds=_substitute(adds, binding),
        dels=_substitute(dels, binding),
        evidence=frozenset({episode.id}),
    )
    schema.validate(tree)
    return schema


# --- generalization -------------------------------------------------------------

def _effect_bijection(a: SkillSchema, b: SkillSchema) -> dict[str, str] | None:
    """A variable mapping b-vars -> a-vars making both effect sets identical.

    Zone parameters only pair with zone parameters; object parameters with
    object parameters.  The first valid mapping in enumeration order wins.
    """
    if len(a.params) != len(b.params):
        return None
    if len(a.adds) != len(b.adds) or len(a.dels) != len(b.dels):
        return None
    a_zone = [p.var for p in a.params if p.type == ZONE_TYPE]
    a_obj = [p.var for p in a.params if p.type != ZONE_TYPE]
    b_zone = [p.var for p in b.params if p.type == ZONE_TYPE]
    b_obj = [p.var for p in b.params if p.type != ZONE_TYPE]
    if len(a_zone) != len(b_zone):
        return None
    for obj_perm in itertools.permutations(a_obj):
        for zone_perm in itertools.permutations(a_zone):
            mapping = dict(zip(b_obj, obj_perm))
            mapping.update(zip(b_zone, zone_perm))
            if (
                _substitute(b.adds, mapping) == a.adds
                and _substitute(b.dels, mapping) == a.dels
            ):
                return mapping
    return None


def _merge(tree: TypeTree, a: SkillSchema, b: SkillSchema, mapping: dict[str, str]) -> SkillSchema:
    by_a_var = {mapping[p.var]: p for p in b.params}
    merged_params: list[Param] = []
    renames: dict[str, str] = {}
    counters: dict[str, int] = {}
    for pa in a.params:
        pb = by_a_var[pa.var]
        merged_type = tree.lca(pa.type, pb.type)
        allowed = pa.allowed | pb.allowed
        excluded = (pa.excluded | pb.excluded) - allowed
        n = counters.get(merged_type, 0)
        counters[merged_type] = n + 1
        renames[pa.var] = f"?{merged_type}{n}"
        merged_params.append(
            Param(renames[pa.var], merged_type, allowed, excluded)
        )
    preconds = a.preconds & _substitute(b.preconds, mapping)
    merged = SkillSchema(
        name=min(a.name, b.name),
        params=tuple(merged_params),
        preconds=_substitute(preconds, renames),
        adds=_substitute(a.adds, renames),
        dels=_substitute(a.dels, renames),
        evidence=a.evidence | b.evidence,
    )
    merged.validate(tree)
    return merged


def generalize(kb: KnowledgeBase) -> KnowledgeBase:
    """Merge schemas with isomorphic effects, lifting types to least common
    ancestors; iterated to a fixed point in lexicographic schema order."""
    schemas = list(kb.schemas)
    changed = True
    while changed:
        changed = False
        schemas.sort(key=lambda s: s.name)
        for i, j in itertools.combinations(range(len(schemas)), 2):
            mapping = _effect_bijection(schemas[i], schemas[j])
            if mapping is None:
                continue
            merged = _merge(kb.tree, schemas[i], schemas[j], mapping)
            schemas = [s for k, s in enumerate(schemas) if k not in (i, j)]
            schemas.append(merged)
            changed = True
            break
    return KnowledgeBase(kb.tree, tuple(sorted(schemas, key=lambda s: s.name)))


# --- grounding -------------------------------------------------------------------

def candidate_bindings(
    schema: SkillSchema, tree: TypeTree, state: WorldState
) -> list[dict[str, str]]:
    """All type-correct bindings, object params injective, deterministic order."""
    pools: list[list[str]] = []
    for p in schema.params:
        if p.type == ZONE_TYPE:
            pools.append(sorted(state.zones))
        else:
            pools.append(
                [
                    oid
                    for oid in sorted(state.registry)
                    if p.admits(tree, state.registry[oid].type)
                ]
            )
    out: list[dict[str, str]] = []
    object_idx = [i for i, p in enumerate(schema.params) if p.type != ZONE_TYPE]
    for combo in itertools.product(*pools):
        picked = [combo[i] for i in object_idx]
        if len(set(picked)) != len(picked):
            continue
        out.append({p.var: v for p, v in zip(schema.params, combo)})
    return out


def ground_effects(
    schema: SkillSchema, binding: dict[str, str]
) -> tuple[frozenset[Literal], frozenset[Literal], frozenset[Literal]]:
    return (
        _substitute(schema.preconds, binding),
        _substitute(schema.adds, binding),
        _substitute(schema.dels, binding),
    )


def replay_check(schema: SkillSchema, episode: Episode, tree: TypeTree) -> bool:
    """Does the schema reproduce the episode it claims as evidence?

    True when some binding onto the episode's objects makes the preconditions
    hold in the before-state and the grounded effects, applied to it, give the
    after-state restricted to the involved objects.
    """
    involved = involved_objects(episode)
    zone_ids = frozenset(episode.before.zones)
    want_after = _restrict(episode.after.facts, involved, zone_ids)
    before = episode.before.facts

    pools: list[list[str]] = []
    for p in schema.params:
        if p.type == ZONE_TYPE:
            pools.append(sorted(zone_ids))
        else:
            pools.append(
                [
                    oid
                    for oid in sorted(involved)
                    if p.admits(tree, episode.before.registry[oid].type)
                ]
            )
    object_idx = [i for i, p in enumerate(schema.params) if p.type != ZONE_TYPE]
    for combo in itertools.product(*pools):
        picked = [combo[i] for i in object_idx]
        if len(set(picked)) != len(picked) or set(picked) != set(involved):
            continue
        binding = {p.var: v for p, v in zip(schema.params, combo)}
        pre, adds, dels = ground_effects(schema, binding)
        if not pre <= before:
            continue
        result = _restrict((before - dels) | adds, involved, zone_ids)
        if result == want_after:
            return True
    return False


# --- knowledge-base files ----------------------------------------------------------

def _params_to_doc(params: tuple[Param, ...]) -> list[dict]:
    return [
        {
            "var": p.var,
            "type": p.type,
            "allowed": sorted(p.allowed),
            **({"excluded": sorted(p.excluded)} if p.excluded else {}),
        }
        for p in params
    ]


def kb_to_doc(kb: KnowledgeBase) -> dict:
    return {
        "types": [{"name": c, "parent": p} for c, p in kb.tree.edges()],
        "skills": [
            {
                "name": s.name,
                "params": _params_to_doc(s.params),
                "preconds": [str(f) for f in sorted(s.preconds)],
                "adds": [str(f) for f in sorted(s.adds)],
                "dels": [str(f) for f in sorted(s.dels)],
                "evidence": sorted(s.evidence),
            }
            for s in kb.schemas
        ],
    }


def kb_from_doc(doc: dict) -> KnowledgeBase:
    tree = TypeTree.from_edges(
        [(e["name"], e["parent"]) for e in doc.get("types", [])]
    )
    names = [e["name"] for e in doc.get("skills", [])]
    if len(names) != len(set(names)):
        raise KnowledgeBaseError("duplicate skill names in knowledge base file")
    kb = KnowledgeBase(tree)
    for entry in doc.get("skills", []):
        params = tuple(
            Param(
                p["var"],
                p["type"],
                frozenset(p.get("allowed", [p["type"]])),
                frozenset(p.get("excluded", [])),
            )
            for p in entry["params"]
        )
        schema = SkillSchema(
            name=entry["name"],
            params=params,
            preconds=frozenset(Literal.parse(t) for t in entry.get("preconds", [])),
            adds=frozenset(Literal.parse(t) for t in entry.get("adds", [])),
            dels=frozenset(Literal.parse(t) for t in entry.get("dels", [])),
            evidence=frozenset(entry.get("evidence", [])),
        )
        schema.validate(tree)
        kb = KnowledgeBase(tree, tuple(sorted([*kb.schemas, schema], key=lambda s: s.name)))
    return kb


def kb_to_text(kb: KnowledgeBase) -> str:
    """Human-readable dump with stable ordering."""
    lines: list[str] = []
    for s in kb.schemas:
        lines.append(f"skill {s.name}")
        for p in s.params:
            extra = f" excluded={{{', '.join(sorted(p.excluded))}}}" if p.excluded else ""
            lines.append(
                f"  {p.var}: {p.type} allowed={{{', '.join(sorted(p.allowed))}}}{extra}"
            )
        lines.append("  pre:  " + ", ".join(str(f) for f in sorted(s.preconds)))
        lines.append("  add:  " + ", ".join(str(f) for f in sorted(s.adds)))
        lines.append("  del:  " + ", ".join(str(f) for f in sorted(s.dels)))
        lines.append("  from: " + ", ".join(sorted(s.evidence)))
        lines.append("")
    return "\n".join(lines)


def save_kb(path: str, kb: KnowledgeBase) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(kb_to_doc(kb), fh, sort_keys=False)


def load_kb(path: str) -> KnowledgeBase:
    with open(path, "r", encoding="utf-8") as fh:
        return kb_from_doc(yaml.safe_load(fh))
