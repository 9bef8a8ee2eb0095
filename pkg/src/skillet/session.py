"""Behavior engine: a finite state machine orchestrating teaching, curious
questioning, planning with human validation, execution, and assistance.

Phases: Idle, Demonstrating, Questioning, Planning, AwaitingValidation,
Executing, Assisting.  Every inbound message yields at least one outbound
message; outbound messages carry strictly increasing, gap-free ``seq`` numbers.
"""

from __future__ import annotations

import re
import socket
from dataclasses import dataclass, field, replace

from . import protocol
from .assist import (
    AssistSetup,
    apply_intervention,
    infer_goal,
    parse_assist_section,
    predict_next_action,
    propose_intervention,
)
from .curiosity import Hypothesis, generate_hypotheses, pose_question, rank_hypotheses, apply_answer
from .episodes import ActionEvent, EpisodeRecorder, touched_objects
from .errors import (
    ActionError,
    AllGoalsUnreachableError,
    EngineError,
    GoalInstanceError,
    IllegalTransition,
    PlanBudgetError,
    ProtocolError,
    UnknownCommandError,
    UnknownIdError,
    UnsolvableError,
)
from .planning import (
    Plan,
    PlannerConfig,
    apply_operator,
    parse_goal,
    plan as make_plan,
    plan_to_doc,
    replan_excluding,
)
from .skills import KnowledgeBase, generalize, induce_skill
from .world import (
    PrimitiveAction,
    TypeTree,
    WorldState,
    apply_action,
    diff_states,
    tick_devices,
)

_TEACH_RE = re.compile(r"^i'?ll show you (.+)$")

IDLE = "Idle"
DEMONSTRATING = "Demonstrating"
QUESTIONING = "Questioning"
PLANNING = "Planning"
AWAITING_VALIDATION = "AwaitingValidation"
EXECUTING = "Executing"
ASSISTING = "Assisting"


@dataclass(frozen=True)
class SessionConfig:
    seed: int = 0
    max_questions: int = 1
    planner: PlannerConfig = field(default_factory=PlannerConfig)


def pick_agent(state: WorldState, preferred: str) -> str:
    """The acting agent id: the preferred one if registered, else the first."""
    agents = state.ctx.agents
    if preferred in agents:
        return preferred
    if not agents:
        raise UnknownIdError("world has no agent")
    return agents[0]


class Session:
    """One engine instance driving one front-end client (or script)."""

    def __init__(
        self,
        tree: TypeTree,
        world: WorldState,
        doc: dict | None = None,
        config: SessionConfig = SessionConfig(),
    ):
        doc = doc or {}
        self.tree = tree
        self.world = world
        self.kb = KnowledgeBase(tree)
        self.config = config
        self.phase = IDLE
        self.recorder: EpisodeRecorder | None = None
        self.pending_label = ""
        self.pending_question: Hypothesis | None = None
        self.pending_highlight: frozenset[str] = frozenset()
        self.questions_left = 0
        self.pending_plan: Plan | None = None
        self.banned: list = []
        self.last_plan: Plan | None = None
        self.episode_count = 0
        self.goal_templates: dict = doc.get("goals", {}) or {}
        self.assist: AssistSetup | None = parse_assist_section(doc, world)
        self.assist_anchor: WorldState | None = None
        self.assist_prefix: list[ActionEvent] = []
        self.seq = 0
        self.sent_any = False
        self.trace: list[tuple[str, dict]] = []
        self.robot = pick_agent(world, "robot")
        self.human = pick_agent(world, "human")

    # --- outbound assembly ---------------------------------------------------

    def _emit(self, outs: list[dict], mtype: str, payload: dict) -> None:
        msg = {"seq": self.seq, "type": mtype, "payload": payload}
        if not self.sent_any:
            msg["v"] = protocol.PROTOCOL_VERSION
            self.sent_any = True
        self.seq += 1
        self.trace.append((self.phase, msg))
        outs.append(msg)

    def _cue(self, outs: list[dict], kind: str, **payload) -> None:
        self._emit(outs, "cue", {"kind": kind, **payload})

    def _error(self, outs: list[dict], code: str, message: str) -> None:
        self._emit(outs, "error", {"code": code, "message": message})

    def _world_update(
        self, outs: list[dict], before: WorldState, after: WorldState, **extra
    ) -> None:
        added, removed = diff_states(before, after)
        poses = {
            oid: [x, y]
            for oid, (x, y) in sorted(after.poses.items())
            if before.poses.get(oid) != (x, y)
        }
        payload = {
            "added": [str(f) for f in sorted(added)],
            "removed": [str(f) for f in sorted(removed)],
        }
        if poses:
            payload["poses"] = poses
        payload.update(extra)
        self._emit(outs, "world_update", payload)

    def bootstrap(self) -> list[dict]:
        """Initial hydration: full scene plus all facts as a delta from empty."""
        outs: list[dict] = []
        scene = {
            "objects": [
                {
                    "id": obj.id,
                    "type": obj.type,
                    "capacity": obj.capacity,
                    "pose": list(self.world.poses.get(obj.id, ())) or None,
                }
                for obj in sorted(self.world.registry.values(), key=lambda o: o.id)
            ],
            "zones": [
                {"id": zid, "pos": [x, y]}
                for zid, (x, y) in sorted(self.world.zones.items())
            ],
        }
        self._emit(
            outs,
            "world_update",
            {
                "added": [str(f) for f in self.world.sorted_facts()],
                "removed": [],
                "scene": scene,
            },
        )
        return outs

    # --- dispatch ---------------------------------------------------------------

    def handle(self, message: dict) -> list[dict]:
        """Process one validated inbound message; returns the outbound batch."""
        outs: list[dict] = []
        mtype = message["type"]
        try:
            if mtype == "gaze":
                self._on_gaze(outs, message["object"])
            elif mtype == "hand_action":
                self._on_hand_action(outs, message["action"])
            elif mtype == "speech":
                self._on_speech(outs, message["text"])
            elif mtype == "answer":
                self._on_answer(outs, message["value"])
            elif mtype == "plan_feedback":
                self._on_plan_feedback(outs, message)
            elif mtype == "tick":
                self._on_tick(outs)
        except EngineError as exc:
            self._error(outs, exc.code, str(exc))
        if not outs:
            self._error(outs, "internal", f"message {mtype!r} produced no response")
        return outs

    def handle_line(self, line: str) -> list[dict]:
        """Wire entry point: parse, validate, dispatch; never raises."""
        try:
            obj = protocol.parse_line(line)
            if not self.sent_any and obj.get("v") != protocol.PROTOCOL_VERSION:
                # first inbound line of a live connection must declare its version
                if obj.get("v") is None:
                    raise ProtocolError("first message must carry 'v'")
            message = protocol.validate_inbound(obj)
        except ProtocolError as exc:
            outs: list[dict] = []
            self._error(outs, "protocol-error", str(exc))
            return outs
        return self.handle(message)

    # --- handlers ------------------------------------------------------------------

    def _on_gaze(self, outs: list[dict], object_id: str) -> None:
        obj = self.world.registry.get(object_id)
        if obj is None:
            raise UnknownIdError(f"unknown object {object_id!r}")
        self._cue(outs, "object_label", object=object_id, label=obj.type)

    def _apply_live_action(self, outs: list[dict], action: PrimitiveAction) -> None:
        before = self.world
        after = apply_action(before, action)
        self.world = after
        self._cue(outs, "action_label", action=str(action), actor=action.actor)
        self._world_update(outs, before, after)

    def _on_hand_action(self, outs: list[dict], action: PrimitiveAction) -> None:
        if self.phase == DEMONSTRATING:
            before = self.recorder.current
            self.recorder.record(action)
            self.world = self.recorder.current
            self._cue(outs, "action_label", action=str(action), actor=action.actor)
            self._world_update(outs, before, self.world)
        elif self.phase == IDLE:
            self._apply_live_action(outs, action)
        elif self.phase == ASSISTING:
            before = self.world
            touched = touched_objects(before, action)
            after = apply_action(before, action)
            self.world = after
            self.assist_prefix.append(
                ActionEvent(len(self.assist_prefix), action.actor, action, touched)
            )
            self._cue(outs, "action_label", action=str(action), actor=action.actor)
            self._world_update(outs, before, after)
        else:
            raise IllegalTransition(
                f"hand actions are not accepted while {self.phase}"
            )

    def _on_speech(self, outs: list[dict], text: str) -> None:
        normalized = " ".join(text.strip().lower().split()).rstrip(".!?")
        teach = _TEACH_RE.match(normalized)
        if teach:
            if self.phase != IDLE:
                raise IllegalTransition(f"cannot start a demonstration while {self.phase}")
            self.pending_label = teach.group(1).strip()
            self.episode_count += 1
            self.recorder = EpisodeRecorder(self.world, f"ep-{self.episode_count}")
            self.phase = DEMONSTRATING
            self._cue(outs, "speech", text=f"Show me how to {self.pending_label}.")
            return
        if normalized in ("done", "stop", "finished"):
            if self.phase == DEMONSTRATING:
                self._finish_demonstration(outs)
                return
            if self.phase == ASSISTING:
                self.phase = IDLE
                self.assist_anchor = None
                self.assist_prefix = []
                self._cue(outs, "speech", text="Stopping assistance.")
                return
            raise IllegalTransition(f"nothing to finish while {self.phase}")
        if normalized in ("yes", "no"):
            self._on_answer(outs, normalized)
            return
        if normalized == "assist me":
            if self.phase != IDLE:
                raise IllegalTransition(f"cannot start assisting while {self.phase}")
            if self.assist is None:
                raise UnknownCommandError("this world has no assistance model")
            self.phase = ASSISTING
            self.assist_anchor = self.world
            self.assist_prefix = []
            self._cue(outs, "speech", text="I am watching; I will help where I can.")
            return
        # goal command
        if self.phase != IDLE:
            raise IllegalTransition(f"cannot plan while {self.phase}")
        goal = parse_goal(normalized, self.world, self.goal_templates)
        self.phase = PLANNING
        self._cue(outs, "speech", text=f"Let me think about how to {normalized}.")
        try:
            p = make_plan(
                self.world, goal, self.kb, actor=self.robot, config=self.config.planner
            )
        except (UnsolvableError, PlanBudgetError):
            self.phase = IDLE
            raise
        self.banned = []
        self._propose(outs, p)

    def _propose(self, outs: list[dict], p: Plan) -> None:
        self.pending_plan = p
        self.phase = AWAITING_VALIDATION
        self._emit(outs, "plan_proposal", plan_to_doc(p))
        for i, step in enumerate(p.steps):
            self._cue(outs, "avatar_step", index=i, name=step.name, origin=step.origin)

    def _finish_demonstration(self, outs: list[dict]) -> None:
        episode = self.recorder.finish(self.pending_label)
        self.recorder = None
        before_world = self.world
        self.world = episode.after
        self._world_update(outs, before_world, self.world)
        if episode.is_degenerate:
            self.phase = IDLE
            self._cue(
                outs,
                "speech",
                text="Nothing changed, so I did not learn a new skill.",
            )
            return
        schema = induce_skill(episode, self.tree)
        self.kb = generalize(self.kb.add(schema))
        self._cue(outs, "speech", text=f"I learned: {self.pending_label}.")
        self.questions_left = self.config.max_questions
        if not self._ask_next_question(outs):
            self.phase = IDLE

    def _ask_next_question(self, outs: list[dict]) -> bool:
        if self.questions_left <= 0:
            return False
        ranked = rank_hypotheses(
            generate_hypotheses(self.kb, self.world), self.kb, self.world
        )
        if not ranked:
            return False
        top = ranked[0]
        question = pose_question(top, self.kb, self.world)
        self.pending_question = top
        self.pending_highlight = question.highlight
        self.phase = QUESTIONING
        self._emit(
            outs,
            "question",
            {
                "id": question.hypothesis.id,
                "text": question.text,
                "highlight": sorted(question.highlight),
            },
        )
        self._cue(outs, "highlight", objects=sorted(question.highlight))
        return True

    def _on_answer(self, outs: list[dict], value: str) -> None:
        if self.phase != QUESTIONING or self.pending_question is None:
            raise IllegalTransition(f"no question is pending while {self.phase}")
        self.kb, answered = apply_answer(self.kb, self.pending_question, value)
        color = "green" if value == "yes" else "red"
        self._cue(
            outs, "particles", color=color, objects=sorted(self.pending_highlight)
        )
        self.pending_question = None
        self.pending_highlight = frozenset()
        self.questions_left -= 1
        if not self._ask_next_question(outs):
            self.phase = IDLE

    def _on_plan_feedback(self, outs: list[dict], message: dict) -> None:
        if self.phase != AWAITING_VALIDATION or self.pending_plan is None:
            raise IllegalTransition(f"no plan awaits validation while {self.phase}")
        if message["feedback"] == "approve":
            p = replace(self.pending_plan, status="approved")
            self.phase = EXECUTING
            current = self.world
            try:
                for i, step in enumerate(p.steps):
                    nxt = apply_operator(current, step)
                    self._world_update(outs, current, nxt, step=i, name=step.name)
                    current = nxt
            except ActionError as exc:
                self.pending_plan = None
                self.phase = IDLE
                self.world = current
                self._error(outs, "step-infeasible", str(exc))
                return
            self.world = current
            self.last_plan = replace(p, status="executed")
            self.pending_plan = None
            self.phase = IDLE
            self._cue(outs, "speech", text="Done.")
            return
        step_index = message["step"]
        if step_index >= len(self.pending_plan.steps):
            raise ProtocolError(
                f"plan has {len(self.pending_plan.steps)} steps; cannot reject #{step_index}"
            )
        rejected = self.pending_plan.steps[step_index]
        self.banned.append(rejected)
        goal = self.pending_plan.goal
        self.last_plan = replace(
            self.pending_plan, status="rejected", rejected_step=step_index
        )
        self._cue(outs, "speech", text=f"Understood, not using {rejected.name}.")
        try:
            p = replan_excluding(
                self.world,
                goal,
                self.kb,
                self.banned,
                actor=self.robot,
                config=self.config.planner,
            )
        except (UnsolvableError, PlanBudgetError):
            self.pending_plan = None
            self.phase = IDLE
            raise
        self._propose(outs, p)

    def _on_tick(self, outs: list[dict]) -> None:
        if self.phase == DEMONSTRATING:
            raise IllegalTransition("finish the demonstration before time passes")
        before = self.world
        self.world = tick_devices(before)
        self._world_update(outs, before, self.world)
        if self.phase == ASSISTING:
            if before.facts != self.world.facts:
                # device dynamics outside the observed action prefix: restart it
                self.assist_anchor = self.world
                self.assist_prefix = []
            self._assist_pipeline(outs)

    def _assist_pipeline(self, outs: list[dict]) -> None:
        setup = self.assist
        anchor = self.assist_anchor or self.world
        try:
            posterior = infer_goal(
                self.assist_prefix,
                setup.library,
                anchor,
                self.kb,
                actor=setup.human.agent,
                config=self.config.planner,
            )
            predicted = predict_next_action(
                self.world,
                posterior,
                self.kb,
                actor=setup.human.agent,
                config=self.config.planner,
            )
        except (AllGoalsUnreachableError, UnsolvableError, PlanBudgetError) as exc:
            self._error(outs, exc.code, str(exc))
            return
        if predicted is None:
            return
        proposal = propose_intervention(
            self.world, predicted, setup.human, setup.region, setup.min_gain
        )
        if proposal is None:
            return
        # announce before acting: hologram cue first, then the world change
        self._cue(
            outs,
            "hologram",
            object=proposal.object_id,
            pose=list(proposal.to_pose),
            cost_before=proposal.cost_before,
            cost_after=proposal.cost_after,
        )
        before = self.world
        self.world = apply_intervention(before, proposal)
        self._world_update(outs, before, self.world, intervention=proposal.object_id)


# --- script running -----------------------------------------------------------------

def transcript_lines(session: Session, messages: list[dict]) -> list[str]:
    lines = [protocol.dumps(m) for m in session.bootstrap()]
    for message in messages:
        for out in session.handle(message):
            lines.append(protocol.dumps(out))
    digest = {
        "type": "digest",
        "phase": session.phase,
        "skills": session.kb.names(),
        "facts": len(session.world.facts),
        "seed": session.config.seed,
    }
    lines.append(protocol.dumps(digest))
    return lines


def run_script(
    script_text: str,
    tree: TypeTree,
    world: WorldState,
    doc: dict | None = None,
    config: SessionConfig = SessionConfig(),
) -> tuple[str, Session]:
    """Feed a script through a fresh session; returns (transcript, session)."""
    messages = protocol.parse_script(script_text)
    session = Session(tree, world, doc, config)
    lines = transcript_lines(session, messages)
    return "\n".join(lines) + "\n", session


# --- socket server ---------------------------------------------------------------

def serve(
    tree: TypeTree,
    world: WorldState,
    doc: dict | None = None,
    config: SessionConfig = SessionConfig(),
    host: str = "127.0.0.1",
    port: int = 8733,
    max_connections: int | None = None,
    on_bound=None,
) -> None:
    """Serve one client at a time over newline-delimited JSON.

    Each connection resumes the same session; the client is greeted with a
    full-state hydration update.  Malformed lines produce error messages and
    keep the connection open.  ``on_bound`` (if given) receives the actual
    bound port before the first accept.
    """
    session = Session(tree, world, doc, config)
    try:
        server = socket.create_server((host, port))
    except OSError as exc:
        raise EngineError(f"cannot bind {host}:{port}: {exc}") from exc
    served = 0
    if on_bound is not None:
        on_bound(server.getsockname()[1])
    with server:
        while max_connections is None or served < max_connections:
            conn, _ = server.accept()
            served += 1
            with conn:
                fh = conn.makefile("rwb")
                for out in session.bootstrap():
                    fh.write((protocol.dumps(out) + "\n").encode("utf-8"))
                fh.flush()
                for raw in fh:
                    line = raw.decode("utf-8").strip()
                    if not line:
                        continue
                    for out in session.handle_line(line):
                        fh.write((protocol.dumps(out) + "\n").encode("utf-8"))
                    fh.flush()
