from __future__ import annotations

import json
import random
import socket
import threading

import pytest

from conftest import load_fixture, read_script, run_fixture_script
from skillet import protocol
from skillet.errors import ProtocolError
from skillet.planning import ORIGIN_SKILL
from skillet.session import Session, SessionConfig, run_script, serve
from skillet.world import lit


def feed(session: Session, *messages: dict) -> list[dict]:
    outs: list[dict] = []
    for m in messages:
        outs.extend(session.handle(protocol.validate_inbound(m)))
    return outs


def speech(text: str) -> dict:
    return {"type": "speech", "text": text}


def hand(kind: str, *args: str) -> dict:
    return {"type": "hand_action", "action": {"kind": kind, "actor": "human", "args": list(args)}}


def kinds(outs, mtype=None):
    return [
        o["payload"].get("kind", o["type"]) if o["type"] == "cue" else o["type"]
        for o in outs
        if mtype is None or o["type"] == mtype
    ]


class TestFsmTransitions:
    def test_teach_intro_starts_demonstration(self, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        outs = feed(s, speech("I'll show you toast bread"))
        assert s.phase == "Demonstrating"
        assert outs[0]["type"] == "cue"
        assert outs[0]["payload"]["kind"] == "speech"

    def test_teach_while_demonstrating_rejected(self, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        feed(s, speech("I'll show you toast bread"))
        outs = feed(s, speech("I'll show you something else"))
        assert outs[0]["type"] == "error"
        assert outs[0]["payload"]["code"] == "illegal-transition"
        assert s.phase == "Demonstrating"

    def test_answer_yes_updates_kb_with_green_particles(self, curiosity_world):
        tree, world, doc = curiosity_world
        s = Session(tree, world, doc)
        feed(
            s,
            speech("I'll show you heat milk"),
            hand("open", "microwave1"),
            hand("pick", "cup1"),
            hand("place", "cup1", "microwave1"),
            hand("close", "microwave1"),
            hand("press", "microwave1"),
        )
        outs = feed(s, speech("done"))
        assert s.phase == "Questioning"
        assert any(o["type"] == "question" for o in outs)
        outs = feed(s, {"type": "answer", "value": "yes"})
        particles = [o for o in outs if o["type"] == "cue" and o["payload"]["kind"] == "particles"]
        assert particles and particles[0]["payload"]["color"] == "green"
        assert s.phase == "Idle"
        schema = s.kb.get("heat milk")
        milk_param = next(p for p in schema.params if p.type == "milk")
        assert "water" in milk_param.allowed

    def test_speech_yes_answers_question(self, curiosity_world):
        tree, world, doc = curiosity_world
        s = Session(tree, world, doc)
        feed(
            s,
            speech("I'll show you heat milk"),
            hand("open", "microwave1"),
            hand("pick", "cup1"),
            hand("place", "cup1", "microwave1"),
            hand("close", "microwave1"),
            hand("press", "microwave1"),
            speech("done"),
        )
        outs = feed(s, speech("no"))
        particles = [o for o in outs if o["type"] == "cue" and o["payload"]["kind"] == "particles"]
        assert particles and particles[0]["payload"]["color"] == "red"

    def test_plan_feedback_in_idle_is_illegal(self, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        outs = feed(s, {"type": "plan_feedback", "feedback": "approve"})
        assert outs[0]["type"] == "error"
        assert outs[0]["payload"]["code"] == "illegal-transition"
        assert s.phase == "Idle"

    def test_hand_action_during_validation_is_illegal(self, toast_session, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        s.kb = toast_session[1].kb
        feed(s, speech("make toast"))
        assert s.phase == "AwaitingValidation"
        outs = feed(s, hand("pick", "cup1"))
        assert outs[0]["type"] == "error"

    def test_tick_during_demo_is_illegal(self, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        feed(s, speech("I'll show you toast bread"))
        outs = feed(s, {"type": "tick"})
        assert outs[0]["type"] == "error"

    def test_idle_free_play_applies_to_world(self, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        feed(s, hand("pick", "bread1"))
        assert s.world.holds(lit("holding", "human", "bread1"))

    def test_unknown_speech(self, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        outs = feed(s, speech("fly to the moon"))
        assert outs[0]["payload"]["code"] == "unknown-command"


class TestGazeLabel:
    def test_label_is_type_name(self, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        outs = feed(s, {"type": "gaze", "object": "bread1"})
        assert outs[0]["payload"] == {"kind": "object_label", "object": "bread1", "label": "bread"}

    def test_unknown_object(self, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        outs = feed(s, {"type": "gaze", "object": "ghost1"})
        assert outs[0]["type"] == "error"

    def test_repeat_gazes_increase_seq(self, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        a = feed(s, {"type": "gaze", "object": "milk1"})
        b = feed(s, {"type": "gaze", "object": "milk1"})
        assert b[0]["seq"] == a[0]["seq"] + 1


class TestValidationLoop:
    def test_reject_step_replans_without_it(self, toast_session, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        s.kb = toast_session[1].kb
        outs = feed(s, speech("make toast"))
        proposal = next(o for o in outs if o["type"] == "plan_proposal")
        assert proposal["payload"]["steps"][0]["origin"] == ORIGIN_SKILL
        banned_name = proposal["payload"]["steps"][0]["name"]
        outs = feed(s, {"type": "plan_feedback", "feedback": "reject", "step": 0})
        assert s.phase == "AwaitingValidation"
        new_proposal = next(o for o in outs if o["type"] == "plan_proposal")
        names = [st["name"] for st in new_proposal["payload"]["steps"]]
        assert banned_name not in names
        # the fallback plan toasts with raw manipulations
        assert names == ["pick(bread1)", "place(bread1, toaster1)", "press(toaster1)"]

    def test_rejecting_every_route_reports_unsolvable(self, toast_session, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        s.kb = toast_session[1].kb
        feed(s, speech("make toast"))
        # three distinct routes exist: the taught skill at the counter, raw
        # manipulation plus the lever, and carrying everything to the table
        # where the skill's other zone grounding applies
        feed(s, {"type": "plan_feedback", "feedback": "reject", "step": 0})
        feed(s, {"type": "plan_feedback", "feedback": "reject", "step": 2})
        outs = feed(s, {"type": "plan_feedback", "feedback": "reject", "step": 4})
        assert outs[-1]["type"] == "error"
        assert outs[-1]["payload"]["code"] == "unsolvable"
        assert s.phase == "Idle"

    def test_approve_executes_and_reaches_goal(self, toast_session, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        s.kb = toast_session[1].kb
        feed(s, speech("make toast"))
        outs = feed(s, {"type": "plan_feedback", "feedback": "approve"})
        updates = [o for o in outs if o["type"] == "world_update"]
        assert updates and all("step" in u["payload"] for u in updates)
        assert s.world.holds(lit("toasted", "bread1"))
        assert s.phase == "Idle"
        assert s.last_plan.status == "executed"

    def test_reject_bad_index(self, toast_session, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        s.kb = toast_session[1].kb
        feed(s, speech("make toast"))
        outs = feed(s, {"type": "plan_feedback", "feedback": "reject", "step": 99})
        assert outs[0]["type"] == "error"
        assert s.phase == "AwaitingValidation"


class TestRunScript:
    def test_toast_script_learns_skill(self, toast_session):
        transcript, session = toast_session
        assert "toast bread" in session.kb.names()
        digest = json.loads(transcript.strip().splitlines()[-1])
        assert digest["type"] == "digest"
        assert digest["skills"] == ["toast bread"]

    def test_empty_script_stays_idle(self, kitchen):
        tree, world, doc = kitchen
        transcript, session = run_script('{"v": 1, "type": "tick"}\n', tree, world, doc)
        assert session.phase == "Idle"
        transcript2, session2 = run_script("", tree, world, doc)
        lines = transcript2.strip().splitlines()
        # hydration plus digest only
        assert len(lines) == 2
        assert session2.phase == "Idle"

    def test_transcripts_are_deterministic(self, kitchen):
        t1, _ = run_fixture_script("kitchen_min", "teach_toast")
        t2, _ = run_fixture_script("kitchen_min", "teach_toast")
        assert t1 == t2

    def test_icetea_script_reaches_goal(self, icetea_session):
        transcript, session = icetea_session
        assert session.world.holds(lit("brewed", "cup1"))
        assert session.world.holds(lit("temp", "cup1", "cold"))
        assert len(session.kb.schemas) == 4

    def test_parse_error_carries_line_number(self, kitchen):
        tree, world, doc = kitchen
        with pytest.raises(ProtocolError) as err:
            run_script('{"v": 1, "type": "tick"}\nnot json\n', tree, world, doc)
        assert err.value.line == 2

    def test_script_requires_version(self, kitchen):
        tree, world, doc = kitchen
        with pytest.raises(ProtocolError):
            run_script('{"type": "tick"}\n', tree, world, doc)

    def test_every_message_answered(self, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        messages = [
            {"type": "gaze", "object": "bread1"},
            {"type": "tick"},
            speech("nonsense"),
            hand("pick", "milk1"),
        ]
        for m in messages:
            outs = feed(s, m)
            assert outs, f"{m} was silently dropped"


class TestSequencing:
    def test_seq_gapless_across_transcript(self, icetea_session):
        transcript, _ = icetea_session
        seqs = [
            json.loads(line)["seq"]
            for line in transcript.strip().splitlines()
            if '"seq"' in line
        ]
        assert seqs == list(range(len(seqs)))

    def test_avatar_steps_only_in_awaiting_validation(self, icetea_session):
        _, session = icetea_session
        for phase, msg in session.trace:
            if msg["type"] == "cue" and msg["payload"].get("kind") == "avatar_step":
                assert phase == "AwaitingValidation"

    def test_plan_world_updates_only_in_executing(self, icetea_session):
        _, session = icetea_session
        for phase, msg in session.trace:
            if msg["type"] == "world_update" and "step" in msg["payload"]:
                assert phase == "Executing"


class TestAssistSession:
    def test_hologram_precedes_relocation(self):
        transcript, session = run_fixture_script("assist", "assist_pour")
        lines = [json.loads(x) for x in transcript.strip().splitlines()]
        holo = next(
            i
            for i, m in enumerate(lines)
            if m.get("type") == "cue" and m["payload"].get("kind") == "hologram"
        )
        update = next(
            i for i, m in enumerate(lines) if "intervention" in m.get("payload", {})
        )
        assert holo < update
        assert lines[update]["payload"]["poses"]["glass1"] == [0.2, 0.0]

    def test_assist_unavailable_without_config(self, kitchen):
        tree, world, doc = kitchen
        s = Session(tree, world, doc)
        outs = feed(s, speech("assist me"))
        assert outs[0]["type"] == "error"


class TestServe:
    def _client(self, domain: str):
        tree, world, doc = load_fixture(domain)
        bound = {}
        ready = threading.Event()

        def on_bound(port):
            bound["port"] = port
            ready.set()

        thread = threading.Thread(
            target=serve,
            args=(tree, world, doc),
            kwargs={"port": 0, "max_connections": 1, "on_bound": on_bound},
            daemon=True,
        )
        thread.start()
        assert ready.wait(5)
        sock = socket.create_connection(("127.0.0.1", bound["port"]), timeout=5)
        return sock, thread

    def test_gaze_roundtrip(self, kitchen):
        sock, thread = self._client("kitchen_min")
        with sock:
            fh = sock.makefile("rw", encoding="utf-8")
            hydration = json.loads(fh.readline())
            assert hydration["type"] == "world_update"
            assert hydration["v"] == protocol.PROTOCOL_VERSION
            fh.write(json.dumps({"v": 1, "type": "gaze", "object": "bread1"}) + "\n")
            fh.flush()
            reply = json.loads(fh.readline())
            assert reply["payload"]["kind"] == "object_label"
            assert reply["payload"]["label"] == "bread"
        thread.join(timeout=5)

    def test_malformed_line_keeps_connection(self, kitchen):
        sock, thread = self._client("kitchen_min")
        with sock:
            fh = sock.makefile("rw", encoding="utf-8")
            fh.readline()  # hydration
            fh.write("this is not json\n")
            fh.flush()
            reply = json.loads(fh.readline())
            assert reply["type"] == "error"
            fh.write(json.dumps({"v": 1, "type": "gaze", "object": "milk1"}) + "\n")
            fh.flush()
            reply = json.loads(fh.readline())
            assert reply["payload"]["kind"] == "object_label"
        thread.join(timeout=5)

    def test_live_equals_scripted_transcript(self, kitchen):
        scripted, _ = run_fixture_script("kitchen_min", "teach_toast")
        scripted_lines = [
            line for line in scripted.strip().splitlines() if '"digest"' not in line
        ]
        sock, thread = self._client("kitchen_min")
        with sock:
            fh = sock.makefile("rw", encoding="utf-8")
            for raw in read_script("teach_toast").strip().splitlines():
                fh.write(raw + "\n")
            fh.flush()
            sock.shutdown(socket.SHUT_WR)
            live_lines = [line.strip() for line in fh if line.strip()]
        thread.join(timeout=5)
        assert live_lines == scripted_lines


class TestFuzzedSafety:
    def _random_message(self, rng: random.Random) -> dict:
        roll = rng.random()
        if roll < 0.15:
            return {"type": "gaze", "object": rng.choice(["bread1", "milk1", "ghost"])}
        if roll < 0.45:
            kind = rng.choice(["pick", "place", "open", "close", "press", "pour"])
            ids = ["bread1", "cup1", "milk1", "toaster1", "microwave1", "fridge1", "counter", "table"]
            from skillet.world import ACTION_KINDS

            args = [rng.choice(ids) for _ in range(ACTION_KINDS[kind])]
            return hand(kind, *args)
        if roll < 0.7:
            return speech(
                rng.choice(
                    [
                        "I'll show you fuzz",
                        "done",
                        "yes",
                        "no",
                        "make toast",
                        "assist me",
                        "gibberish",
                    ]
                )
            )
        if roll < 0.8:
            return {"type": "answer", "value": rng.choice(["yes", "no"])}
        if roll < 0.9:
            if rng.random() < 0.5:
                return {"type": "plan_feedback", "feedback": "approve"}
            return {"type": "plan_feedback", "feedback": "reject", "step": rng.randint(0, 3)}
        return {"type": "tick"}

    def test_fsm_safety_over_random_sequences(self, kitchen):
        tree, world, doc = kitchen
        rng = random.Random(99)
        for _ in range(200):
            s = Session(tree, world, doc)
            s.bootstrap()
            for _ in range(rng.randint(1, 12)):
                outs = feed(s, self._random_message(rng))
                assert outs
                # structural invariants of the session state
                assert (s.recorder is not None) == (s.phase == "Demonstrating")
                assert (s.pending_question is not None) == (s.phase == "Questioning")
                assert (s.pending_plan is not None) == (
                    s.phase in ("AwaitingValidation", "Executing")
                )
            seqs = [msg["seq"] for _, msg in s.trace]
            assert seqs == list(range(len(seqs)))
            for phase, msg in s.trace:
                if msg["type"] == "cue" and msg["payload"].get("kind") == "avatar_step":
                    assert phase == "AwaitingValidation"
                if msg["type"] == "world_update" and "step" in msg["payload"]:
                    assert phase == "Executing"
