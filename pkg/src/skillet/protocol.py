"""Wire protocol: newline-delimited JSON messages, identical framing for the
live socket server and the offline script runner.  See PROTOCOL.md."""

from __future__ import annotations

import json
from typing import Any, Mapping

from .errors import ProtocolError
from .world import ACTION_KINDS, PrimitiveAction

PROTOCOL_VERSION = 1

INBOUND_TYPES = ("gaze", "hand_action", "speech", "answer", "plan_feedback", "tick")
OUTBOUND_TYPES = ("cue", "world_update", "question", "plan_proposal", "error")
CUE_KINDS = (
    "object_label",
    "action_label",
    "highlight",
    "particles",
    "avatar_step",
    "hologram",
    "speech",
)


def dumps(message: Mapping[str, Any]) -> str:
    """Canonical one-line encoding (stable key order, compact separators)."""
    return json.dumps(message, sort_keys=True, separators=(",", ":"))


def parse_line(line: str, lineno: int | None = None) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON: {exc.msg}", line=lineno) from exc
    if not isinstance(obj, dict):
        raise ProtocolError("message must be a JSON object", line=lineno)
    return obj


def parse_action(payload: Any) -> PrimitiveAction:
    if not isinstance(payload, Mapping):
        raise ProtocolError("hand_action.action must be an object")
    kind = payload.get("kind")
    actor = payload.get("actor")
    args = payload.get("args")
    if kind not in ACTION_KINDS:
        raise ProtocolError(f"unknown action kind {kind!r}")
    if not isinstance(actor, str) or not actor:
        raise ProtocolError("hand_action.action.actor must be a non-empty string")
    if not isinstance(args, list) or not all(isinstance(a, str) for a in args):
        raise ProtocolError("hand_action.action.args must be a list of ids")
    if len(args) != ACTION_KINDS[kind]:
        raise ProtocolError(
            f"{kind} takes {ACTION_KINDS[kind]} argument(s), got {len(args)}"
        )
    return PrimitiveAction(kind, actor, tuple(args))


def validate_inbound(obj: Mapping[str, Any], lineno: int | None = None) -> dict:
    """Schema-check one inbound message; returns a normalized copy."""
    mtype = obj.get("type")
    if mtype not in INBOUND_TYPES:
        raise ProtocolError(f"unknown message type {mtype!r}", line=lineno)
    out: dict[str, Any] = {"type": mtype}
    if "v" in obj:
        if obj["v"] != PROTOCOL_VERSION:
            raise ProtocolError(
                f"protocol version {obj['v']!r} unsupported (want {PROTOCOL_VERSION})",
                line=lineno,
            )
        out["v"] = obj["v"]
    if mtype == "gaze":
        target = obj.get("object")
        if not isinstance(target, str) or not target:
            raise ProtocolError("gaze.object must be a non-empty string", line=lineno)
        out["object"] = target
    elif mtype == "hand_action":
        out["action"] = parse_action(obj.get("action"))
    elif mtype == "speech":
        text = obj.get("text")
        if not isinstance(text, str):
            raise ProtocolError("speech.text must be a string", line=lineno)
        out["text"] = text
    elif mtype == "answer":
        value = obj.get("value")
        if value not in ("yes", "no"):
            raise ProtocolError("answer.value must be 'yes' or 'no'", line=lineno)
        out["value"] = value
    elif mtype == "plan_feedback":
        feedback = obj.get("feedback")
        if feedback not in ("approve", "reject"):
            raise ProtocolError(
                "plan_feedback.feedback must be 'approve' or 'reject'", line=lineno
            )
        out["feedback"] = feedback
        if feedback == "reject":
            step = obj.get("step")
            if not isinstance(step, int) or isinstance(step, bool) or step < 0:
                raise ProtocolError(
                    "plan_feedback.step must be a non-negative integer", line=lineno
                )
            out["step"] = step
    return out


def parse_script(text: str) -> list[dict]:
    """Parse a whole script; raises ProtocolError with the 1-based line number."""
    messages: list[dict] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        obj = parse_line(line, lineno=lineno)
        messages.append(validate_inbound(obj, lineno=lineno))
    if messages and messages[0].get("v") != PROTOCOL_VERSION:
        raise ProtocolError(
            "first message must carry the protocol version field 'v'", line=1
        )
    return messages
