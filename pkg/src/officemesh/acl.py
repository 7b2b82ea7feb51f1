"""Abstract message classes: performatives, envelopes, and the wire codec.

Every agent on the mesh talks through these types. The wire format is one
canonical JSON object per line (sorted keys, UTF-8), so transcripts diff
cleanly and identical envelopes always encode to identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any

BROADCAST = "*"


class AclError(Exception):
    pass


class EncodingError(AclError):
    pass


class ParseError(AclError):
    pass


class UnknownPerformative(ParseError):
    pass


class CompatibilityError(AclError):
    pass


class Performative(Enum):
    """The 11 speech-act types, in their canonical table order."""

    AGREE = "agree"
    CANCEL = "cancel"
    REFUSE = "refuse"
    REQUEST = "request"
    CALL_FOR_PROPOSALS = "call-for-proposals"
    PROPOSE = "propose"
    ACCEPT = "accept"
    REJECT = "reject"
    INFORM = "inform"
    QUERY = "query"
    CONFIRM = "confirm"


class PayloadKind(Enum):
    GOAL_SUBMISSION = "GoalSubmission"
    PLAN_REQUEST = "PlanRequest"
    PLAN_REPLY = "PlanReply"
    PROPOSAL_BODY = "ProposalBody"
    ACTION_REQUEST = "ActionRequest"
    ACTION_RESULT = "ActionResult"
    CAPABILITY_ADVERT = "CapabilityAdvertBody"
    STATE_UPDATE = "StateUpdate"
    QUERY_BODY = "QueryBody"
    QUERY_ANSWER = "QueryAnswer"
    CANCEL_BODY = "CancelBody"
    OBSERVATION = "Observation"


# Which payload kinds may travel under which performative. Anything outside
# this table is rejected by both encode and decode. PlanReply rides under
# propose (a planner's reply to a plan request) and QueryAnswer under inform
# (the answer leg of the query protocol); without those two rows the reply
# legs of the centralized flow and the login flow would have no legal carrier.
COMPATIBILITY: dict[Performative, frozenset[PayloadKind]] = {
    Performative.REQUEST: frozenset(
        {
            PayloadKind.GOAL_SUBMISSION,
            PayloadKind.PLAN_REQUEST,
            PayloadKind.ACTION_REQUEST,
            PayloadKind.STATE_UPDATE,
        }
    ),
    Performative.CALL_FOR_PROPOSALS: frozenset({PayloadKind.PLAN_REQUEST}),
    Performative.PROPOSE: frozenset({PayloadKind.PROPOSAL_BODY, PayloadKind.PLAN_REPLY}),
    Performative.AGREE: frozenset({PayloadKind.PROPOSAL_BODY}),
    Performative.ACCEPT: frozenset({PayloadKind.PROPOSAL_BODY}),
    Performative.REJECT: frozenset({PayloadKind.PROPOSAL_BODY}),
    Performative.INFORM: frozenset(
        {
            PayloadKind.CAPABILITY_ADVERT,
            PayloadKind.STATE_UPDATE,
            PayloadKind.QUERY_ANSWER,
        }
    ),
    Performative.CONFIRM: frozenset({PayloadKind.ACTION_RESULT, PayloadKind.OBSERVATION}),
    Performative.QUERY: frozenset({PayloadKind.QUERY_BODY}),
    Performative.REFUSE: frozenset({PayloadKind.PLAN_REQUEST, PayloadKind.ACTION_REQUEST}),
    Performative.CANCEL: frozenset({PayloadKind.CANCEL_BODY}),
}


@dataclass(frozen=True)
class Payload:
    kind: PayloadKind
    body: dict[str, Any]


@dataclass(frozen=True)
class Envelope:
    msg_id: str
    conversation_id: str
    performative: Performative
    sender: str
    recipient: str  # agent id, or BROADCAST
    payload: Payload
    sim_time: int
    seq: int


def performative_set() -> list[Performative]:
    """All 11 performatives in canonical table order."""
    return list(Performative)


def topic_for(p: Performative) -> str:
    return "/acl/" + p.value


def compatible(performative: Performative, kind: PayloadKind) -> bool:
    return kind in COMPATIBILITY[performative]


def validate_envelope(e: Envelope) -> None:
    """Raise EncodingError if the envelope cannot legally hit the wire."""
    if not isinstance(e.performative, Performative):
        raise EncodingError(f"not a performative: {e.performative!r}")
    if not isinstance(e.payload.kind, PayloadKind):
        raise EncodingError(f"not a payload kind: {e.payload.kind!r}")
    if not compatible(e.performative, e.payload.kind):
        raise EncodingError(
            f"payload kind {e.payload.kind.value} not allowed under {e.performative.value}"
        )
    for name, value in (("msg_id", e.msg_id), ("conversation_id", e.conversation_id),
                        ("sender", e.sender), ("recipient", e.recipient)):
        if not isinstance(value, str) or not value:
            raise EncodingError(f"{name} must be a non-empty string, got {value!r}")
    if not isinstance(e.sim_time, int) or isinstance(e.sim_time, bool) or e.sim_time < 0:
        raise EncodingError(f"sim_time must be a non-negative int, got {e.sim_time!r}")
    if not isinstance(e.seq, int) or isinstance(e.seq, bool) or e.seq < 1:
        raise EncodingError(f"seq must be a positive int, got {e.seq!r}")
    if not isinstance(e.payload.body, dict):
        raise EncodingError(f"payload body must be a JSON object, got {type(e.payload.body)}")


_ENVELOPE_FIELDS = {
    "conversation_id", "msg_id", "payload", "performative",
    "recipient", "seq", "sender", "sim_time",
}
_PAYLOAD_FIELDS = {"body", "kind"}

_PERFORMATIVE_BY_WIRE = {p.value: p for p in Performative}
_KIND_BY_WIRE = {k.value: k for k in PayloadKind}


def encode_envelope(e: Envelope) -> bytes:
    """One newline-terminated canonical JSON line."""
    validate_envelope(e)
    obj = {
        "conversation_id": e.conversation_id,
        "msg_id": e.msg_id,
        "payload": {"body": e.payload.body, "kind": e.payload.kind.value},
        "performative": e.performative.value,
        "recipient": e.recipient,
        "seq": e.seq,
        "sender": e.sender,
        "sim_time": e.sim_time,
    }
    try:
        line = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    except (TypeError, ValueError) as exc:
        raise EncodingError(f"payload body is not JSON-serializable: {exc}") from exc
    return (line + "\n").encode("utf-8")


def decode_envelope(data: bytes | str) -> Envelope:
    """Parse one wire line back into an Envelope. Strict: unknown fields fail."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8: {exc}") from exc
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed envelope line: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"envelope line must be a JSON object, got {type(obj)}")
    if set(obj) != _ENVELOPE_FIELDS:
        extra = sorted(set(obj) - _ENVELOPE_FIELDS)
        missing = sorted(_ENVELOPE_FIELDS - set(obj))
        raise ParseError(f"bad envelope fields (extra={extra}, missing={missing})")

    perf_name = obj["performative"]
    if perf_name not in _PERFORMATIVE_BY_WIRE:
        raise UnknownPerformative(f"unknown performative {perf_name!r}")
    performative = _PERFORMATIVE_BY_WIRE[perf_name]

    payload_obj = obj["payload"]
    if not isinstance(payload_obj, dict) or set(payload_obj) != _PAYLOAD_FIELDS:
        raise ParseError(f"payload must have exactly fields {sorted(_PAYLOAD_FIELDS)}")
    kind_name = payload_obj["kind"]
    if kind_name not in _KIND_BY_WIRE:
        raise CompatibilityError(f"unknown payload kind {kind_name!r}")
    kind = _KIND_BY_WIRE[kind_name]
    if not compatible(performative, kind):
        raise CompatibilityError(
            f"payload kind {kind.value} not allowed under {performative.value}"
        )
    if not isinstance(payload_obj["body"], dict):
        raise ParseError("payload body must be a JSON object")

    e = Envelope(
        msg_id=obj["msg_id"],
        conversation_id=obj["conversation_id"],
        performative=performative,
        sender=obj["sender"],
        recipient=obj["recipient"],
        payload=Payload(kind=kind, body=payload_obj["body"]),
        sim_time=obj["sim_time"],
        seq=obj["seq"],
    )
    try:
        validate_envelope(e)
    except EncodingError as exc:
        raise ParseError(str(exc)) from exc
    return e
