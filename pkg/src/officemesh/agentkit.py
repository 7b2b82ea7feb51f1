"""Base-agent machinery: heartbeats, liveness tracking, message dispatch.

Every agent owns one bus session, drains its inbox sequentially (handlers for
one agent never run concurrently), and broadcasts its full capability advert
on a fixed heartbeat period. Liveness is purely tick-based: an agent whose
last heartbeat is older than the death timeout is marked dead at the next
sweep, and a later heartbeat resurrects it.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable

from .acl import BROADCAST, Envelope, Payload, PayloadKind, Performative, performative_set, topic_for
from .bus import FILTER_OWN, Broker, Session
from .strips import ActionSchema, Atom, Vocabulary, parse_schema, print_schema

DEFAULT_HEARTBEAT_PERIOD = 10
DEFAULT_DEATH_TIMEOUT = 30
DEFAULT_SWEEP_INTERVAL = 5


class AgentKind(Enum):
    ACTUATOR = "actuator"
    SENSOR = "sensor"
    REASONER = "reasoner"
    INTERFACE = "interface"


class MalformedAdvert(Exception):
    pass


@dataclass
class Clock:
    """Simulated time in ticks, owned by the kernel. Never wall clock."""

    now: int = 0


@dataclass(frozen=True)
class CapabilityAdvert:
    agent_id: str
    kind: AgentKind
    location: str | None = None
    schemas: tuple[ActionSchema, ...] = ()
    sensed: tuple[Atom, ...] = ()
    heartbeat_period: int = DEFAULT_HEARTBEAT_PERIOD
    vocabulary: Vocabulary = field(default_factory=Vocabulary)

    def __post_init__(self):
        for s in self.schemas:
            if s.owner != self.agent_id:
                raise ValueError(f"schema {s.name} owned by {s.owner}, advert by {self.agent_id}")
        if self.heartbeat_period < 1:
            raise ValueError("heartbeat_period must be >= 1 tick")

    def at(self, location: str) -> "CapabilityAdvert":
        return replace(self, location=location)

    def to_body(self) -> dict:
        v = self.vocabulary
        return {
            "agent_id": self.agent_id,
            "kind": self.kind.value,
            "location": self.location,
            "schemas_pddl": [print_schema(s) for s in self.schemas],
            "sensed": [list(a) for a in self.sensed],
            "heartbeat_period": self.heartbeat_period,
            "vocabulary": {
                "types": dict(v.types),
                "predicates": {k: list(sig) for k, sig in v.predicates.items()},
                "functions": {k: list(sig) for k, sig in v.functions.items()},
                "constants": dict(v.constants),
            },
        }

    @classmethod
    def from_body(cls, body: dict) -> "CapabilityAdvert":
        try:
            vocab_obj = body.get("vocabulary", {})
            vocab = Vocabulary(
                types=dict(vocab_obj.get("types", {})),
                predicates={k: tuple(v) for k, v in vocab_obj.get("predicates", {}).items()},
                functions={k: tuple(v) for k, v in vocab_obj.get("functions", {}).items()},
                constants=dict(vocab_obj.get("constants", {})),
            )
            agent_id = body["agent_id"]
            schemas = tuple(
                parse_schema(text, owner=agent_id) for text in body.get("schemas_pddl", [])
            )
            return cls(
                agent_id=agent_id,
                kind=AgentKind(body["kind"]),
                location=body.get("location"),
                schemas=schemas,
                sensed=tuple(tuple(a) for a in body.get("sensed", [])),
                heartbeat_period=int(body.get("heartbeat_period", DEFAULT_HEARTBEAT_PERIOD)),
                vocabulary=vocab,
            )
        except MalformedAdvert:
            raise
        except Exception as exc:
            raise MalformedAdvert(f"bad advert body: {exc}") from exc


class LivenessStatus(Enum):
    ALIVE = "alive"
    DEAD = "dead"


class HeartbeatResult(Enum):
    UNCHANGED = "unchanged"
    UPDATED = "updated"
    NEW = "new"
    RESURRECTED = "resurrected"


@dataclass
class LivenessEntry:
    advert: CapabilityAdvert
    last_seen: int
    status: LivenessStatus = LivenessStatus.ALIVE


class LivenessTable:
    def __init__(self):
        self.entries: dict[str, LivenessEntry] = {}
        self.rejected_adverts = 0

    def record_heartbeat(self, envelope_or_advert, now: int) -> HeartbeatResult:
        """Fold one heartbeat in; says whether capabilities changed."""
        if isinstance(envelope_or_advert, CapabilityAdvert):
            advert = envelope_or_advert
        else:
            e: Envelope = envelope_or_advert
            if e.payload.kind is not PayloadKind.CAPABILITY_ADVERT:
                self.rejected_adverts += 1
                raise MalformedAdvert(f"not an advert payload: {e.payload.kind}")
            try:
                advert = CapabilityAdvert.from_body(e.payload.body)
            except MalformedAdvert:
                self.rejected_adverts += 1
                raise
        entry = self.entries.get(advert.agent_id)
        if entry is None:
            self.entries[advert.agent_id] = LivenessEntry(advert, now)
            return HeartbeatResult.NEW
        schemas_changed = sorted(entry.advert.schemas, key=lambda s: s.name) != sorted(
            advert.schemas, key=lambda s: s.name
        )
        was_dead = entry.status is LivenessStatus.DEAD
        entry.advert = advert
        entry.last_seen = now
        entry.status = LivenessStatus.ALIVE
        if was_dead:
            return HeartbeatResult.RESURRECTED
        return HeartbeatResult.UPDATED if schemas_changed else HeartbeatResult.UNCHANGED

    def sweep(self, now: int, death_timeout: int) -> list[str]:
        """Mark overdue agents dead; returns only the newly transitioned ids."""
        max_period = max(
            (e.advert.heartbeat_period for e in self.entries.values()), default=1
        )
        if death_timeout < 2 * max_period:
            raise ValueError(
                f"death_timeout {death_timeout} < 2 x heartbeat period {max_period}"
            )
        newly_dead = []
        for agent_id, entry in sorted(self.entries.items()):
            if entry.status is LivenessStatus.ALIVE and now - entry.last_seen > death_timeout:
                entry.status = LivenessStatus.DEAD
                newly_dead.append(agent_id)
        return newly_dead

    def is_alive(self, agent_id: str) -> bool:
        entry = self.entries.get(agent_id)
        return entry is not None and entry.status is LivenessStatus.ALIVE

    def alive_adverts(self) -> list[CapabilityAdvert]:
        return [
            e.advert
            for _, e in sorted(self.entries.items())
            if e.status is LivenessStatus.ALIVE
        ]


def record_heartbeat(table: LivenessTable, envelope: Envelope, now: int) -> HeartbeatResult:
    return table.record_heartbeat(envelope, now)


def liveness_sweep(table: LivenessTable, now: int, death_timeout: int) -> list[str]:
    return table.sweep(now, death_timeout)


Handler = Callable[[Envelope], None]


class AgentRuntime:
    """One agent's sequential task: inbox, handlers, heartbeat, timers.

    The kernel calls on_tick once per tick and drain until quiescence; while
    the agent is disabled (powered down in the world) it publishes nothing and
    discards whatever arrives.
    """

    def __init__(self, advert: CapabilityAdvert, session: Session, clock: Clock,
                 handlers: dict[Performative, list[Handler]] | None = None):
        self.advert = advert
        self.session = session
        self.clock = clock
        self.handlers: dict[Performative, list[Handler]] = handlers or {}
        self.broadcast_cache: deque[Envelope] = deque(maxlen=256)
        self.tick_hooks: list[Callable[[int], None]] = []
        self.enabled = True
        self._seq = 0
        self._conversations = 0
        self._next_heartbeat = clock.now

    @property
    def agent_id(self) -> str:
        return self.advert.agent_id

    def new_conversation_id(self) -> str:
        self._conversations += 1
        return f"{self.agent_id}:{self._conversations}"

    def add_handler(self, performative: Performative, handler: Handler) -> None:
        self.handlers.setdefault(performative, []).append(handler)

    def publish(self, performative: Performative, kind: PayloadKind, body: dict,
                recipient: str, conversation_id: str | None = None) -> Envelope | None:
        if not self.enabled:
            return None
        self._seq += 1
        e = Envelope(
            msg_id=f"{self.agent_id}#{self._seq}",
            conversation_id=conversation_id or self.new_conversation_id(),
            performative=performative,
            sender=self.agent_id,
            recipient=recipient,
            payload=Payload(kind, body),
            sim_time=self.clock.now,
            seq=self._seq,
        )
        self.session.publish(e)
        return e

    def heartbeat_now(self) -> None:
        self.publish(
            Performative.INFORM,
            PayloadKind.CAPABILITY_ADVERT,
            self.advert.to_body(),
            BROADCAST,
        )

    def update_advert(self, advert: CapabilityAdvert) -> None:
        self.advert = advert

    def on_tick(self, now: int) -> None:
        if not self.enabled:
            return
        if now >= self._next_heartbeat:
            self.heartbeat_now()
            self._next_heartbeat = now + self.advert.heartbeat_period
        for hook in list(self.tick_hooks):
            hook(now)

    def set_enabled(self, enabled: bool) -> None:
        self.enabled = enabled
        if enabled:
            # fresh heartbeat schedule from the resurrection tick
            self._next_heartbeat = self.clock.now

    def drain(self) -> int:
        """Process everything pending; returns the number handled."""
        handled = 0
        while True:
            e = self.session.poll()
            if e is None:
                return handled
            handled += 1
            if not self.enabled:
                continue  # powered-down agents ignore traffic
            self.dispatch(e)

    def dispatch(self, e: Envelope) -> None:
        if e.recipient == BROADCAST:
            self.broadcast_cache.append(e)
        for handler in list(self.handlers.get(e.performative, [])):
            handler(e)


def start_agent(advert: CapabilityAdvert,
                handlers: dict[Performative, list[Handler]] | None,
                broker: Broker, clock: Clock, announce: bool = True) -> AgentRuntime:
    """Connect, subscribe to all 11 topics (own id + broadcast), heartbeat once.

    announce=False boots the agent silent (powered down from the start)."""
    session = broker.connect(advert.agent_id)
    for p in performative_set():
        session.subscribe(topic_for(p), FILTER_OWN)
    runtime = AgentRuntime(advert, session, clock, handlers)
    if announce:
        runtime.heartbeat_now()
        runtime._next_heartbeat = clock.now + advert.heartbeat_period
    return runtime
