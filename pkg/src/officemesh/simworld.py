"""Deterministic smart-office world and the concrete agents that live in it.

The kernel owns the clock and is the single scheduler. Each tick it advances
the world (failure script, scripted temperature changes, motion events), syncs
agent power state, runs every agent's tick hook in registration order, then
lets agents drain their inboxes to global quiescence. Nothing reads wall
clock, so a run is a pure function of its configuration.

Agents never touch WorldState directly except through their own sensing and
acting; a powered-down agent publishes nothing and discards its inbox.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .acl import BROADCAST, Envelope, PayloadKind, Performative
from .agentkit import AgentKind, AgentRuntime, CapabilityAdvert, Clock
from .bus import Broker
from .strips import ActionSchema, Atom, Literal, Vocabulary, lit, neg
from .reasoning import goal_to_json

UP = "up"
DOWN = "down"


class WorldConfigError(Exception):
    pass


@dataclass
class OfficeMap:
    nodes: list[str]
    edges: dict[frozenset, int]

    @classmethod
    def from_config(cls, cfg: dict) -> "OfficeMap":
        nodes = list(cfg["nodes"])
        edges: dict[frozenset, int] = {}
        for a, b, w in cfg["edges"]:
            if a not in nodes or b not in nodes:
                raise WorldConfigError(f"edge {a}-{b} uses unknown node")
            if int(w) < 1:
                raise WorldConfigError(f"edge {a}-{b} weight must be >= 1")
            edges[frozenset((a, b))] = int(w)
        m = cls(nodes, edges)
        if not m.connected():
            raise WorldConfigError("map must be connected")
        return m

    def connected(self) -> bool:
        if not self.nodes:
            return False
        seen = {self.nodes[0]}
        frontier = [self.nodes[0]]
        while frontier:
            n = frontier.pop()
            for other in self.nodes:
                if other not in seen and frozenset((n, other)) in self.edges:
                    seen.add(other)
                    frontier.append(other)
        return len(seen) == len(self.nodes)

    def weight(self, a: str, b: str) -> int | None:
        return self.edges.get(frozenset((a, b)))

    def adjacency_atoms(self) -> list[Atom]:
        atoms = []
        for pair in self.edges:
            a, b = sorted(pair)
            atoms.append(("adjacent", a, b))
            atoms.append(("adjacent", b, a))
        return sorted(atoms)

    def edge_cost_values(self) -> dict[Atom, Fraction]:
        values: dict[Atom, Fraction] = {}
        for pair, w in self.edges.items():
            a, b = sorted(pair)
            values[("edge-cost", a, b)] = Fraction(w)
            values[("edge-cost", b, a)] = Fraction(w)
        return values

    def location_objects(self) -> dict[str, str]:
        return {n: "location" for n in self.nodes}


@dataclass(order=True)
class WorldEvent:
    tick: int
    seq: int
    kind: str = field(compare=False)  # health | temperature | motion
    data: dict = field(compare=False)


class World:
    def __init__(self, office_map: OfficeMap, temperatures: dict[str, float]):
        self.map = office_map
        self.temperatures = dict(temperatures)
        self.agent_pos: dict[str, str] = {}
        self.health: dict[str, str] = {}
        self.events: list[WorldEvent] = []
        self.motion_now: list[str] = []
        self._event_seq = 0

    def place(self, agent_id: str, node: str | None) -> None:
        if node is not None and node not in self.map.nodes:
            raise WorldConfigError(f"{agent_id} placed at unknown node {node}")
        if node is not None:
            self.agent_pos[agent_id] = node
        self.health[agent_id] = UP

    def schedule(self, tick: int, kind: str, data: dict) -> None:
        self._event_seq += 1
        self.events.append(WorldEvent(tick, self._event_seq, kind, data))
        self.events.sort()

    def set_health(self, agent_id: str, state: str) -> None:
        if state not in (UP, DOWN):
            raise WorldConfigError(f"bad health state {state!r}")
        self.health[agent_id] = state

    def step(self, now: int) -> list[WorldEvent]:
        """Fire everything due at this tick, in schedule order."""
        self.motion_now = []
        fired = []
        while self.events and self.events[0].tick <= now:
            ev = self.events.pop(0)
            if ev.kind == "health":
                self.set_health(ev.data["agent"], ev.data["state"])
            elif ev.kind == "temperature":
                self.temperatures[ev.data["location"]] = ev.data["value"]
            elif ev.kind == "motion":
                self.motion_now.append(ev.data["location"])
            fired.append(ev)
        return fired

    def snapshot(self) -> dict:
        return {
            "temperatures": dict(sorted(self.temperatures.items())),
            "agent_pos": dict(sorted(self.agent_pos.items())),
            "health": dict(sorted(self.health.items())),
        }


# -- advert builders -----------------------------------------------------------

_BASE_TYPES = {"agent": "object", "location": "object"}


def turtlebot_advert(agent_id: str, location: str) -> CapabilityAdvert:
    vocab = Vocabulary(
        types=dict(_BASE_TYPES),
        predicates={
            "at": ("agent", "location"),
            "adjacent": ("location", "location"),
            "temperature-reported": ("location",),
            "validated": ("location",),
        },
        functions={"edge-cost": ("location", "location")},
        constants={agent_id: "agent"},
    )
    move = ActionSchema(
        name="move",
        owner=agent_id,
        params=(("?from", "location"), ("?to", "location")),
        precond=(
            lit("at", agent_id, "?from"),
            lit("adjacent", "?from", "?to"),
            neg("at", agent_id, "?to"),
        ),
        add_effects=frozenset({("at", agent_id, "?to")}),
        del_effects=frozenset({("at", agent_id, "?from")}),
        cost=("edge-cost", "?from", "?to"),
    )
    report = ActionSchema(
        name="report-temp",
        owner=agent_id,
        params=(("?l", "location"),),
        precond=(lit("at", agent_id, "?l"),),
        add_effects=frozenset({("temperature-reported", "?l")}),
        del_effects=frozenset(),
        cost=Fraction(1),
    )
    login = ActionSchema(
        name="present-login",
        owner=agent_id,
        params=(("?l", "location"),),
        precond=(lit("at", agent_id, "?l"),),
        add_effects=frozenset({("validated", "?l")}),
        del_effects=frozenset(),
        cost=Fraction(1),
    )
    return CapabilityAdvert(
        agent_id=agent_id,
        kind=AgentKind.ACTUATOR,
        location=location,
        schemas=(move, report, login),
        sensed=(),
        vocabulary=vocab,
    )


def sensor_advert(agent_id: str, location: str) -> CapabilityAdvert:
    vocab = Vocabulary(
        types=dict(_BASE_TYPES),
        predicates={
            "at": ("agent", "location"),
            "temperature-reported": ("location",),
        },
        constants={agent_id: "agent", location: "location"},
    )
    sense = ActionSchema(
        name="sense",
        owner=agent_id,
        params=(),
        precond=(lit("at", agent_id, location),),
        add_effects=frozenset({("temperature-reported", location)}),
        del_effects=frozenset(),
        cost=Fraction(1),
    )
    return CapabilityAdvert(
        agent_id=agent_id,
        kind=AgentKind.SENSOR,
        location=location,
        schemas=(sense,),
        sensed=(("temperature-reported", location),),
        vocabulary=vocab,
    )


def camera_advert(agent_id: str, location: str) -> CapabilityAdvert:
    vocab = Vocabulary(
        types=dict(_BASE_TYPES),
        predicates={
            "camera-aimed": ("agent",),
            "recording": ("agent",),
            "snapshot-taken": ("agent",),
        },
        constants={agent_id: "agent"},
    )
    def stub(name: str, effect: str) -> ActionSchema:
        return ActionSchema(
            name=name,
            owner=agent_id,
            params=(),
            precond=(),
            add_effects=frozenset({(effect, agent_id)}),
            del_effects=frozenset(),
            cost=Fraction(1),
        )
    schemas = (
        stub("pan", "camera-aimed"),
        stub("tilt", "camera-aimed"),
        stub("zoom", "camera-aimed"),
        stub("record", "recording"),
        stub("snap", "snapshot-taken"),
    )
    return CapabilityAdvert(
        agent_id=agent_id,
        kind=AgentKind.ACTUATOR,
        location=location,
        schemas=schemas,
        sensed=(),
        vocabulary=vocab,
    )


def reasoner_advert(agent_id: str) -> CapabilityAdvert:
    return CapabilityAdvert(agent_id=agent_id, kind=AgentKind.REASONER)


def interface_advert(agent_id: str) -> CapabilityAdvert:
    return CapabilityAdvert(agent_id=agent_id, kind=AgentKind.INTERFACE)


# -- concrete sim agents ---------------------------------------------------------

@dataclass
class _Pending:
    conversation_id: str
    step: int
    requester: str
    action: str
    args: tuple[str, ...]
    due: int | None  # None: waiting on something other than time (login answer)
    query_conversation: str | None = None


class Turtlebot:
    """Mobile base: moves along map edges (edge-weight ticks per move), reads
    temperature with its on-board IR sensor, and presents the login screen."""

    def __init__(self, runtime: AgentRuntime, world: World):
        self.runtime = runtime
        self.world = world
        self.pending: _Pending | None = None
        self.login_target = "keyboard-1"
        runtime.add_handler(Performative.REQUEST, self.on_action_request)
        runtime.add_handler(Performative.INFORM, self.on_inform)
        runtime.add_handler(Performative.CANCEL, self.on_cancel)
        runtime.tick_hooks.append(self.on_tick)

    @property
    def agent_id(self) -> str:
        return self.runtime.agent_id

    @property
    def position(self) -> str:
        return self.world.agent_pos[self.agent_id]

    def _confirm(self, p_or_e, step: int, status: str, reason: str | None = None,
                 observation: dict | None = None) -> None:
        conv = p_or_e.conversation_id if isinstance(p_or_e, _Pending) else p_or_e.conversation_id
        to = p_or_e.requester if isinstance(p_or_e, _Pending) else p_or_e.sender
        body: dict = {"step": step, "status": status}
        if reason:
            body["reason"] = reason
        if observation:
            body["observation"] = observation
        self.runtime.publish(
            Performative.CONFIRM, PayloadKind.ACTION_RESULT, body, to,
            conversation_id=conv,
        )

    def on_action_request(self, e: Envelope) -> None:
        if e.payload.kind is not PayloadKind.ACTION_REQUEST:
            return
        body = e.payload.body
        step = body.get("step", 0)
        if self.pending is not None:
            same = (self.pending.conversation_id == e.conversation_id
                    and self.pending.step == step)
            if same:
                return  # retry of the in-flight action; it will confirm on its own
            self.runtime.publish(
                Performative.REFUSE, PayloadKind.ACTION_REQUEST,
                {"reason": "busy"}, e.sender, conversation_id=e.conversation_id,
            )
            return
        action = body.get("schema", "")
        args = tuple(body.get("args", []))
        now = self.runtime.clock.now
        if action == "move":
            if len(args) != 2 or args[0] != self.position:
                self._confirm(e, step, "failure", reason="wrong-position")
                return
            w = self.world.map.weight(args[0], args[1])
            if w is None:
                self._confirm(e, step, "failure", reason="no-edge")
                return
            self.pending = _Pending(e.conversation_id, step, e.sender, "move", args, now + w)
        elif action == "report-temp":
            if len(args) != 1 or args[0] != self.position:
                self._confirm(e, step, "failure", reason="wrong-position")
                return
            self.pending = _Pending(e.conversation_id, step, e.sender, "report-temp", args, now + 1)
        elif action == "present-login":
            if len(args) != 1 or args[0] != self.position:
                self._confirm(e, step, "failure", reason="wrong-position")
                return
            query = self.runtime.publish(
                Performative.QUERY, PayloadKind.QUERY_BODY,
                {"prompt": f"login at {args[0]}"},
                self.login_target,
            )
            self.pending = _Pending(
                e.conversation_id, step, e.sender, "present-login", args, None,
                query_conversation=query.conversation_id if query else None,
            )
        else:
            self._confirm(e, step, "failure", reason="unknown-action")

    def on_inform(self, e: Envelope) -> None:
        if e.payload.kind is not PayloadKind.QUERY_ANSWER:
            return
        p = self.pending
        if p is None or p.action != "present-login" or e.conversation_id != p.query_conversation:
            return
        self.pending = None
        self._confirm(p, p.step, "success",
                      observation={"about": "login", "answer": e.payload.body.get("answer")})

    def on_cancel(self, e: Envelope) -> None:
        if self.pending is not None and self.pending.conversation_id == e.conversation_id:
            self.pending = None

    def on_tick(self, now: int) -> None:
        p = self.pending
        if p is None or p.due is None or now < p.due:
            return
        self.pending = None
        if p.action == "move":
            self.world.agent_pos[self.agent_id] = p.args[1]
            self.runtime.update_advert(self.runtime.advert.at(p.args[1]))
            self.runtime.heartbeat_now()  # fresh position reaches the maintainers now
            self._confirm(p, p.step, "success")
        elif p.action == "report-temp":
            value = self.world.temperatures[p.args[0]]
            obs = {"about": "temperature", "location": p.args[0], "value": value}
            self._confirm(p, p.step, "success", observation=obs)
            self.runtime.publish(
                Performative.CONFIRM, PayloadKind.OBSERVATION, obs, BROADCAST,
            )


class StationarySensor:
    """Fixed temperature node: one sense action, one-tick latency."""

    def __init__(self, runtime: AgentRuntime, world: World):
        self.runtime = runtime
        self.world = world
        self.pending: _Pending | None = None
        runtime.add_handler(Performative.REQUEST, self.on_action_request)
        runtime.add_handler(Performative.CANCEL, self.on_cancel)
        runtime.tick_hooks.append(self.on_tick)

    def on_action_request(self, e: Envelope) -> None:
        if e.payload.kind is not PayloadKind.ACTION_REQUEST:
            return
        step = e.payload.body.get("step", 0)
        if self.pending is not None:
            if (self.pending.conversation_id == e.conversation_id
                    and self.pending.step == step):
                return
            self.runtime.publish(
                Performative.REFUSE, PayloadKind.ACTION_REQUEST,
                {"reason": "busy"}, e.sender, conversation_id=e.conversation_id,
            )
            return
        if e.payload.body.get("schema") != "sense":
            self.runtime.publish(
                Performative.CONFIRM, PayloadKind.ACTION_RESULT,
                {"step": step, "status": "failure", "reason": "unknown-action"},
                e.sender, conversation_id=e.conversation_id,
            )
            return
        self.pending = _Pending(
            e.conversation_id, step, e.sender, "sense", (),
            self.runtime.clock.now + 1,
        )

    def on_cancel(self, e: Envelope) -> None:
        if self.pending is not None and self.pending.conversation_id == e.conversation_id:
            self.pending = None

    def on_tick(self, now: int) -> None:
        p = self.pending
        if p is None or now < p.due:
            return
        self.pending = None
        location = self.runtime.advert.location
        value = self.world.temperatures[location]
        obs = {"about": "temperature", "location": location, "value": value}
        self.runtime.publish(
            Performative.CONFIRM, PayloadKind.ACTION_RESULT,
            {"step": p.step, "status": "success", "observation": obs},
            p.requester, conversation_id=p.conversation_id,
        )
        self.runtime.publish(
            Performative.CONFIRM, PayloadKind.OBSERVATION, obs, BROADCAST,
        )


class Camera:
    """PTZ camera: stub controls, plus motion detection at the watched node.
    A detected motion broadcasts an observation and submits a validation goal,
    so the plan request originates from the agent itself."""

    def __init__(self, runtime: AgentRuntime, world: World, watches: str,
                 requester_id: str = "pr-1", mode: str = "centralized"):
        self.runtime = runtime
        self.world = world
        self.watches = watches
        self.requester_id = requester_id
        self.mode = mode
        runtime.add_handler(Performative.REQUEST, self.on_action_request)
        runtime.tick_hooks.append(self.on_tick)
        self._stub_pending: _Pending | None = None

    def on_action_request(self, e: Envelope) -> None:
        if e.payload.kind is not PayloadKind.ACTION_REQUEST:
            return
        step = e.payload.body.get("step", 0)
        if self._stub_pending is not None:
            self.runtime.publish(
                Performative.REFUSE, PayloadKind.ACTION_REQUEST,
                {"reason": "busy"}, e.sender, conversation_id=e.conversation_id,
            )
            return
        self._stub_pending = _Pending(
            e.conversation_id, step, e.sender,
            e.payload.body.get("schema", ""), (), self.runtime.clock.now + 1,
        )

    def on_tick(self, now: int) -> None:
        if self._stub_pending is not None and now >= self._stub_pending.due:
            p = self._stub_pending
            self._stub_pending = None
            self.runtime.publish(
                Performative.CONFIRM, PayloadKind.ACTION_RESULT,
                {"step": p.step, "status": "success"},
                p.requester, conversation_id=p.conversation_id,
            )
        if self.watches in self.world.motion_now:
            self.runtime.publish(
                Performative.CONFIRM, PayloadKind.OBSERVATION,
                {"about": "motion", "location": self.watches}, BROADCAST,
            )
            goal = (Literal(True, ("validated", self.watches)),)
            self.runtime.publish(
                Performative.REQUEST, PayloadKind.GOAL_SUBMISSION,
                {"goal": goal_to_json(goal), "mode": self.mode},
                self.requester_id,
            )


class QueryNotFound(Exception):
    pass


class KeyboardAgent:
    """The user interface: submits scripted goals and answers agent queries.
    Auto-answer, when configured, makes scenario 3 runnable headless."""

    def __init__(self, runtime: AgentRuntime, requester_id: str = "pr-1",
                 auto_answer: dict | None = None, mode: str = "centralized"):
        self.runtime = runtime
        self.requester_id = requester_id
        self.auto_answer = auto_answer
        self.mode = mode
        self.open_queries: dict[str, dict] = {}
        self.goal_schedule: list[tuple[int, tuple[Literal, ...]]] = []
        self._auto_due: list[tuple[int, str]] = []
        runtime.add_handler(Performative.QUERY, self.on_query)
        runtime.tick_hooks.append(self.on_tick)

    def schedule_goal(self, tick: int, goal: tuple[Literal, ...]) -> None:
        self.goal_schedule.append((tick, goal))
        self.goal_schedule.sort(key=lambda g: g[0])

    def on_query(self, e: Envelope) -> None:
        if e.payload.kind is not PayloadKind.QUERY_BODY:
            return
        self.open_queries[e.conversation_id] = {
            "prompt": e.payload.body.get("prompt", ""),
            "asker": e.sender,
            "tick": self.runtime.clock.now,
        }
        if self.auto_answer is not None:
            due = self.runtime.clock.now + int(self.auto_answer.get("delay", 2))
            self._auto_due.append((due, e.conversation_id))

    def respond(self, conversation_id: str, answer: str) -> None:
        query = self.open_queries.pop(conversation_id, None)
        if query is None:
            raise QueryNotFound(f"no open query for conversation {conversation_id}")
        self.runtime.publish(
            Performative.INFORM, PayloadKind.QUERY_ANSWER,
            {"answer": answer}, query["asker"], conversation_id=conversation_id,
        )

    def on_tick(self, now: int) -> None:
        while self.goal_schedule and self.goal_schedule[0][0] <= now:
            _, goal = self.goal_schedule.pop(0)
            self.runtime.publish(
                Performative.REQUEST, PayloadKind.GOAL_SUBMISSION,
                {"goal": goal_to_json(goal), "mode": self.mode},
                self.requester_id,
            )
        for due, conv in list(self._auto_due):
            if now >= due:
                self._auto_due.remove((due, conv))
                if conv in self.open_queries:
                    self.respond(conv, self.auto_answer.get("answer", "ok"))


class WorldControl:
    """Applies operator commands (failure injection) to world state. Always
    registered, so an attached console cannot change transcript shape."""

    def __init__(self, runtime: AgentRuntime, world: World):
        self.runtime = runtime
        self.world = world
        runtime.add_handler(Performative.REQUEST, self.on_request)

    def on_request(self, e: Envelope) -> None:
        if e.payload.kind is not PayloadKind.STATE_UPDATE:
            return
        change = e.payload.body.get("health")
        if not change:
            return
        agent, state = change.get("agent"), change.get("state")
        if agent in self.world.health and state in (UP, DOWN):
            # applied via the event queue so it lands at the next tick boundary
            self.world.schedule(self.runtime.clock.now + 1, "health",
                                {"agent": agent, "state": state})


# -- the deterministic kernel -----------------------------------------------------

class SimKernel:
    """Single scheduler: world step, tick hooks in registration order, then
    drain every inbox to global quiescence."""

    def __init__(self, broker: Broker, clock: Clock, world: World,
                 max_drain_rounds: int = 500):
        self.broker = broker
        self.clock = clock
        self.world = world
        self.agents: list = []  # objects exposing .runtime
        self.max_drain_rounds = max_drain_rounds
        self.snapshot_ticks: set[int] = set()
        self.history: list[dict] = []
        self.tick_callbacks: list = []  # callables(now) run after world step

    def add_agent(self, agent) -> None:
        self.agents.append(agent)

    def runtime_of(self, agent_id: str) -> AgentRuntime | None:
        for a in self.agents:
            if a.runtime.agent_id == agent_id:
                return a.runtime
        return None

    def run(self, until_tick: int) -> None:
        for now in range(self.clock.now, until_tick):
            self.clock.now = now
            self.world.step(now)
            for agent in self.agents:
                enabled = self.world.health.get(agent.runtime.agent_id, UP) == UP
                if agent.runtime.enabled != enabled:
                    agent.runtime.set_enabled(enabled)
            for cb in self.tick_callbacks:
                cb(now)
            for agent in self.agents:
                agent.runtime.on_tick(now)
            rounds = 0
            while any(a.runtime.session.pending() for a in self.agents):
                rounds += 1
                if rounds > self.max_drain_rounds:
                    raise RuntimeError(f"message livelock at tick {now}")
                for agent in self.agents:
                    agent.runtime.drain()
            snapshot = {"tick": now, **self.world.snapshot()}
            self.history.append(snapshot)
            if now in self.snapshot_ticks:
                self.broker.append_transcript_record({"snapshot": snapshot})
        self.clock.now = until_tick
