"""Scenario runner: boots a broker plus the full agent stack from a world
config, drives the deterministic kernel, and checks transcript assertions.

Assertion language (JSON, per scenario file): envelope existence, ordering
(first/then), absence after a tick, final-world-state subsets, death-detection
windows, and replay validation of executed steps against the goal. Transcript
bytes are a pure function of (scenario, mode, seed); the seed is accepted for
interface stability but nothing in the simulation draws randomness.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger("officemesh.harness")

from .agentkit import Clock
from .bus import Broker
from .reasoning import (
    CENTRALIZED,
    DECENTRALIZED,
    DomainMaintainer,
    LocalReasoner,
    PlanExecutor,
    PlanningAgent,
    PlanRequester,
    ground_action_from_json,
    goal_from_json,
)
from .simworld import (
    Camera,
    KeyboardAgent,
    OfficeMap,
    SimKernel,
    StationarySensor,
    Turtlebot,
    World,
    WorldControl,
    camera_advert,
    interface_advert,
    reasoner_advert,
    sensor_advert,
    turtlebot_advert,
)
from .strips import Literal, ValidationResult, goal_satisfied
from . import agentkit

MODES = (CENTRALIZED, DECENTRALIZED)


def find_repo_root() -> Path:
    """Locate the checkout root (the directory holding scenarios/)."""
    env = os.environ.get("OFFICEMESH_ROOT")
    if env:
        return Path(env)
    here = Path.cwd()
    for candidate in (here, *here.parents):
        if (candidate / "scenarios").is_dir():
            return candidate
    pkg_root = Path(__file__).resolve().parents[2]
    if (pkg_root / "scenarios").is_dir():
        return pkg_root
    raise FileNotFoundError(
        "cannot locate the scenarios/ directory; set OFFICEMESH_ROOT"
    )


def scenario_path(number: int) -> Path:
    return find_repo_root() / "scenarios" / f"scenario{number}.json"


def load_scenario(source) -> dict:
    if isinstance(source, dict):
        return source
    return json.loads(Path(source).read_text())


@dataclass
class Stack:
    """Everything a running scenario consists of."""

    broker: Broker
    clock: Clock
    world: World
    kernel: SimKernel
    office_map: OfficeMap
    keyboard: KeyboardAgent
    requester: PlanRequester
    executor: PlanExecutor
    maintainer: DomainMaintainer | None = None


class _Wrapper:
    """Adapter so plain reasoning services ride the kernel's agent list."""

    def __init__(self, runtime):
        self.runtime = runtime


def build_stack(spec: dict, mode: str, broker: Broker | None = None) -> Stack:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    world_cfg = spec["world"]
    office_map = OfficeMap.from_config(world_cfg["map"])
    world = World(office_map, world_cfg.get("temperatures", {}))
    broker = broker or Broker()
    clock = Clock(0)
    kernel = SimKernel(broker, clock, world)
    kernel.snapshot_ticks = set(spec.get("snapshot_ticks", []))

    static_init = office_map.adjacency_atoms()
    static_values = office_map.edge_cost_values()
    objects = office_map.location_objects()

    centralized = mode == CENTRALIZED
    if centralized:
        dm_rt = agentkit.start_agent(reasoner_advert("dm-1"), None, broker, clock)
        maintainer = DomainMaintainer(dm_rt, static_init, static_values, objects)
        kernel.add_agent(_Wrapper(dm_rt))
        pl_rt = agentkit.start_agent(reasoner_advert("planner-1"), None, broker, clock)
        PlanningAgent(pl_rt)
        kernel.add_agent(_Wrapper(pl_rt))
    else:
        maintainer = None

    pr_rt = agentkit.start_agent(reasoner_advert("pr-1"), None, broker, clock)
    requester = PlanRequester(pr_rt, default_mode=mode)
    kernel.add_agent(_Wrapper(pr_rt))

    px_rt = agentkit.start_agent(reasoner_advert("px-1"), None, broker, clock)
    executor = PlanExecutor(px_rt)
    kernel.add_agent(_Wrapper(px_rt))

    initial_health = world_cfg.get("initial_health", {})
    keyboard = None
    for cfg in world_cfg["agents"]:
        agent_id = cfg["id"]
        kind = cfg["type"]
        announce = initial_health.get(agent_id, "up") == "up"
        if kind == "turtlebot":
            advert = turtlebot_advert(agent_id, cfg["location"])
            world.place(agent_id, cfg["location"])
            rt = agentkit.start_agent(advert, None, broker, clock, announce=announce)
            agent = Turtlebot(rt, world)
        elif kind == "temperature-sensor":
            advert = sensor_advert(agent_id, cfg["location"])
            world.place(agent_id, cfg["location"])
            rt = agentkit.start_agent(advert, None, broker, clock, announce=announce)
            agent = StationarySensor(rt, world)
        elif kind == "camera":
            advert = camera_advert(agent_id, cfg["location"])
            world.place(agent_id, cfg["location"])
            rt = agentkit.start_agent(advert, None, broker, clock, announce=announce)
            agent = Camera(rt, world, cfg.get("watches", "entry"), mode=mode)
        elif kind == "keyboard":
            rt = agentkit.start_agent(interface_advert(agent_id), None, broker, clock,
                                      announce=announce)
            agent = KeyboardAgent(rt, auto_answer=cfg.get("auto_answer"), mode=mode)
            keyboard = agent
        else:
            raise ValueError(f"unknown agent type {kind!r}")
        if not centralized and kind in ("turtlebot", "temperature-sensor", "camera"):
            LocalReasoner(rt, static_init, static_values, objects)
        world.health.setdefault(agent_id, "up")
        kernel.add_agent(agent)

    if keyboard is None:
        kb_rt = agentkit.start_agent(interface_advert("keyboard-1"), None, broker, clock)
        keyboard = KeyboardAgent(kb_rt, mode=mode)
        kernel.add_agent(keyboard)

    ctl_rt = agentkit.start_agent(interface_advert("world-ctl"), None, broker, clock)
    kernel.add_agent(WorldControl(ctl_rt, world))

    for agent_id, state in world_cfg.get("initial_health", {}).items():
        world.set_health(agent_id, state)
    for tick, agent_id, state in world_cfg.get("failure_script", []):
        world.schedule(tick, "health", {"agent": agent_id, "state": state})
    for tick, location, value in world_cfg.get("temperature_events", []):
        world.schedule(tick, "temperature", {"location": location, "value": value})
    for tick, location in world_cfg.get("motion_events", []):
        world.schedule(tick, "motion", {"location": location})

    for goal_cfg in spec.get("goals", []):
        goal = tuple(Literal(True, tuple(a)) for a in goal_cfg["atoms"])
        keyboard.schedule_goal(goal_cfg["tick"], goal)

    return Stack(broker, clock, world, kernel, office_map, keyboard, requester,
                 executor, maintainer)


# -- assertion evaluation -----------------------------------------------------

def _match(record: dict, expr: dict) -> bool:
    env = record.get("envelope")
    if env is None:
        return False
    if "performative" in expr and env["performative"] != expr["performative"]:
        return False
    if "kind" in expr and env["payload"]["kind"] != expr["kind"]:
        return False
    for key in ("sender", "recipient", "conversation_id"):
        if key in expr and env[key] != expr[key]:
            return False
    if "min_tick" in expr and env["sim_time"] < expr["min_tick"]:
        return False
    if "max_tick" in expr and env["sim_time"] > expr["max_tick"]:
        return False
    body = env["payload"]["body"]
    for key, want in expr.get("body", {}).items():
        if body.get(key) != want:
            return False
    if "args_contains" in expr:
        if expr["args_contains"] not in body.get("args", []):
            return False
    if "body_list_contains" in expr:
        spec = expr["body_list_contains"]
        items = body.get(spec["key"], [])
        want = spec["item"]
        if not any(
            isinstance(item, dict) and all(item.get(k) == v for k, v in want.items())
            for item in items
        ):
            return False
    return True


def _first_match_order(transcript: list[dict], expr: dict) -> int | None:
    for record in transcript:
        if _match(record, expr):
            return record["order"]
    return None


def _snapshot_init(history: list[dict], office_map: OfficeMap, tick: int) -> frozenset:
    snap = None
    for entry in history:
        if entry["tick"] == tick:
            snap = entry
            break
    if snap is None:
        snap = history[-1] if history else {"agent_pos": {}}
    atoms = set(office_map.adjacency_atoms())
    for agent_id, pos in snap.get("agent_pos", {}).items():
        atoms.add(("at", agent_id, pos))
    return frozenset(atoms)


def _replay_goals(transcript: list[dict], history: list[dict],
                  office_map: OfficeMap) -> list[tuple[str, ValidationResult]]:
    """Replay every successfully reported goal conversation from the world
    snapshot taken at its submission tick; each must reach its goal."""
    submissions: dict[str, dict] = {}
    for record in transcript:
        env = record.get("envelope")
        if env is None:
            continue
        if env["payload"]["kind"] == "GoalSubmission" and env["performative"] == "request":
            submissions[env["conversation_id"]] = env
    results = []
    for conv, sub in submissions.items():
        final_report = None
        for record in transcript:
            env = record.get("envelope")
            if env is None or env["conversation_id"] != conv:
                continue
            body = env["payload"]["body"]
            if env["payload"]["kind"] == "ActionResult" and "report" in body:
                final_report = body["report"]
        if final_report is None or final_report["status"] != "success":
            continue
        goal = goal_from_json(sub["payload"]["body"]["goal"])
        state = _snapshot_init(history, office_map, sub["sim_time"])
        ok = True
        reason = ""
        for entry in final_report["per_step"]:
            if entry["result"] != "success":
                continue
            step = ground_action_from_json(entry["ground"])
            if not (step.pos_pre <= state) or (step.neg_pre & state):
                ok = False
                reason = f"step {entry['step']} not applicable on replay"
                break
            state = (state - step.dels) | step.adds
        if ok and not goal_satisfied(state, goal):
            ok = False
            reason = "goal not satisfied after replaying executed steps"
        results.append((conv, ValidationResult(ok, reason)))
    return results


def evaluate_assertion(assertion: dict, transcript: list[dict],
                       history: list[dict], office_map: OfficeMap) -> tuple[bool, str]:
    kind = assertion["type"]
    if kind == "exists":
        order = _first_match_order(transcript, assertion["match"])
        return (order is not None,
                "matched" if order is not None else f"no envelope matches {assertion['match']}")
    if kind == "order":
        first = _first_match_order(transcript, assertion["first"])
        if first is None:
            return False, f"no envelope matches {assertion['first']}"
        for record in transcript:
            if record["order"] > first and _match(record, assertion["then"]):
                return True, "ordered"
        return False, f"nothing after order {first} matches {assertion['then']}"
    if kind == "absent_after":
        for record in transcript:
            env = record.get("envelope")
            if env is None or env["sim_time"] < assertion["tick"]:
                continue
            if _match(record, assertion["match"]):
                return False, f"order {record['order']} matches after tick {assertion['tick']}"
        return True, "absent"
    if kind == "death_detected":
        agent = assertion["agent"]
        lo = assertion["fail_tick"]
        hi = lo + assertion["within"]
        for record in transcript:
            env = record.get("envelope")
            if env is None or not (lo < env["sim_time"] <= hi):
                continue
            body = env["payload"]["body"]
            if env["payload"]["kind"] != "StateUpdate":
                continue
            if body.get("event") == "liveness" and agent in body.get("dead", []):
                return True, f"detected at tick {env['sim_time']}"
            if body.get("event") == "capability-change" and any(
                c.get("agent") == agent and c.get("change") == "dead"
                for c in body.get("changes", [])
            ):
                return True, f"detected at tick {env['sim_time']}"
        return False, f"no death broadcast for {agent} in ({lo}, {hi}]"
    if kind == "world_final":
        final = history[-1] if history else {}
        for section, wanted in assertion.items():
            if section in ("type",):
                continue
            actual = final.get(section, {})
            for key, value in wanted.items():
                if actual.get(key) != value:
                    return False, f"{section}.{key} is {actual.get(key)!r}, wanted {value!r}"
        return True, "world state matches"
    if kind == "replay_goal":
        results = _replay_goals(transcript, history, office_map)
        if not results:
            return False, "no successful goal conversation to validate"
        bad = [(conv, res) for conv, res in results if not res]
        if bad:
            conv, res = bad[0]
            return False, f"conversation {conv}: {res.reason}"
        return True, f"{len(results)} conversation(s) replay-valid"
    raise ValueError(f"unknown assertion type {kind!r}")


@dataclass
class ScenarioResult:
    scenario_id: int | str
    mode: str
    passed: bool
    checks: list[dict] = field(default_factory=list)
    transcript_path: str | None = None
    stack: Stack | None = None

    def summary(self) -> str:
        lines = [
            f"scenario {self.scenario_id} [{self.mode}]: "
            + ("PASS" if self.passed else "FAIL")
        ]
        for check in self.checks:
            mark = "ok " if check["ok"] else "FAIL"
            lines.append(f"  [{mark}] {check['name']}: {check['detail']}")
        return "\n".join(lines)


def run_scenario(source, mode: str, seed: int = 0,
                 transcript_path=None, keep_stack: bool = False) -> ScenarioResult:
    spec = load_scenario(source)
    log.info("scenario %s [%s] seed=%s", spec.get("id", "?"), mode, seed)
    stack = build_stack(spec, mode)
    stack.kernel.run(spec.get("max_ticks", 200))
    log.info("scenario %s [%s] finished at tick %s with %s transcript records",
             spec.get("id", "?"), mode, stack.clock.now, len(stack.broker.transcript()))
    transcript = stack.broker.transcript()
    checks = []
    for i, assertion in enumerate(spec.get("assertions", [])):
        modes = assertion.get("modes")
        if modes and mode not in modes:
            continue
        ok, detail = evaluate_assertion(assertion, transcript, stack.kernel.history,
                                        stack.office_map)
        checks.append(
            {
                "name": assertion.get("name", f"assertion-{i}"),
                "ok": ok,
                "detail": detail,
            }
        )
    if transcript_path is not None:
        stack.broker.dump_transcript(transcript_path)
    return ScenarioResult(
        scenario_id=spec.get("id", "?"),
        mode=mode,
        passed=all(c["ok"] for c in checks),
        checks=checks,
        transcript_path=str(transcript_path) if transcript_path else None,
        stack=stack if keep_stack else None,
    )


def cli_respond_query(stack: Stack, conversation_id: str, answer: str) -> None:
    """Answer an open agent query from the operator side."""
    stack.keyboard.respond(conversation_id, answer)


# -- transcript replay ----------------------------------------------------------

def load_transcript(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def replay_records(records: list[dict], filters: dict) -> list[dict]:
    out = []
    for record in records:
        if "envelope" not in record:
            continue
        if _match(record, filters):
            out.append(record)
    return out


def format_record(record: dict) -> str:
    env = record["envelope"]
    return (
        f"order={record['order']} t={env['sim_time']} "
        f"{env['performative']}/{env['payload']['kind']} "
        f"{env['sender']} -> {env['recipient']} conv={env['conversation_id']}"
    )
