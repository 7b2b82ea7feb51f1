"""The reasoning engine: Domain Maintainer, Plan Requester, Planning Agent,
Plan Executor, and the actuator-side proposal logic for decentralized runs.

Centralized flow: goal -> PR asks DM for the composite model -> PR asks the
Planning Agent for a plan -> PR hands the plan to the Executor -> the Executor
dispatches action requests one step at a time and reports back.

Decentralized flow: PR broadcasts a call for proposals with a deadline, each
actuator plans locally over its own capabilities and proposes a priced partial
plan, and at the deadline the PR either takes the cheapest full-coverage
proposal or runs a greedy weighted set cover over partial ones.

This module also pins the JSON bodies for every payload kind it owns (see
docs/protocol.md); costs travel as exact fraction strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .acl import BROADCAST, Envelope, PayloadKind, Performative
from .agentkit import (
    DEFAULT_DEATH_TIMEOUT,
    DEFAULT_SWEEP_INTERVAL,
    AgentKind,
    AgentRuntime,
    HeartbeatResult,
    LivenessTable,
    MalformedAdvert,
)
from .planner import SearchConfig, Unsolvable, ResourceLimit, plan as compute_plan
from .strips import (
    Atom,
    CompositionConflict,
    DomainModel,
    GroundAction,
    Literal,
    Plan,
    ProblemSpec,
    SemanticError,
    compose_domain,
    goal_satisfied,
    print_domain,
    parse_domain,
    unqualified_name,
)

DEFAULT_PROPOSAL_WINDOW = 20
DEFAULT_ACTION_TIMEOUT = 15
MAX_REPLANS = 2

CENTRALIZED = "centralized"
DECENTRALIZED = "decentralized"


# -- payload JSON helpers -------------------------------------------------------

def literal_to_json(l: Literal) -> dict:
    return {"pos": l.positive, "atom": list(l.atom)}

def literal_from_json(obj: dict) -> Literal:
    return Literal(bool(obj["pos"]), tuple(obj["atom"]))

def goal_to_json(goal) -> list[dict]:
    return [literal_to_json(l) for l in goal]

def goal_from_json(items) -> tuple[Literal, ...]:
    return tuple(literal_from_json(o) for o in items)

def _atoms_to_json(atoms) -> list[list[str]]:
    return sorted(list(a) for a in atoms)

def ground_action_to_json(a: GroundAction) -> dict:
    return {
        "schema": a.schema_name,
        "owner": a.owner,
        "args": list(a.args),
        "pos_pre": _atoms_to_json(a.pos_pre),
        "neg_pre": _atoms_to_json(a.neg_pre),
        "adds": _atoms_to_json(a.adds),
        "dels": _atoms_to_json(a.dels),
        "cost": str(a.cost),
    }

def ground_action_from_json(obj: dict) -> GroundAction:
    return GroundAction(
        schema_name=obj["schema"],
        owner=obj["owner"],
        args=tuple(obj["args"]),
        pos_pre=frozenset(tuple(a) for a in obj["pos_pre"]),
        neg_pre=frozenset(tuple(a) for a in obj["neg_pre"]),
        adds=frozenset(tuple(a) for a in obj["adds"]),
        dels=frozenset(tuple(a) for a in obj["dels"]),
        cost=Fraction(obj["cost"]),
    )

def plan_to_json(p: Plan) -> dict:
    return {
        "steps": [ground_action_to_json(s) for s in p.steps],
        "total_cost": str(p.total_cost),
    }

def plan_from_json(obj: dict) -> Plan:
    steps = [ground_action_from_json(s) for s in obj["steps"]]
    p = Plan.of(steps)
    if str(p.total_cost) != obj["total_cost"]:
        raise ValueError("plan total_cost does not match steps")
    return p


@dataclass(frozen=True)
class Proposal:
    conversation_id: str
    proposer: str
    plan: Plan
    covered: frozenset[Literal]
    cost: Fraction

    def __post_init__(self):
        if self.cost != self.plan.total_cost:
            raise ValueError("proposal cost must equal plan cost")
        if not self.covered:
            raise ValueError("proposal must cover at least one goal literal")


@dataclass
class ExecutionReport:
    conversation_id: str
    status: str  # success | failed | cancelled
    per_step: list[dict] = field(default_factory=list)
    failure_reason: str | None = None
    suspects: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "conversation_id": self.conversation_id,
            "status": self.status,
            "per_step": self.per_step,
            "failure_reason": self.failure_reason,
            "suspects": self.suspects,
        }


# -- Domain Maintainer ----------------------------------------------------------

class DomainMaintainer:
    """Composes live capability adverts into the composite planning model.

    Recomposition is always from scratch over the currently alive adverts, so
    add/remove sequences cannot leave residue. A conflicting advert is
    quarantined (previous model kept) and a diagnostic is broadcast.
    """

    def __init__(self, runtime: AgentRuntime, static_init: list[Atom],
                 static_values: dict[Atom, Fraction], objects: dict[str, str],
                 death_timeout: int = DEFAULT_DEATH_TIMEOUT,
                 sweep_interval: int = DEFAULT_SWEEP_INTERVAL):
        self.runtime = runtime
        self.table = LivenessTable()
        self.static_init = list(static_init)
        self.static_values = dict(static_values)
        self.static_objects = dict(objects)
        self.death_timeout = death_timeout
        self.sweep_interval = sweep_interval
        self.quarantined: set[str] = set()
        self.model: DomainModel = compose_domain([])
        self._last_sweep = -1
        runtime.add_handler(Performative.INFORM, self._on_inform)
        runtime.add_handler(Performative.REQUEST, self._on_request)
        runtime.tick_hooks.append(self._on_tick)

    def _on_inform(self, e: Envelope) -> None:
        if e.payload.kind is not PayloadKind.CAPABILITY_ADVERT:
            return
        try:
            result = self.table.record_heartbeat(e, self.runtime.clock.now)
        except MalformedAdvert:
            return
        if result is not HeartbeatResult.UNCHANGED:
            self._recompose([(e.payload.body.get("agent_id", "?"), result.value)])

    def _on_tick(self, now: int) -> None:
        if self.sweep_interval and now % self.sweep_interval == 0 and now != self._last_sweep:
            self._last_sweep = now
            newly_dead = self.table.sweep(now, self.death_timeout)
            if newly_dead:
                self._recompose([(a, "dead") for a in newly_dead])

    def _recompose(self, changes: list[tuple[str, str]]) -> None:
        adverts = [a for a in self.table.alive_adverts() if a.agent_id not in self.quarantined]
        try:
            self.model = compose_domain(adverts)
        except CompositionConflict as exc:
            # only a new or updated advert can introduce a conflict, so blame
            # the agent whose change triggered this pass; model stays as-is
            culprit = changes[0][0] if changes else "?"
            self.quarantined.add(culprit)
            self.runtime.publish(
                Performative.INFORM, PayloadKind.STATE_UPDATE,
                {"event": "capability-conflict", "agent": culprit, "detail": str(exc)},
                BROADCAST,
            )
            return
        self.runtime.publish(
            Performative.INFORM, PayloadKind.STATE_UPDATE,
            {
                "event": "capability-change",
                "changes": [{"agent": a, "change": c} for a, c in changes],
                "alive": [a.agent_id for a in adverts],
            },
            BROADCAST,
        )

    def beliefs(self) -> tuple[dict[str, str], frozenset[Atom]]:
        """Typed objects and init atoms: static map facts plus live positions."""
        objects = dict(self.static_objects)
        init = set(self.static_init)
        for advert in self.table.alive_adverts():
            if advert.agent_id in self.quarantined:
                continue
            objects[advert.agent_id] = "agent"
            if advert.location:
                init.add(("at", advert.agent_id, advert.location))
        return objects, frozenset(init)

    def _on_request(self, e: Envelope) -> None:
        if e.payload.kind is not PayloadKind.STATE_UPDATE:
            return
        if e.payload.body.get("want") != "model":
            return
        objects, init = self.beliefs()
        self.runtime.publish(
            Performative.INFORM, PayloadKind.STATE_UPDATE,
            {
                "reply_to": "model",
                "domain_pddl": print_domain(self.model),
                "objects": objects,
                "init": _atoms_to_json(init),
                "static_values": [
                    {"term": list(t), "value": str(v)}
                    for t, v in sorted(self.static_values.items())
                ],
            },
            e.sender,
            conversation_id=e.conversation_id,
        )


# -- Planning Agent ---------------------------------------------------------------

class PlanningAgent:
    """Wraps the internal planner behind the plan-request protocol."""

    def __init__(self, runtime: AgentRuntime, node_limit: int = 200_000):
        self.runtime = runtime
        self.node_limit = node_limit
        runtime.add_handler(Performative.REQUEST, self._on_request)

    def _on_request(self, e: Envelope) -> None:
        body = e.payload.body
        if e.payload.kind is not PayloadKind.PLAN_REQUEST or "domain_pddl" not in body:
            return
        def refuse(reason: str, detail: str = "") -> None:
            self.runtime.publish(
                Performative.REFUSE, PayloadKind.PLAN_REQUEST,
                {"reason": reason, "detail": detail},
                e.sender, conversation_id=e.conversation_id,
            )
        try:
            domain = parse_domain(body["domain_pddl"])
            problem = _problem_from_json(body, domain)
        except (SemanticError, KeyError, ValueError) as exc:
            refuse("semantic-error", str(exc))
            return
        cfg = SearchConfig(mode=body.get("mode", "optimal"), node_limit=self.node_limit)
        try:
            result = compute_plan(domain, problem, cfg)
        except ResourceLimit as exc:
            refuse("resource-limit", str(exc))
            return
        if isinstance(result, Unsolvable):
            refuse("unsolvable", result.reason)
            return
        self.runtime.publish(
            Performative.PROPOSE, PayloadKind.PLAN_REPLY,
            {"status": "plan", "plan": plan_to_json(result)},
            e.sender, conversation_id=e.conversation_id,
        )


def _problem_to_json(problem: ProblemSpec) -> dict:
    return {
        "problem_name": problem.name,
        "objects": dict(problem.objects),
        "init": _atoms_to_json(problem.init),
        "static_values": [
            {"term": list(t), "value": str(v)} for t, v in sorted(problem.static_values.items())
        ],
        "goal": goal_to_json(problem.goal),
    }


def _problem_from_json(body: dict, domain: DomainModel) -> ProblemSpec:
    from .strips import check_problem

    problem = ProblemSpec(
        name=body.get("problem_name", "request"),
        domain_name=domain.name,
        objects=dict(body["objects"]),
        init=frozenset(tuple(a) for a in body["init"]),
        static_values={
            tuple(sv["term"]): Fraction(sv["value"]) for sv in body.get("static_values", [])
        },
        goal=goal_from_json(body["goal"]),
    )
    check_problem(problem, domain)
    return problem


# -- proposal selection (pure; unit-tested directly) ------------------------------

def select_proposals(goal, proposals: list[Proposal]):
    """Contract-net selection.

    With at least one full-coverage proposal, take the cheapest one (ties by
    proposer id). Otherwise run greedy weighted set cover over the partial
    proposals; returns None if goal literals remain uncoverable.
    """
    goal_set = frozenset(goal)
    if not proposals:
        return None
    full = [p for p in proposals if goal_set <= p.covered]
    if full:
        winner = min(full, key=lambda p: (p.cost, p.proposer))
        return [winner]
    remaining = set(goal_set)
    pool = list(proposals)
    accepted: list[Proposal] = []
    while remaining:
        best = None
        best_key = None
        for p in pool:
            newly = len(p.covered & remaining)
            if newly == 0:
                continue
            key = (p.cost / newly, p.proposer)
            if best_key is None or key < best_key:
                best, best_key = p, key
        if best is None:
            return None
        accepted.append(best)
        remaining -= best.covered
        pool.remove(best)
    return accepted


# -- Plan Requester ----------------------------------------------------------------

@dataclass
class GoalRun:
    conversation_id: str
    requester: str
    goal: tuple[Literal, ...]
    mode: str
    status: str = "requested"
    replans: int = 0
    deadline: int | None = None
    proposals: dict[str, Proposal] = field(default_factory=dict)
    responded: set[str] = field(default_factory=set)
    excluded: set[str] = field(default_factory=set)
    plans: list[Plan] = field(default_factory=list)
    init_snapshot: list[list[str]] = field(default_factory=list)


class PlanRequester:
    def __init__(self, runtime: AgentRuntime, dm_id: str = "dm-1",
                 planner_id: str = "planner-1", executor_id: str = "px-1",
                 proposal_window: int = DEFAULT_PROPOSAL_WINDOW,
                 default_mode: str = CENTRALIZED,
                 max_replans: int = MAX_REPLANS):
        self.runtime = runtime
        self.dm_id = dm_id
        self.planner_id = planner_id
        self.executor_id = executor_id
        self.proposal_window = proposal_window
        self.default_mode = default_mode
        self.max_replans = max_replans
        self.runs: dict[str, GoalRun] = {}
        runtime.add_handler(Performative.REQUEST, self._on_request)
        runtime.add_handler(Performative.INFORM, self._on_inform)
        runtime.add_handler(Performative.PROPOSE, self._on_propose)
        runtime.add_handler(Performative.AGREE, self._on_propose)  # actuator synonym
        runtime.add_handler(Performative.REFUSE, self._on_refuse)
        runtime.add_handler(Performative.CONFIRM, self._on_confirm)
        runtime.tick_hooks.append(self._on_tick)

    # ---- goal intake

    def _on_request(self, e: Envelope) -> None:
        body = e.payload.body
        if e.payload.kind is PayloadKind.GOAL_SUBMISSION:
            goal = goal_from_json(body["goal"])
            mode = body.get("mode") or self.default_mode
            run = GoalRun(e.conversation_id, e.sender, goal, mode)
            self.runs[e.conversation_id] = run
            self._start_round(run)
        elif e.payload.kind is PayloadKind.STATE_UPDATE and "default_mode" in body:
            if body["default_mode"] in (CENTRALIZED, DECENTRALIZED):
                self.default_mode = body["default_mode"]

    def _start_round(self, run: GoalRun) -> None:
        if run.mode == DECENTRALIZED:
            run.status = "collecting"
            run.proposals = {}
            run.responded = set()
            run.deadline = self.runtime.clock.now + self.proposal_window
            self.runtime.publish(
                Performative.CALL_FOR_PROPOSALS, PayloadKind.PLAN_REQUEST,
                {"goal": goal_to_json(run.goal), "deadline": run.deadline},
                BROADCAST, conversation_id=run.conversation_id,
            )
        else:
            run.status = "planning"
            self.runtime.publish(
                Performative.REQUEST, PayloadKind.STATE_UPDATE,
                {"want": "model"},
                self.dm_id, conversation_id=run.conversation_id,
            )

    def _refuse_goal(self, run: GoalRun, reason: str, detail: str = "") -> None:
        run.status = "failed"
        self.runtime.publish(
            Performative.REFUSE, PayloadKind.PLAN_REQUEST,
            {"reason": reason, "detail": detail},
            run.requester, conversation_id=run.conversation_id,
        )

    # ---- centralized leg: model reply then plan reply

    def _on_inform(self, e: Envelope) -> None:
        run = self.runs.get(e.conversation_id)
        if (run is None or e.payload.kind is not PayloadKind.STATE_UPDATE
                or e.payload.body.get("reply_to") != "model" or run.status != "planning"):
            return
        body = e.payload.body
        try:
            domain = parse_domain(body["domain_pddl"])
        except SemanticError as exc:
            self._refuse_goal(run, "semantic-error", str(exc))
            return
        if run.excluded:
            domain = DomainModel(
                domain.name, domain.vocabulary,
                tuple(s for s in domain.schemas if s.owner not in run.excluded),
            )
        init = frozenset(tuple(a) for a in body["init"])
        run.init_snapshot = _atoms_to_json(init)
        if not domain.schemas and not goal_satisfied(init, run.goal):
            self._refuse_goal(run, "no-capabilities")
            return
        problem_body = {
            "domain_pddl": print_domain(domain),
            "problem_name": f"goal-{run.conversation_id.replace(':', '-')}",
            "objects": body["objects"],
            "init": body["init"],
            "static_values": body.get("static_values", []),
            "goal": goal_to_json(run.goal),
            "mode": "optimal",
        }
        # validate before bothering the planner so semantic errors refuse fast
        try:
            _problem_from_json(problem_body, domain)
        except (SemanticError, ValueError, KeyError) as exc:
            self._refuse_goal(run, "semantic-error", str(exc))
            return
        self.runtime.publish(
            Performative.REQUEST, PayloadKind.PLAN_REQUEST, problem_body,
            self.planner_id, conversation_id=run.conversation_id,
        )

    def _dispatch_plans(self, run: GoalRun, plans: list[Plan]) -> None:
        run.plans = plans
        run.status = "executing"
        self.runtime.publish(
            Performative.REQUEST, PayloadKind.PLAN_REQUEST,
            {
                "plans": [plan_to_json(p) for p in plans],
                "goal": goal_to_json(run.goal),
                "init": run.init_snapshot,
            },
            self.executor_id, conversation_id=run.conversation_id,
        )

    def _on_propose(self, e: Envelope) -> None:
        run = self.runs.get(e.conversation_id)
        if run is None:
            return
        if e.payload.kind is PayloadKind.PLAN_REPLY:
            if run.status != "planning" or e.sender != self.planner_id:
                return
            plan = plan_from_json(e.payload.body["plan"])
            self._dispatch_plans(run, [plan])
            return
        if e.payload.kind is PayloadKind.PROPOSAL_BODY:
            # an Agree here is a legacy synonym for Propose and lands the same way
            if run.status != "collecting" or e.sender in run.responded:
                return
            if run.deadline is not None and self.runtime.clock.now > run.deadline:
                return
            try:
                proposal = Proposal(
                    conversation_id=e.conversation_id,
                    proposer=e.sender,
                    plan=plan_from_json(e.payload.body["plan"]),
                    covered=frozenset(goal_from_json(e.payload.body["covered"])),
                    cost=Fraction(e.payload.body["cost"]),
                )
            except (ValueError, KeyError):
                run.responded.add(e.sender)  # malformed proposal burns the slot
                return
            run.responded.add(e.sender)
            run.proposals[e.sender] = proposal

    def _on_refuse(self, e: Envelope) -> None:
        run = self.runs.get(e.conversation_id)
        if run is None:
            return
        if run.status == "planning" and e.sender == self.planner_id:
            reason = e.payload.body.get("reason", "planner-refused")
            self._refuse_goal(run, reason, e.payload.body.get("detail", ""))
        elif run.status == "collecting":
            run.responded.add(e.sender)

    # ---- decentralized deadline and selection

    def _on_tick(self, now: int) -> None:
        for run in list(self.runs.values()):
            if run.status == "collecting" and run.deadline is not None and now >= run.deadline:
                self._select(run)

    def _select(self, run: GoalRun) -> None:
        proposals = sorted(run.proposals.values(), key=lambda p: p.proposer)
        if not proposals:
            self._refuse_goal(run, "no-proposals")
            return
        accepted = select_proposals(run.goal, proposals)
        if accepted is None:
            for p in proposals:
                self._answer_proposal(run, p, accept=False)
            self._refuse_goal(run, "uncoverable")
            return
        accepted_ids = {p.proposer for p in accepted}
        for p in accepted:
            self._answer_proposal(run, p, accept=True)
        for p in proposals:
            if p.proposer not in accepted_ids:
                self._answer_proposal(run, p, accept=False)
        run.init_snapshot = []  # decentralized init is per-proposer; harness snapshots world
        self._dispatch_plans(run, [p.plan for p in accepted])

    def _answer_proposal(self, run: GoalRun, p: Proposal, accept: bool) -> None:
        self.runtime.publish(
            Performative.ACCEPT if accept else Performative.REJECT,
            PayloadKind.PROPOSAL_BODY,
            {"proposer": p.proposer, "cost": str(p.cost)},
            p.proposer, conversation_id=run.conversation_id,
        )

    # ---- execution report, replanning

    def _on_confirm(self, e: Envelope) -> None:
        run = self.runs.get(e.conversation_id)
        if run is None or e.payload.kind is not PayloadKind.ACTION_RESULT:
            return
        report = e.payload.body.get("report")
        if report is None or run.status != "executing":
            return
        if report["status"] == "success":
            run.status = "done"
            self.runtime.publish(
                Performative.CONFIRM, PayloadKind.ACTION_RESULT,
                {"report": report},
                run.requester, conversation_id=run.conversation_id,
            )
            return
        if run.replans >= self.max_replans:
            self._refuse_goal(run, "execution-failed", report.get("failure_reason") or "")
            return
        run.replans += 1
        run.excluded |= set(report.get("suspects", []))
        self._start_round(run)

    def goal_status(self, conversation_id: str) -> str | None:
        run = self.runs.get(conversation_id)
        return run.status if run else None


# -- Plan Executor -----------------------------------------------------------------

@dataclass
class _Execution:
    conversation_id: str
    requester: str
    steps: list[GroundAction]
    goal: tuple[Literal, ...]
    idx: int = 0
    attempts: int = 0
    dispatched_at: int | None = None
    report: ExecutionReport = None  # set in __post_init__

    def __post_init__(self):
        self.report = ExecutionReport(self.conversation_id, "running")


class PlanExecutor:
    """Dispatches plan steps sequentially and monitors execution.

    One retry per step (refusal, failure result, or timeout), then the run is
    aborted, outstanding requests are cancelled, and a failed report goes back
    upstream naming the suspect agent so the requester can replan around it.
    """

    def __init__(self, runtime: AgentRuntime,
                 action_timeout: int = DEFAULT_ACTION_TIMEOUT,
                 death_timeout: int = DEFAULT_DEATH_TIMEOUT,
                 sweep_interval: int = DEFAULT_SWEEP_INTERVAL):
        self.runtime = runtime
        self.action_timeout = action_timeout
        self.death_timeout = death_timeout
        self.sweep_interval = sweep_interval
        self.table = LivenessTable()
        self.active: dict[str, _Execution] = {}
        self._last_sweep = -1
        runtime.add_handler(Performative.REQUEST, self._on_request)
        runtime.add_handler(Performative.INFORM, self._on_inform)
        runtime.add_handler(Performative.CONFIRM, self._on_confirm)
        runtime.add_handler(Performative.REFUSE, self._on_refuse)
        runtime.tick_hooks.append(self._on_tick)

    def _on_inform(self, e: Envelope) -> None:
        if e.payload.kind is PayloadKind.CAPABILITY_ADVERT:
            try:
                self.table.record_heartbeat(e, self.runtime.clock.now)
            except MalformedAdvert:
                pass
            self._monitor()

    def _on_request(self, e: Envelope) -> None:
        if e.payload.kind is not PayloadKind.PLAN_REQUEST or "plans" not in e.payload.body:
            return
        body = e.payload.body
        steps: list[GroundAction] = []
        for plan_json in body["plans"]:
            steps.extend(plan_from_json(plan_json).steps)
        ex = _Execution(
            conversation_id=e.conversation_id,
            requester=e.sender,
            steps=steps,
            goal=goal_from_json(body.get("goal", [])),
        )
        self.active[e.conversation_id] = ex
        self._advance(ex)

    def _advance(self, ex: _Execution) -> None:
        if ex.idx >= len(ex.steps):
            self._finish(ex, "success")
            return
        step = ex.steps[ex.idx]
        if not self.table.is_alive(step.owner):
            self._abort(ex, f"step {ex.idx + 1} owner {step.owner} is dead", [step.owner])
            return
        ex.attempts += 1
        ex.dispatched_at = self.runtime.clock.now
        self.runtime.publish(
            Performative.REQUEST, PayloadKind.ACTION_REQUEST,
            {
                "step": ex.idx,
                "schema": unqualified_name(step.schema_name),
                "args": list(step.args),
                "ground": ground_action_to_json(step),
            },
            step.owner, conversation_id=ex.conversation_id,
        )

    def _record(self, ex: _Execution, result: str) -> None:
        step = ex.steps[ex.idx]
        ex.report.per_step.append(
            {
                "step": ex.idx,
                "action": step.name,
                "ground": ground_action_to_json(step),
                "result": result,
                "tick": self.runtime.clock.now,
            }
        )

    def _on_confirm(self, e: Envelope) -> None:
        ex = self.active.get(e.conversation_id)
        if ex is None or e.payload.kind is not PayloadKind.ACTION_RESULT:
            return
        body = e.payload.body
        if body.get("step") != ex.idx:
            return
        if body.get("status") == "success":
            self._record(ex, "success")
            ex.idx += 1
            ex.attempts = 0
            ex.dispatched_at = None
            self._advance(ex)
        else:
            self._retry_or_abort(ex, body.get("reason", "action failed"))

    def _on_refuse(self, e: Envelope) -> None:
        ex = self.active.get(e.conversation_id)
        if ex is None or e.payload.kind is not PayloadKind.ACTION_REQUEST:
            return
        self._retry_or_abort(ex, e.payload.body.get("reason", "refused"))

    def _retry_or_abort(self, ex: _Execution, reason: str) -> None:
        step = ex.steps[ex.idx]
        if ex.attempts < 2:
            self._advance_retry(ex)
        else:
            self._record(ex, f"failed: {reason}")
            self._abort(ex, f"step {ex.idx + 1} ({step.name}): {reason}", [step.owner])

    def _advance_retry(self, ex: _Execution) -> None:
        step = ex.steps[ex.idx]
        if not self.table.is_alive(step.owner):
            self._abort(ex, f"step {ex.idx + 1} owner {step.owner} is dead", [step.owner])
            return
        ex.attempts += 1
        ex.dispatched_at = self.runtime.clock.now
        self.runtime.publish(
            Performative.REQUEST, PayloadKind.ACTION_REQUEST,
            {
                "step": ex.idx,
                "schema": unqualified_name(step.schema_name),
                "args": list(step.args),
                "ground": ground_action_to_json(step),
                "retry": True,
            },
            step.owner, conversation_id=ex.conversation_id,
        )

    def _on_tick(self, now: int) -> None:
        if self.sweep_interval and now % self.sweep_interval == 0 and now != self._last_sweep:
            self._last_sweep = now
            newly_dead = self.table.sweep(now, self.death_timeout) if self.table.entries else []
            if newly_dead:
                # announce so monitors (and transcripts) see the detection in
                # decentralized runs too, where no global maintainer exists
                self.runtime.publish(
                    Performative.INFORM, PayloadKind.STATE_UPDATE,
                    {"event": "liveness", "dead": newly_dead},
                    BROADCAST,
                )
            self._monitor()
        for ex in list(self.active.values()):
            if ex.dispatched_at is None:
                continue
            if now - ex.dispatched_at >= self.action_timeout:
                step = ex.steps[ex.idx]
                if ex.attempts < 2:
                    self._advance_retry(ex)
                else:
                    self._record(ex, "failed: timeout")
                    self._abort(
                        ex, f"step {ex.idx + 1} ({step.name}): timeout", [step.owner]
                    )

    def _monitor(self) -> None:
        """Invalidate executions whose remaining steps lost their owner or schema."""
        for ex in list(self.active.values()):
            for step in ex.steps[ex.idx:]:
                entry = self.table.entries.get(step.owner)
                if entry is None:
                    continue  # never heard from; timeout path will handle it
                if not self.table.is_alive(step.owner):
                    self._abort(
                        ex, f"owner {step.owner} died with steps remaining", [step.owner]
                    )
                    break
                names = {s.name for s in entry.advert.schemas}
                if unqualified_name(step.schema_name) not in names:
                    self._abort(
                        ex,
                        f"{step.owner} no longer advertises {unqualified_name(step.schema_name)}",
                        [step.owner],
                    )
                    break

    def _abort(self, ex: _Execution, reason: str, suspects: list[str]) -> None:
        if ex.dispatched_at is not None and ex.idx < len(ex.steps):
            self.runtime.publish(
                Performative.CANCEL, PayloadKind.CANCEL_BODY,
                {"reason": reason, "step": ex.idx},
                ex.steps[ex.idx].owner, conversation_id=ex.conversation_id,
            )
        ex.report.status = "failed"
        ex.report.failure_reason = reason
        ex.report.suspects = sorted(set(suspects))
        self._send_report(ex)

    def _finish(self, ex: _Execution, status: str) -> None:
        ex.report.status = status
        self._send_report(ex)

    def _send_report(self, ex: _Execution) -> None:
        self.active.pop(ex.conversation_id, None)
        self.runtime.publish(
            Performative.CONFIRM, PayloadKind.ACTION_RESULT,
            {"report": ex.report.to_json()},
            ex.requester, conversation_id=ex.conversation_id,
        )


# -- actuator-side contract-net responder -------------------------------------------

class LocalReasoner:
    """Local planner + local domain maintainer for decentralized actuators.

    On a call for proposals the agent plans over its own schemas only. Goal
    literals that some other live stationary sensor advertises as directly
    sensed are left to that specialist; without this deference every mobile
    agent would bid full coverage and the cheap stationary senses would never
    win an auction.
    """

    def __init__(self, runtime: AgentRuntime, static_init: list[Atom],
                 static_values: dict[Atom, Fraction], objects: dict[str, str],
                 node_limit: int = 50_000,
                 death_timeout: int = DEFAULT_DEATH_TIMEOUT,
                 sweep_interval: int = DEFAULT_SWEEP_INTERVAL):
        self.runtime = runtime
        self.static_init = list(static_init)
        self.static_values = dict(static_values)
        self.objects = dict(objects)
        self.node_limit = node_limit
        self.death_timeout = death_timeout
        self.sweep_interval = sweep_interval
        self.table = LivenessTable()
        self._last_sweep = -1
        runtime.add_handler(Performative.INFORM, self._on_inform)
        runtime.add_handler(Performative.CALL_FOR_PROPOSALS, self._on_cfp)
        runtime.tick_hooks.append(self._on_tick)

    def _on_tick(self, now: int) -> None:
        if self.sweep_interval and now % self.sweep_interval == 0 and now != self._last_sweep:
            self._last_sweep = now
            if self.table.entries:
                self.table.sweep(now, self.death_timeout)

    def _on_inform(self, e: Envelope) -> None:
        if e.payload.kind is PayloadKind.CAPABILITY_ADVERT:
            try:
                self.table.record_heartbeat(e, self.runtime.clock.now)
            except MalformedAdvert:
                pass

    def _deferred(self, literal: Literal) -> bool:
        for advert in self.table.alive_adverts():
            if advert.agent_id == self.runtime.agent_id:
                continue
            if advert.kind is not AgentKind.SENSOR:
                continue
            if literal.atom in advert.sensed:
                return True
        return False

    def _local_model(self) -> tuple[DomainModel, ProblemSpec]:
        domain = compose_domain([self.runtime.advert])
        vocab = domain.vocabulary
        objects = dict(self.objects)
        objects[self.runtime.agent_id] = "agent"
        # keep only the static facts this agent's vocabulary can express
        init = {a for a in self.static_init if a[0] in vocab.predicates}
        if self.runtime.advert.location and "at" in vocab.predicates:
            init.add(("at", self.runtime.agent_id, self.runtime.advert.location))
        values = {t: v for t, v in self.static_values.items() if t[0] in vocab.functions}
        problem = ProblemSpec(
            name="local",
            domain_name=domain.name,
            objects=objects,
            init=frozenset(init),
            static_values=values,
            goal=(),
        )
        return domain, problem

    def _plan_for(self, domain: DomainModel, problem: ProblemSpec,
                  goal: tuple[Literal, ...]) -> Plan | None:
        from dataclasses import replace

        from .strips import check_problem

        candidate = replace(problem, goal=goal)
        try:
            check_problem(candidate, domain)
        except SemanticError:
            return None
        result = compute_plan(domain, candidate, SearchConfig(node_limit=self.node_limit))
        return None if isinstance(result, Unsolvable) else result

    def _on_cfp(self, e: Envelope) -> None:
        if e.payload.kind is not PayloadKind.PLAN_REQUEST:
            return
        goal = goal_from_json(e.payload.body["goal"])
        mine = tuple(l for l in goal if not self._deferred(l))
        if not mine:
            return
        domain, problem = self._local_model()
        if not domain.schemas:
            return
        try:
            plan, covered = self._best_effort(domain, problem, mine)
        except ResourceLimit:
            self.runtime.publish(
                Performative.REFUSE, PayloadKind.PLAN_REQUEST,
                {"reason": "resource-limit"},
                e.sender, conversation_id=e.conversation_id,
            )
            return
        if plan is None or not covered:
            return  # cannot contribute; stay silent
        self.runtime.publish(
            Performative.PROPOSE, PayloadKind.PROPOSAL_BODY,
            {
                "plan": plan_to_json(plan),
                "covered": goal_to_json(sorted(covered)),
                "cost": str(plan.total_cost),
            },
            e.sender, conversation_id=e.conversation_id,
        )

    def _best_effort(self, domain: DomainModel, problem: ProblemSpec,
                     goal: tuple[Literal, ...]):
        """Full goal first; else the conjunction of individually achievable
        literals; else chain per-literal plans from successive end states."""
        plan = self._plan_for(domain, problem, goal)
        if plan is not None:
            return plan, frozenset(goal)
        achievable = tuple(
            l for l in sorted(goal) if self._plan_for(domain, problem, (l,)) is not None
        )
        if not achievable:
            return None, frozenset()
        plan = self._plan_for(domain, problem, achievable)
        if plan is not None:
            return plan, frozenset(achievable)
        from dataclasses import replace as dc_replace

        state = frozenset(problem.init)
        steps: list[GroundAction] = []
        covered: set[Literal] = set()
        for l in achievable:
            sub = self._plan_for(domain, dc_replace(problem, init=state), (l,))
            if sub is None:
                continue
            for s in sub.steps:
                state = (state - s.dels) | s.adds
                steps.append(s)
            covered.add(l)
        if not covered:
            return None, frozenset()
        return Plan.of(steps), frozenset(covered)
