"""Forward state-space planner over ground STRIPS with exact costs.

Optimal mode is uniform-cost search (blind, admissible by construction);
satisficing mode is A* guided by the additive delete-relaxation heuristic.
Both are fully deterministic: the open list is ordered by (f, g, ground-action
order, insertion order), so identical inputs always yield the identical plan.
"""

from __future__ import annotations

import heapq
import itertools
import re
import subprocess
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .strips import (
    Atom,
    DomainModel,
    GroundAction,
    Plan,
    ProblemSpec,
    goal_satisfied,
)

OPTIMAL = "optimal"
SATISFICING = "satisficing"

INF = float("inf")


class PlannerError(Exception):
    pass


class ResourceLimit(PlannerError):
    pass


class ConfigError(PlannerError):
    pass


class PlannerBackendError(PlannerError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    mode: str = OPTIMAL
    node_limit: int = 200_000
    heuristic: str | None = None  # blind | h_add; None picks per mode
    tie_break: str = "f-g-action-insertion"

    def __post_init__(self):
        if self.mode not in (OPTIMAL, SATISFICING):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.heuristic not in (None, "blind", "h_add"):
            raise ConfigError(f"unknown heuristic {self.heuristic!r}")
        if self.mode == OPTIMAL and self.heuristic == "h_add":
            raise ConfigError("optimal mode requires an admissible setup (blind)")
        if self.node_limit < 1:
            raise ConfigError("node_limit must be positive")
        if self.tie_break != "f-g-action-insertion":
            raise ConfigError(f"unknown tie_break {self.tie_break!r}")

    def resolved_heuristic(self) -> str:
        if self.heuristic is not None:
            return self.heuristic
        return "blind" if self.mode == OPTIMAL else "h_add"


@dataclass(frozen=True)
class Unsolvable:
    reason: str = "search space exhausted"


def _universe(domain: DomainModel, problem: ProblemSpec) -> dict[str, str]:
    universe = dict(domain.vocabulary.constants)
    universe.update(problem.objects)
    return universe


def ground(domain: DomainModel, problem: ProblemSpec,
           instantiation_limit: int | None = None) -> list[GroundAction]:
    """All type-respecting instantiations, ordered by schema name then args."""
    from .strips import ground_schema

    vocab = domain.vocabulary
    universe = _universe(domain, problem)
    limit = instantiation_limit if instantiation_limit is not None else 2_000_000
    out: list[GroundAction] = []
    for schema in sorted(domain.schemas, key=lambda s: s.name):
        candidates = []
        for _, ptype in schema.params:
            names = sorted(o for o, t in universe.items() if vocab.is_subtype(t, ptype))
            candidates.append(names)
        for combo in itertools.product(*candidates):
            if len(out) >= limit:
                raise ResourceLimit(f"grounding exceeded {limit} instantiations")
            binding = {v: o for (v, _), o in zip(schema.params, combo)}
            out.append(ground_schema(schema, binding, problem.static_values))
    return out


def h_add(state: frozenset[Atom], goal, actions: list[GroundAction]) -> Fraction | float:
    """Additive cost estimate under delete relaxation.

    Negative literals are treated as free (the relaxation only loosens, so an
    infinite result still proves real unreachability). Returns INF when some
    positive goal atom is unreachable even ignoring deletes.
    """
    cost: dict[Atom, Fraction] = {a: Fraction(0) for a in state}
    changed = True
    while changed:
        changed = False
        for a in actions:
            total = Fraction(0)
            reachable = True
            for p in a.pos_pre:
                c = cost.get(p)
                if c is None:
                    reachable = False
                    break
                total += c
            if not reachable:
                continue
            through = total + a.cost
            for atom in a.adds:
                if cost.get(atom, None) is None or through < cost[atom]:
                    cost[atom] = through
                    changed = True
    estimate = Fraction(0)
    for l in goal:
        if not l.positive:
            continue
        c = cost.get(l.atom)
        if c is None:
            return INF
        estimate += c
    return estimate


def plan(domain: DomainModel, problem: ProblemSpec,
         cfg: SearchConfig | None = None) -> Plan | Unsolvable:
    cfg = cfg or SearchConfig()
    actions = ground(domain, problem, instantiation_limit=cfg.node_limit * 10)
    init = frozenset(problem.init)
    goal = problem.goal

    heuristic = cfg.resolved_heuristic()
    if h_add(init, goal, actions) == INF:
        return Unsolvable("goal unreachable even under delete relaxation")
    if goal_satisfied(init, goal):
        return Plan.of([])

    def h(state: frozenset[Atom]) -> Fraction | float:
        if heuristic == "blind":
            return Fraction(0)
        return h_add(state, goal, actions)

    counter = itertools.count()
    # heap entries: (f, g, producing-action order, insertion order, state)
    start_h = h(init)
    open_heap: list[tuple] = [(start_h, Fraction(0), -1, next(counter), init)]
    best_g: dict[frozenset[Atom], Fraction] = {init: Fraction(0)}
    parent: dict[frozenset[Atom], tuple[frozenset[Atom], GroundAction] | None] = {init: None}
    closed: set[frozenset[Atom]] = set()
    expansions = 0

    while open_heap:
        f, g, _, _, state = heapq.heappop(open_heap)
        if state in closed:
            continue
        closed.add(state)
        if goal_satisfied(state, goal):
            steps: list[GroundAction] = []
            cursor = state
            while parent[cursor] is not None:
                prev, action = parent[cursor]
                steps.append(action)
                cursor = prev
            steps.reverse()
            return Plan.of(steps)
        expansions += 1
        if expansions > cfg.node_limit:
            raise ResourceLimit(f"node limit {cfg.node_limit} exceeded")
        for order, action in enumerate(actions):
            if not (action.pos_pre <= state) or (action.neg_pre & state):
                continue
            nxt = (state - action.dels) | action.adds
            ng = g + action.cost
            known = best_g.get(nxt)
            if known is not None and known <= ng:
                continue
            best_g[nxt] = ng
            parent[nxt] = (state, action)
            hh = h(nxt)
            if hh == INF:
                continue
            heapq.heappush(open_heap, (ng + hh, ng, order, next(counter), nxt))
    return Unsolvable()


_PLAN_LINE_RE = re.compile(r"^\(\s*([^\s()]+)((?:\s+[^\s()]+)*)\s*\)$")


@dataclass
class ExternalPlanner:
    """Adapter for a drop-in external planner binary.

    The command gets the domain and problem file paths appended, must exit 0,
    and must print one plan step per line as ``(<name> <args...>)``; every
    step must resolve against our own grounding.
    """

    command: list[str]

    def plan(self, domain: DomainModel, problem: ProblemSpec) -> Plan:
        from .strips import print_domain, print_problem

        with tempfile.TemporaryDirectory(prefix="officemesh-plan-") as tmp:
            dpath = Path(tmp) / "domain.pddl"
            ppath = Path(tmp) / "problem.pddl"
            dpath.write_text(print_domain(domain))
            ppath.write_text(print_problem(problem))
            proc = subprocess.run(
                self.command + [str(dpath), str(ppath)],
                capture_output=True, text=True,
            )
        if proc.returncode != 0:
            raise PlannerBackendError(
                f"backend exited {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        index = {(a.schema_name, a.args): a for a in ground(domain, problem)}
        steps = []
        for raw in proc.stdout.splitlines():
            line = raw.strip()
            if not line or line.startswith(";"):
                continue
            m = _PLAN_LINE_RE.match(line)
            if not m:
                raise PlannerBackendError(f"unparseable plan line {line!r}")
            name = m.group(1)
            args = tuple(m.group(2).split())
            action = index.get((name, args))
            if action is None:
                raise PlannerBackendError(f"plan step {line!r} does not ground")
            steps.append(action)
        return Plan.of(steps)
