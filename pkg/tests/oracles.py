"""Independent oracles and generators the test suite checks the package
against. Everything here is written from the ground truth definitions, not by
calling into the implementation under test."""

from __future__ import annotations

import heapq
import itertools
import random
from fractions import Fraction

from officemesh.acl import (
    BROADCAST,
    COMPATIBILITY,
    Envelope,
    Payload,
    performative_set,
)
from officemesh.strips import (
    ActionSchema,
    DomainModel,
    GroundAction,
    Literal,
    ProblemSpec,
    Vocabulary,
)


# -- set-arithmetic STRIPS oracle ------------------------------------------------

def oracle_applicable(state: set, action: GroundAction) -> bool:
    for atom in action.pos_pre:
        if atom not in state:
            return False
    for atom in action.neg_pre:
        if atom in state:
            return False
    return True


def oracle_apply(state: set, action: GroundAction) -> set:
    result = set(state)
    for atom in action.dels:
        result.discard(atom)
    for atom in action.adds:
        result.add(atom)
    return result


def oracle_goal_holds(state: set, goal) -> bool:
    for literal in goal:
        if literal.positive and literal.atom not in state:
            return False
        if not literal.positive and literal.atom in state:
            return False
    return True


# -- brute-force uniform-cost planner ---------------------------------------------

def oracle_optimal_cost(init: frozenset, goal, actions: list[GroundAction],
                        state_cap: int = 200_000):
    """Dijkstra over the full reachable state graph; returns the minimum plan
    cost as a Fraction, or None when no goal state is reachable."""
    dist = {init: Fraction(0)}
    counter = itertools.count()
    heap = [(Fraction(0), next(counter), init)]
    while heap:
        d, _, state = heapq.heappop(heap)
        if dist.get(state) != d:
            continue  # stale heap entry
        if oracle_goal_holds(state, goal):
            return d
        for action in actions:
            if not oracle_applicable(state, action):
                continue
            nxt = frozenset(oracle_apply(set(state), action))
            nd = d + action.cost
            if nxt not in dist or nd < dist[nxt]:
                dist[nxt] = nd
                heapq.heappush(heap, (nd, next(counter), nxt))
                if len(dist) > state_cap:
                    raise RuntimeError("oracle state cap exceeded")
    return None


# -- random envelope generator ------------------------------------------------------

_WORDS = ["alpha", "beta", "gamma", "delta", "office", "entry", "sensor", "rover"]


def _random_body(rng: random.Random, depth: int = 0) -> dict:
    body = {}
    for _ in range(rng.randint(0, 3)):
        key = rng.choice(_WORDS) + str(rng.randint(0, 9))
        roll = rng.random()
        if roll < 0.4:
            body[key] = rng.choice(_WORDS)
        elif roll < 0.6:
            body[key] = rng.randint(-1000, 1000)
        elif roll < 0.75:
            body[key] = [rng.choice(_WORDS) for _ in range(rng.randint(0, 3))]
        elif roll < 0.9 and depth < 2:
            body[key] = _random_body(rng, depth + 1)
        else:
            body[key] = rng.random() < 0.5
    return body


def random_valid_envelope(rng: random.Random) -> Envelope:
    performative = rng.choice(performative_set())
    kind = rng.choice(sorted(COMPATIBILITY[performative], key=lambda k: k.value))
    sender = rng.choice(_WORDS) + "-" + str(rng.randint(1, 9))
    recipient = BROADCAST if rng.random() < 0.3 else rng.choice(_WORDS)
    seq = rng.randint(1, 10_000)
    return Envelope(
        msg_id=f"{sender}#{seq}",
        conversation_id=f"{sender}:{rng.randint(1, 500)}",
        performative=performative,
        sender=sender,
        recipient=recipient,
        payload=Payload(kind, _random_body(rng)),
        sim_time=rng.randint(0, 100_000),
        seq=seq,
    )


# -- random solvable STRIPS instances -------------------------------------------------

def random_instance(rng: random.Random, max_objects: int = 6,
                    max_ground: int = 40):
    """A small random typed-STRIPS task that is solvable by construction:
    the goal is sampled from a state reached by a random applicable walk."""
    from officemesh.planner import ground

    while True:
        n_objects = rng.randint(2, max_objects)
        objects = {f"o{i}": "thing" for i in range(n_objects)}
        predicates = {}
        for i in range(rng.randint(2, 4)):
            predicates[f"p{i}"] = tuple(["thing"] * rng.randint(1, 2))
        pred_names = sorted(predicates)
        vocab = Vocabulary(types={"thing": "object"}, predicates=predicates)

        schemas = []
        for i in range(rng.randint(2, 4)):
            n_params = rng.randint(1, 2)
            params = tuple((f"?v{j}", "thing") for j in range(n_params))
            vars_ = [p[0] for p in params]

            def random_atom():
                name = rng.choice(pred_names)
                arity = len(predicates[name])
                return (name,) + tuple(rng.choice(vars_) for _ in range(arity))

            precond = []
            for _ in range(rng.randint(0, 2)):
                precond.append(Literal(rng.random() < 0.8, random_atom()))
            adds = {random_atom() for _ in range(rng.randint(1, 2))}
            dels = {random_atom() for _ in range(rng.randint(0, 1))} - adds
            try:
                schemas.append(
                    ActionSchema(
                        name=f"act{i}",
                        owner="",
                        params=params,
                        precond=tuple(precond),
                        add_effects=frozenset(adds),
                        del_effects=frozenset(dels),
                        cost=Fraction(rng.randint(0, 5)),
                    )
                )
            except Exception:
                continue
        if not schemas:
            continue
        try:
            domain = DomainModel("rand", vocab, tuple(schemas))
        except Exception:
            continue

        init_atoms = set()
        for name in pred_names:
            for _ in range(rng.randint(0, 2)):
                args = tuple(rng.choice(sorted(objects)) for _ in predicates[name])
                init_atoms.add((name,) + args)
        problem = ProblemSpec(
            name="rand",
            domain_name="rand",
            objects=objects,
            init=frozenset(init_atoms),
            static_values={},
            goal=(),
        )
        try:
            actions = ground(domain, problem)
        except Exception:
            continue
        if not actions or len(actions) > max_ground:
            continue

        # random applicable walk; goal atoms come from the end state
        state = set(init_atoms)
        for _ in range(rng.randint(0, 6)):
            applicable_now = [a for a in actions if oracle_applicable(state, a)]
            if not applicable_now:
                break
            state = oracle_apply(state, rng.choice(applicable_now))
        if not state:
            continue
        goal_atoms = rng.sample(sorted(state), k=min(len(state), rng.randint(1, 3)))
        goal = tuple(Literal(True, atom) for atom in goal_atoms)
        from dataclasses import replace

        return domain, replace(problem, goal=goal), actions
