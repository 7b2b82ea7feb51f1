"""Acceptance gate: every criterion below prints one PASS/FAIL line and
enforces its stated runtime budget. Run with `pytest -s tests/test_acceptance.py`
to see the lines."""

import random
import time

from officemesh import harness
from officemesh.acl import (
    COMPATIBILITY,
    EncodingError,
    Envelope,
    Payload,
    PayloadKind,
    decode_envelope,
    encode_envelope,
    performative_set,
)
from officemesh.agentkit import LivenessTable
from officemesh.planner import SearchConfig, Unsolvable, plan
from officemesh.reasoning import select_proposals
from officemesh.simworld import sensor_advert, turtlebot_advert
from officemesh.strips import compose_domain, validate_plan

from oracles import oracle_optimal_cost, random_instance, random_valid_envelope
from test_reasoning import proposal, GOAL


def report(number: int, title: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{status}] criterion {number}: {title}{suffix}")
    assert ok, f"criterion {number} failed: {title} {detail}"


def test_criterion_1_wire_roundtrip():
    start = time.monotonic()
    rng = random.Random(11)
    ok = True
    for _ in range(1000):
        e = random_valid_envelope(rng)
        if decode_envelope(encode_envelope(e)) != e:
            ok = False
            break
    rejected = 0
    total_bad = 0
    for performative in performative_set():
        for kind in PayloadKind:
            if kind in COMPATIBILITY[performative]:
                continue
            total_bad += 1
            e = Envelope(
                msg_id="x#1", conversation_id="x:1", performative=performative,
                sender="x", recipient="y", payload=Payload(kind, {}),
                sim_time=0, seq=1,
            )
            try:
                encode_envelope(e)
            except EncodingError:
                rejected += 1
    elapsed = time.monotonic() - start
    ok = ok and rejected == total_bad and elapsed < 5.0
    report(1, "wire roundtrip + compatibility rejection", ok,
           f"1000 roundtrips, {rejected}/{total_bad} bad pairs rejected, {elapsed:.2f}s")


def test_criterion_2_planner_soundness_and_optimality():
    start = time.monotonic()
    rng = random.Random(2026)
    failures = []
    for i in range(100):
        domain, problem, actions = random_instance(rng)
        expected = oracle_optimal_cost(frozenset(problem.init), problem.goal, actions)
        result = plan(domain, problem, SearchConfig(mode="optimal"))
        if isinstance(result, Unsolvable):
            failures.append(f"instance {i}: planner says unsolvable")
            continue
        if not validate_plan(domain, problem, result):
            failures.append(f"instance {i}: plan does not validate")
        if result.total_cost != expected:
            failures.append(
                f"instance {i}: cost {result.total_cost} != oracle {expected}"
            )
    elapsed = time.monotonic() - start
    ok = not failures and elapsed < 60.0
    report(2, "planner soundness + exact optimality on 100 random instances", ok,
           f"{elapsed:.2f}s" + ("; " + failures[0] if failures else ""))


def _run_scenario_criterion(number, scenario, modes, required_checks, budget=10.0):
    problems = []
    for mode in modes:
        start = time.monotonic()
        result = harness.run_scenario(harness.scenario_path(scenario), mode)
        elapsed = time.monotonic() - start
        if elapsed >= budget:
            problems.append(f"{mode}: {elapsed:.1f}s over budget")
        if not result.passed:
            bad = [c["name"] for c in result.checks if not c["ok"]]
            problems.append(f"{mode}: failing checks {bad}")
        names = {c["name"] for c in result.checks}
        missing = [r for r in required_checks if r not in names]
        if missing:
            problems.append(f"{mode}: missing expected checks {missing}")
    return problems


def test_criterion_3_scenario_1_both_modes():
    problems = _run_scenario_criterion(
        3, 1, ("centralized", "decentralized"),
        [
            "initial plan sends the turtlebot to office1",
            "initial plan covers office2 with its stationary sensor",
            "initial plan covers confroom with its stationary sensor",
            "office2 sensor death detected within timeout + sweep",
            "replanned execution routes the turtlebot to office2",
            "executed steps replay to goal satisfaction",
        ],
    )
    report(3, "scenario 1 passes in both modes", not problems,
           "; ".join(problems))


def test_criterion_4_scenario_2_both_modes():
    problems = _run_scenario_criterion(
        4, 2, ("centralized", "decentralized"),
        [
            "confroom sensor death detected within timeout + sweep",
            "replanned execution routes the turtlebot to confroom",
            "executed steps replay to goal satisfaction",
        ],
    )
    report(4, "scenario 2 passes in both modes", not problems,
           "; ".join(problems))


def test_criterion_5_scenario_3_centralized_headless():
    problems = _run_scenario_criterion(
        5, 3, ("centralized",),
        [
            "camera broadcasts the motion observation",
            "motion observation precedes the turtlebot dispatch to entry",
            "dispatch precedes the login query",
            "query precedes the scripted answer",
            "answer precedes the closing execution confirm",
        ],
    )
    report(5, "scenario 3 headless ordering chain (centralized)", not problems,
           "; ".join(problems))


def test_criterion_6_decentralized_selection_exact():
    rng = random.Random(66)
    failures = []
    for i in range(50):
        proposals = []
        for j in range(rng.randint(1, 5)):
            from fractions import Fraction

            cost = Fraction(rng.randint(1, 40), rng.randint(1, 4))
            proposals.append(proposal(f"ag-{rng.randint(0, 6)}-{j}", cost, GOAL))
        for j in range(rng.randint(0, 4)):
            subset = rng.sample(GOAL, rng.randint(1, 2))
            proposals.append(proposal(f"part-{j}", rng.randint(1, 15), subset))
        selected = select_proposals(GOAL, proposals)
        full = [p for p in proposals if frozenset(GOAL) <= p.covered]
        best_cost = min(p.cost for p in full)
        expected_winner = min(p.proposer for p in full if p.cost == best_cost)
        if (len(selected) != 1 or selected[0].cost != best_cost
                or selected[0].proposer != expected_winner):
            failures.append(f"set {i}")
    report(6, "selection picks the exact cheapest full-coverage proposal", not failures,
           f"50 randomized proposal sets" + ("; failed: " + ", ".join(failures) if failures else ""))


def test_criterion_7_liveness_window():
    # silenced at tick t: reported dead at the first 5-tick sweep in (t+30, t+35]
    silenced_at = 200
    table = LivenessTable()
    advert = sensor_advert("s1", "office2")
    dead_tick = None
    for now in range(0, 400):
        if now % 10 == 0 and now <= silenced_at:
            table.record_heartbeat(advert, now)
        if now % 5 == 0:
            newly = table.sweep(now, 30)
            if newly:
                dead_tick = now
                break
    window_ok = dead_tick is not None and silenced_at + 30 < dead_tick <= silenced_at + 35

    # an on-schedule agent is never reported dead across 10,000 ticks
    table2 = LivenessTable()
    never_dead = True
    for now in range(0, 10_000):
        if now % 10 == 0:
            table2.record_heartbeat(advert, now)
        if now % 5 == 0 and table2.sweep(now, 30):
            never_dead = False
            break
    report(7, "death window (t+30, t+35] and no false deaths over 10k ticks",
           window_ok and never_dead,
           f"dead at {dead_tick} after silence at {silenced_at}")


def test_criterion_8_determinism_all_six_combinations(tmp_path):
    mismatches = []
    for scenario in (1, 2, 3):
        for mode in ("centralized", "decentralized"):
            paths = []
            for attempt in ("a", "b"):
                out = tmp_path / f"s{scenario}-{mode}-{attempt}.jsonl"
                harness.run_scenario(harness.scenario_path(scenario), mode,
                                     seed=7, transcript_path=out)
                paths.append(out)
            if paths[0].read_bytes() != paths[1].read_bytes():
                mismatches.append(f"scenario {scenario} {mode}")
    report(8, "byte-identical transcripts for all 6 (scenario, mode) pairs",
           not mismatches, "; ".join(mismatches))


def test_criterion_9_composition_add_remove_is_exact():
    base = [
        turtlebot_advert("tb1", "corridor"),
        sensor_advert("sensor-office2", "office2"),
        sensor_advert("sensor-confroom", "confroom"),
    ]
    original = compose_domain(base)
    extra = sensor_advert("sensor-entry", "entry")
    grown = compose_domain(base + [extra])
    shrunk = compose_domain(base)  # recompose-from-scratch oracle
    ok = (grown != original) and (shrunk == original)
    # and again for removal of a pre-existing advert then re-adding it
    without = compose_domain(base[1:])
    restored = compose_domain(base)
    ok = ok and without != original and restored == original
    report(9, "composition add/remove returns the exact original model", ok)
