"""Command line entry points: broker, scenario runner, planner, tooling."""

from __future__ import annotations

import json
import logging
import os
import sys
import time
from pathlib import Path

import click

from . import harness
from .bus import run_broker
from .planner import SearchConfig, Unsolvable, plan as compute_plan
from .strips import parse_domain, parse_problem, print_domain


def _setup_logging() -> None:
    level = os.environ.get("OFFICEMESH_LOG", "off").lower()
    if level == "off":
        logging.disable(logging.CRITICAL)
    elif level == "info":
        logging.basicConfig(level=logging.INFO)
    elif level == "trace":
        logging.basicConfig(level=logging.DEBUG)


@click.group()
def main() -> None:
    """Plug & play multi-agent middleware with a planning reasoning engine."""
    _setup_logging()


@main.command()
@click.option("--listen", default="127.0.0.1:7751", show_default=True)
@click.option("--queue-capacity", default=1024, show_default=True)
@click.option("--transcript", type=click.Path(), default=None,
              help="Write the delivery transcript here on shutdown.")
def broker(listen: str, queue_capacity: int, transcript: str | None) -> None:
    """Run a standalone TCP broker until interrupted."""
    handle = run_broker(
        {"transport": "tcp", "listen_addr": listen, "queue_capacity": queue_capacity}
    )
    click.echo(f"broker listening on {handle.address[0]}:{handle.address[1]}")
    try:
        while True:
            time.sleep(0.5)
    except KeyboardInterrupt:
        pass
    finally:
        handle.shutdown(transcript)
        if transcript:
            click.echo(f"transcript written to {transcript}")


@main.command()
@click.option("--scenario", "scenario_number", type=int, default=None,
              help="Bundled scenario number (1-3).")
@click.option("--scenario-file", type=click.Path(exists=True), default=None,
              help="Run a scenario from an explicit JSON file instead.")
@click.option("--mode", type=click.Choice(["centralized", "decentralized"]),
              default="centralized", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--transcript", type=click.Path(), default=None)
@click.option("--gateway-port", type=int, default=None,
              help="Serve the operator gateway on this port while running.")
@click.option("--pace", type=float, default=0.0,
              help="Seconds of wall time per tick (for console viewing).")
def run(scenario_number: int | None, scenario_file: str | None, mode: str,
        seed: int, transcript: str | None, gateway_port: int | None,
        pace: float) -> None:
    """Run a scenario and evaluate its transcript assertions."""
    if scenario_file is not None:
        spec = harness.load_scenario(scenario_file)
    elif scenario_number is not None:
        spec = harness.load_scenario(harness.scenario_path(scenario_number))
    else:
        raise click.UsageError("pass --scenario N or --scenario-file PATH")
    if gateway_port is None and pace == 0.0:
        result = harness.run_scenario(spec, mode, seed=seed, transcript_path=transcript)
    else:
        from .gateway import gateway_serve

        stack = harness.build_stack(spec, mode)
        server = None
        if gateway_port is not None:
            server = gateway_serve(stack, port=gateway_port)
            click.echo(f"gateway on ws://{server.address[0]}:{server.address[1]}")
        max_ticks = spec.get("max_ticks", 200)
        for tick in range(max_ticks):
            stack.kernel.run(tick + 1)
            if pace:
                time.sleep(pace)
        checks = []
        for i, assertion in enumerate(spec.get("assertions", [])):
            modes = assertion.get("modes")
            if modes and mode not in modes:
                continue
            ok, detail = harness.evaluate_assertion(
                assertion, stack.broker.transcript(), stack.kernel.history,
                stack.office_map)
            checks.append({"name": assertion.get("name", f"assertion-{i}"),
                           "ok": ok, "detail": detail})
        if transcript:
            stack.broker.dump_transcript(transcript)
        if server is not None:
            server.close()
        result = harness.ScenarioResult(
            scenario_id=spec.get("id", scenario_number), mode=mode,
            passed=all(c["ok"] for c in checks), checks=checks,
            transcript_path=transcript)
    click.echo(result.summary())
    sys.exit(0 if result.passed else 1)


@main.command("plan")
@click.option("--domain", "domain_path", type=click.Path(exists=True), required=True)
@click.option("--problem", "problem_path", type=click.Path(exists=True), required=True)
@click.option("--mode", type=click.Choice(["optimal", "satisficing"]),
              default="optimal", show_default=True)
@click.option("--node-limit", type=int, default=200_000, show_default=True)
def plan_cmd(domain_path: str, problem_path: str, mode: str, node_limit: int) -> None:
    """Plan for a PDDL domain/problem pair and print the steps."""
    domain = parse_domain(Path(domain_path).read_text())
    problem = parse_problem(Path(problem_path).read_text(), domain)
    result = compute_plan(domain, problem, SearchConfig(mode=mode, node_limit=node_limit))
    if isinstance(result, Unsolvable):
        click.echo(f"unsolvable: {result.reason}")
        sys.exit(2)
    for step in result.steps:
        click.echo(step.name)
    click.echo(f"; cost = {result.total_cost}")


@main.command("dump-domain")
@click.option("--scenario", "scenario_number", type=int, default=1, show_default=True)
@click.option("--ticks", type=int, default=1, show_default=True,
              help="Ticks to run before dumping the composed model.")
def dump_domain(scenario_number: int, ticks: int) -> None:
    """Boot a scenario, let adverts arrive, and print the composed domain."""
    spec = harness.load_scenario(harness.scenario_path(scenario_number))
    stack = harness.build_stack(spec, "centralized")
    stack.kernel.run(ticks)
    click.echo(print_domain(stack.maintainer.model), nl=False)


@main.command()
@click.argument("transcript", type=click.Path(exists=True))
@click.option("--performative", default=None)
@click.option("--kind", default=None)
@click.option("--sender", default=None)
@click.option("--recipient", default=None)
@click.option("--conversation", default=None)
@click.option("--min-tick", type=int, default=None)
@click.option("--max-tick", type=int, default=None)
@click.option("--expect", is_flag=True,
              help="Exit nonzero unless at least one record matches.")
def replay(transcript: str, performative: str | None, kind: str | None,
           sender: str | None, recipient: str | None, conversation: str | None,
           min_tick: int | None, max_tick: int | None, expect: bool) -> None:
    """Filter and print a recorded transcript."""
    try:
        records = harness.load_transcript(transcript)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"cannot read transcript: {exc}", err=True)
        sys.exit(2)
    filters: dict = {}
    if performative:
        filters["performative"] = performative
    if kind:
        filters["kind"] = kind
    if sender:
        filters["sender"] = sender
    if recipient:
        filters["recipient"] = recipient
    if conversation:
        filters["conversation_id"] = conversation
    if min_tick is not None:
        filters["min_tick"] = min_tick
    if max_tick is not None:
        filters["max_tick"] = max_tick
    matches = harness.replay_records(records, filters)
    for record in matches:
        click.echo(harness.format_record(record))
    if expect and not matches:
        sys.exit(1)


if __name__ == "__main__":
    main()
