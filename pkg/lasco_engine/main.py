"""Command-line entry point: ``lasco lint | check | simulate | pred``.

Exit status is 0 when nothing is violated, 1 when violations or alerts were
reported and 2 on usage, parse, consistency or lint errors.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from lasco_engine import configure_logging
from lasco_engine.distsim.simulation import run_simulation
from lasco_engine.distsim.topology import parse_topology
from lasco_engine.distsim.trace import parse_trace
from lasco_engine.evaluation.pipeline import eval_pred
from lasco_engine.history.graph import SystemGraph, build_system_graph
from lasco_engine.history.lsh import parse_attributes, parse_history
from lasco_engine.lang.lint import lint_policy
from lasco_engine.lang.policy import PolicyGraph, parse_policy_file
from lasco_engine.lang.predicate import parse_predicate, render_predicate, render_value
from lasco_engine.matcher.incremental import MatchCache, find_violations_incremental
from lasco_engine.matcher.violations import (
    MatchRecord,
    ViolationReport,
    collapse_isolated,
    failed_requirements,
    find_matches,
    find_violations,
)
from lasco_engine.settings import LascoError, SimulationOptions, settings

logger = logging.getLogger(__name__)

EXIT_CLEAN = 0
EXIT_VIOLATIONS = 1
EXIT_ERROR = 2

STRUCTURED = "structured"


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_policies(path: str) -> list[PolicyGraph]:
    policies = parse_policy_file(_read(path), source=Path(path).stem)
    if not policies:
        logger.warning("%s defines no policies", path)
    return policies


def _output_format(args: argparse.Namespace) -> str:
    return args.format or settings.env.OUTPUT_FORMAT


# ── Subcommands ────────────────────────────────────────────────────

def cmd_lint(args: argparse.Namespace) -> int:
    diagnostics = [d for p in _load_policies(args.policy_file) for d in lint_policy(p)]
    for diagnostic in diagnostics:
        print(diagnostic)
    return EXIT_ERROR if any(d.severity == "error" for d in diagnostics) else EXIT_CLEAN


def _replay(policies: list[PolicyGraph], history) -> tuple[SystemGraph, list[ViolationReport]]:
    """Append the history one instant at a time, checking only what each instant adds."""
    g = SystemGraph()
    caches = {p.name: MatchCache(p) for p in policies}
    reports: list[ViolationReport] = []
    for instance in history.instances():
        g.append(instance.snapshots, instance.events)
        for p in policies:
            reports.extend(find_violations_incremental(p, g, caches[p.name]))
    return g, reports


def cmd_check(args: argparse.Namespace) -> int:
    policies = _load_policies(args.policy_file)
    history = parse_history(_read(args.history_file))
    span = history.time_range()
    if span is not None:
        logger.info("History covers %d instants from %s to %s", len(history), *span)

    if args.incremental_replay:
        g, reports = _replay(policies, history)
    else:
        g = build_system_graph(history)
        reports = [r for p in policies for r in find_violations(p, g)]
    if args.collapse_isolated:
        reports = collapse_isolated(reports)

    structured = _output_format(args) == STRUCTURED
    if args.matches:
        for p in policies:
            for match in find_matches(p, g):
                listed = ViolationReport(
                    policy=p.name, match=MatchRecord.from_match(match), failed=failed_requirements(p, g, match),
                )
                print(listed.to_line() if structured else "; ".join([f"MATCH {p.name}", *listed.match.describe()]))
    for report in reports:
        print(report.to_line() if structured else report)
    return EXIT_VIOLATIONS if reports else EXIT_CLEAN


def cmd_simulate(args: argparse.Namespace) -> int:
    topology = parse_topology(_read(args.topology_file))
    policies = _load_policies(args.policy_file)
    reports = parse_trace(_read(args.trace_file))
    opts = SimulationOptions(pool_index=args.pool_index or settings.env.POOL_INDEX)
    result = run_simulation(topology, policies, reports, opts)

    for department, stats in result.stats.items():
        logger.info(
            "%s: %d reports, %d messages in, %d out, %d retained, %d alerts",
            department, stats.reports, stats.messages_in, stats.messages_out, stats.retained, stats.alerts,
        )
    alerts = result.unique_alerts()
    structured = _output_format(args) == STRUCTURED
    for alert in alerts:
        print(alert.to_line() if structured else alert)
    return EXIT_VIOLATIONS if alerts else EXIT_CLEAN


def cmd_pred(args: argparse.Namespace) -> int:
    expression = parse_predicate(args.expression)
    attrs = parse_attributes(" ".join(args.attrs))
    bindings = parse_attributes(" ".join(b.lstrip("$") for b in args.bind))
    conds = eval_pred(expression, attrs, bindings)
    for name, value in sorted(conds.bindings.items()):
        print(f"${name} = {render_value(value)}")
    print(f"condition: {render_predicate(conds.condition)}")
    return EXIT_CLEAN


# ── Argument parsing ───────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lasco", description="Graph-based security policy checker.")
    parser.add_argument("--log-level", help="Log level (default: LASCO_LOG_LEVEL or WARNING)")
    parser.add_argument("--no-color", action="store_true", help="Plain log output")
    commands = parser.add_subparsers(dest="command", required=True)

    lint = commands.add_parser("lint", help="Check policies for well-formedness")
    lint.add_argument("policy_file")
    lint.set_defaults(handler=cmd_lint)

    check = commands.add_parser("check", help="Report policy violations in a history")
    check.add_argument("policy_file")
    check.add_argument("history_file")
    check.add_argument("--incremental-replay", action="store_true", help="Feed the history one instant at a time")
    check.add_argument("--format", choices=["text", STRUCTURED], help="Output format (default: LASCO_OUTPUT_FORMAT)")
    check.add_argument("--collapse-isolated", action="store_true", help="Ignore snapshot times of isolated nodes")
    check.add_argument("--matches", action="store_true", help="Also list every domain match")
    check.set_defaults(handler=cmd_check)

    simulate = commands.add_parser("simulate", help="Run department engines over a trace")
    simulate.add_argument("topology_file")
    simulate.add_argument("policy_file")
    simulate.add_argument("trace_file")
    simulate.add_argument("--format", choices=["text", STRUCTURED])
    simulate.add_argument("--pool-index", choices=["indexed", "linear"])
    simulate.set_defaults(handler=cmd_simulate)

    pred = commands.add_parser("pred", help="Evaluate one predicate")
    pred.add_argument("expression")
    pred.add_argument("--attrs", nargs="*", default=[], metavar="KEY=VALUE")
    pred.add_argument("--bind", nargs="*", default=[], metavar="VAR=VALUE")
    pred.set_defaults(handler=cmd_pred)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, color=False if args.no_color else None)
    try:
        return args.handler(args)
    except (LascoError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
