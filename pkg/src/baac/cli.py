"""Command line front end: ``baac run``, ``baac check`` and ``baac render``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .fixture import FixtureError, load_fixture
from .lang.parser import ParseError
from .lang.settings import SettingsError, load_settings
from .render import hints_from_lines, render_text
from .runner import EXIT_CONFIG, EXIT_GOAL, EXIT_OK, ConfigError, build_problem, load_theories, run
from .semantics import check_trajectory
from .supervisor import MODES, STRATEGIES, GlobalUnsatisfiable, InconsistentInitialState
from .trace import TraceError, parse_trace

log = logging.getLogger("baac")

# problems with the inputs rather than with the outcome of a run
INPUT_ERRORS = (
    OSError, SettingsError, ParseError, ConfigError, FixtureError, TraceError,
    InconsistentInitialState, GlobalUnsatisfiable,
)


def _config(args):
    cfg = load_settings(args.settings)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.strategy is not None:
        changes["strategy"] = args.strategy
    if args.mode is not None:
        changes["mode"] = args.mode
    if args.deterministic is not None:
        changes["deterministic"] = args.deterministic
    return dataclasses.replace(cfg, **changes) if changes else cfg


def cmd_run(args) -> int:
    result = run(_config(args))
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as fh:
            fh.write(result.trace)
        for agent, verdict in result.verdicts.items():
            print(f"{agent}: {verdict}")
    else:
        sys.stdout.write(result.trace)
    if result.report is not None and not result.report.valid:
        for v in result.report.violations:
            log.error("trajectory check: %s", v)
    return result.exit_code


def cmd_check(args) -> int:
    traj, settings = load_fixture(args.fixture)
    settings = args.settings or settings
    if settings is None:
        raise FixtureError("no settings file: pass --settings or add a '% settings <path>' line")
    cfg = load_settings(settings)
    problem = build_problem(load_theories(cfg))
    report = check_trajectory(problem, traj, cfg.horizon)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.valid else EXIT_GOAL


def _render_input(path):
    """States and render hints of a trace, or of a fixture via its settings header."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.startswith("HEADER\t"):
        data = parse_trace(text)
        return data.states(), hints_from_lines(data.render)
    traj, settings = load_fixture(path)
    hints = load_settings(settings).render if settings else None
    return list(traj.states), hints


def cmd_render(args) -> int:
    states, hints = _render_input(args.trace)
    if hints is None and args.settings:
        hints = load_settings(args.settings).render
    if hints is None:
        log.warning("no render hints in %s; nothing to draw", args.trace)
        return EXIT_OK
    sys.stdout.write(render_text(states, hints))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="baac", description="Multi-agent action theory simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate the agents of a settings file")
    r.add_argument("settings")
    r.add_argument("--seed", type=int)
    r.add_argument("--strategy", choices=STRATEGIES)
    r.add_argument("--mode", choices=MODES)
    r.add_argument("--trace-out", metavar="PATH", help="write the trace here instead of stdout")
    det = r.add_mutually_exclusive_group()
    det.add_argument("--deterministic", dest="deterministic", action="store_const", const=True)
    det.add_argument("--concurrent", dest="deterministic", action="store_const", const=False)
    r.set_defaults(func=cmd_run, deterministic=None)

    c = sub.add_parser("check", help="validate a trajectory fixture")
    c.add_argument("fixture")
    c.add_argument("--settings", help="settings naming the theories (default: the fixture header)")
    c.set_defaults(func=cmd_check)

    g = sub.add_parser("render", help="draw the states of a trace or fixture as ASCII frames")
    g.add_argument("trace", help="trace file or trajectory fixture")
    g.add_argument("--settings", help="take render hints from here when the trace has none")
    g.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
