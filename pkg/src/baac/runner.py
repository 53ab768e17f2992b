"""Simulation loop tying agents, tuple space and supervisor together.

Per time step ``k``: the request exchange runs, every active agent proposes
an action set, the supervisor commits the transition ``k -> k+1`` and the
outcome is broadcast. In concurrent mode the agents' planning runs in a
thread pool, but every tuple-space interaction still happens in the fixed
turn order, so the trace equals the deterministic one.
"""
from __future__ import annotations

import functools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .agent import ACTIVE, AgentRuntime
from .coordination import Message, TupleSpace, request_exchange
from .lang.parser import parse_theory
from .lang.settings import RunConfig
from .lang.validate import validate_problem
from .problem import Problem, State
from .render import hints_to_lines
from .semantics import Report, Trajectory, check_trajectory, holds
from .supervisor import Supervisor, collect_initial
from .trace import TraceWriter

log = logging.getLogger(__name__)

EXIT_OK, EXIT_GOAL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


# theories are immutable, so repeated runs of one settings file share the parse
_parse_cached = functools.lru_cache(maxsize=64)(parse_theory)


@dataclass
class RunResult:
    exit_code: int
    trace: str
    states: List[State]
    actions: List[frozenset]
    verdicts: Dict[str, str]
    report: Optional[Report] = None
    results: list = field(default_factory=list)

    @property
    def trajectory(self):
        return Trajectory(tuple(self.states), tuple(self.actions))


def load_theories(config: RunConfig):
    if not config.theories:
        raise ConfigError("the settings name no theory files")
    theories = []
    for path in config.theory_paths():
        with open(path, encoding="utf-8") as fh:
            theories.append(_parse_cached(fh.read()))
    return theories


def build_problem(theories) -> Problem:
    errors = [d for d in validate_problem(theories) if d.severity == "error"]
    for d in validate_problem(theories):
        if d.severity == "warning":
            log.warning("%s", d)
    if errors:
        raise ConfigError("; ".join(str(d) for d in errors))
    return Problem(theories)


class Simulation:
    def __init__(self, theories, config: RunConfig):
        self.config = config
        self.problem = build_problem(theories)
        self.init = collect_initial(self.problem)
        self.trace = TraceWriter()
        self.space = TupleSpace(on_event=self.trace.tuple_event)
        self.supervisor = Supervisor(self.problem, config.strategy, config.mode, config.seed)
        priorities = {n: t.priority for n, t in self.problem.theories.items()}
        self.agents: Dict[str, AgentRuntime] = {
            name: AgentRuntime(
                t, config.horizon, self.init, priorities,
                node_budget=config.node_budget, max_set_size=config.max_set_size,
            )
            for name, t in sorted(self.problem.theories.items())
        }

    def _header(self):
        c = self.config
        settings = {
            "horizon": c.horizon, "strategy": c.strategy, "mode": c.mode, "seed": c.seed,
            "max_set_size": c.max_set_size or "-",
        }
        agents = [(n, t.priority, t.fluent_names) for n, t in sorted(self.problem.theories.items())]
        render = hints_to_lines(c.render) if c.render else ()
        self.trace.header(settings, agents, render, self.init, self.problem.order)

    def _proposals(self, pool):
        active = [a for a in self.agents.values() if a.status == ACTIVE]
        if pool is not None:
            return dict(zip((a.name for a in active), pool.map(lambda a: a.propose(), active)))
        return {a.name: a.propose() for a in active}

    def run(self) -> RunResult:
        self._header()
        seq = [self.init]
        actions, results = [], []
        pool = None if self.config.deterministic else ThreadPoolExecutor(max_workers=max(1, len(self.agents)))
        try:
            for k in range(self.config.horizon):
                self.trace.step(k)
                live = {n: a for n, a in self.agents.items() if a.status == ACTIVE}
                request_exchange(live, self.space, k, self.problem.priority, turn_offset=k)
                proposed = self._proposals(pool)
                proposals = {}
                for name in sorted(proposed):
                    acts = proposed[name]
                    if acts is None:
                        continue
                    self.space.out(Message.make("Propose", agent=name, step=k, actions=acts))
                for name in sorted(proposed):
                    msg = self.space.in_("Propose", agent=name, step=k)
                    if msg is not None:
                        proposals[name] = frozenset(msg.get("actions"))
                        self.trace.propose(name, proposals[name])
                result = self.supervisor.step(seq, proposals)
                self._log_result(result)
                seq.append(result.state)
                actions.append(frozenset(result.enabled))
                results.append(result)
                for name in sorted(result.outcomes):
                    self.space.out(Message.make("Outcome", agent=name, step=k, outcome=result.outcomes[name]))
                for name in sorted(self.agents):
                    if name in result.outcomes:
                        self.space.in_("Outcome", agent=name, step=k)
                    self.agents[name].observe(result)
        finally:
            if pool is not None:
                pool.shutdown()
            self.space.close()
        verdicts = {}
        for name in sorted(self.agents):
            agent = self.agents[name]
            if agent.status != ACTIVE:
                verdicts[name] = "failed"
            else:
                ok = all(holds(seq, len(seq) - 1, g) for g in agent.theory.goals)
                verdicts[name] = "success" if ok else "failure"
            self.trace.goal(name, verdicts[name])
        code = EXIT_OK if all(v != "failure" for v in verdicts.values()) else EXIT_GOAL
        traj = Trajectory(tuple(seq), tuple(actions))
        report = check_trajectory(self.problem, traj, self.config.horizon)
        return RunResult(code, self.trace.text(), seq, actions, verdicts, report, results)

    def _log_result(self, r):
        for keys in r.conflicts:
            self.trace.conflict(keys)
        for agent, action, option, applied in r.negotiation:
            self.trace.negotiate(agent, action, option, applied)
        for agent, action in sorted(r.enabled):
            self.trace.enable(agent, action)
        for (agent, action), reason in sorted(r.inhibited.items()):
            self.trace.inhibit(agent, action, reason)
        for f, old, new in r.diffs:
            self.trace.diff(f, old, new)
        for agent in sorted(r.outcomes):
            self.trace.outcome(agent, r.outcomes[agent])


def run(config: RunConfig, theories=None) -> RunResult:
    """Execute a run; theories are loaded from the settings unless given."""
    if theories is None:
        theories = load_theories(config)
    return Simulation(theories, config).run()
