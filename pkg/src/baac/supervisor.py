"""The supervisor: the only writer of the global state sequence.

Each step it receives one action set per agent, detects conflicts (groups of
actions sharing effect fluents whose joint effects are unsatisfiable),
resolves them by priority and then either by its own strategy or by the
agents' negotiation, enforces the global constraints and commits the
resulting transition.
"""
from __future__ import annotations

import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .coordination import Contender, Decision, Resolution, negotiate_round_robin
from .lang.ast import TRUE, conj, fluents
from .problem import Problem, State
from .semantics import (
    desired_effects, globals_accept, holds, inertial_complete, iter_solutions,
)

log = logging.getLogger(__name__)

STRATEGIES = ("max_subset", "random")
MODES = ("supervisor", "negotiate")


class InconsistentInitialState(ValueError):
    pass


class GlobalUnsatisfiable(RuntimeError):
    pass


@dataclass(frozen=True)
class Candidate:
    agent: str
    action: str
    effect: object = TRUE
    priority: int = 0
    options: Tuple = ()

    @property
    def key(self):
        return (self.agent, self.action)


@dataclass(frozen=True)
class Proposal:
    agent: str
    step: int
    actions: FrozenSet[str]
    granularity: str = "action"


@dataclass
class ArbitrationProblem:
    candidates: List[Candidate]
    seq: Sequence
    domains: Dict
    accept: object = None

    def consistent(self, subset) -> bool:
        c = conj(*(x.effect for x in subset)) if subset else TRUE
        for sigma in iter_solutions(self.seq, c, self.domains):
            if self.accept is None or self.accept(sigma):
                return True
        return False

    def solve(self, subset):
        c = conj(*(x.effect for x in subset)) if subset else TRUE
        for sigma in iter_solutions(self.seq, c, self.domains):
            if self.accept is None or self.accept(sigma):
                return sigma
        return None


@dataclass
class StepResult:
    step: int
    proposals: Dict[str, FrozenSet[str]]
    enabled: FrozenSet[Tuple[str, str]]
    inhibited: Dict[Tuple[str, str], str]
    state: State
    diffs: Tuple[Tuple[str, int, int], ...]
    outcomes: Dict[str, str]
    conflicts: List[Tuple[Tuple[str, str], ...]] = field(default_factory=list)
    decisions: Dict[Tuple[str, str], Decision] = field(default_factory=dict)
    negotiation: List[Tuple[str, str, str, bool]] = field(default_factory=list)


def collect_initial(theories) -> State:
    """Smallest state (in universe order) meeting every agent's initial axioms.

    Fluents no initial axiom mentions take the minimum of their domain.
    """
    problem = theories if isinstance(theories, Problem) else Problem(list(theories))
    inits = [c for t in problem.theories.values() for c in t.initially]
    c = conj(*inits)
    base = State({f: d[0] for f, d in problem.domains.items()})
    sigma = next(iter_solutions([base], c, problem.domains), None) if inits else {}
    if sigma is None:
        raise InconsistentInitialState("the initial axioms of the agents are contradictory")
    state = base.replace(sigma)
    for g in problem.global_constraints:
        if g.applies_at(0) and not holds([state], 0, g.cond):
            raise GlobalUnsatisfiable(f"initial state violates '{g.cond}'")
    return state


def conflict_groups(problem: ArbitrationProblem) -> List[List[Candidate]]:
    """Groups of candidates linked through shared effect fluents, in name order."""
    cands = sorted(problem.candidates, key=lambda c: c.key)
    parent = list(range(len(cands)))

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    owner = {}
    for k, c in enumerate(cands):
        for f in fluents(c.effect):
            if f in owner:
                parent[find(k)] = find(owner[f])
            else:
                owner[f] = k
    groups: Dict[int, List[Candidate]] = {}
    for k, c in enumerate(cands):
        groups.setdefault(find(k), []).append(c)
    return list(groups.values())


def priority_filter(problem: ArbitrationProblem):
    """Drop the least important agents' actions until the rest is consistent.

    A larger priority number means a less important agent. Stops when the
    remainder is consistent or only one priority level is left.
    """
    survivors = list(problem.candidates)
    inhibited = []
    while not problem.consistent(survivors):
        levels = {c.priority for c in survivors}
        if len(levels) <= 1:
            break
        worst = max(levels)
        inhibited.extend(c for c in survivors if c.priority == worst)
        survivors = [c for c in survivors if c.priority != worst]
    return survivors, inhibited


def max_consistent_subset(problem: ArbitrationProblem, cands=None) -> List[Candidate]:
    """Largest consistent subset; ties go to the lexicographically first by (agent, action)."""
    cands = sorted(problem.candidates if cands is None else cands, key=lambda c: c.key)
    for size in range(len(cands), -1, -1):
        for combo in itertools.combinations(cands, size):
            if problem.consistent(combo):
                return list(combo)
    return []


def arbitrate(problem: ArbitrationProblem, strategy="max_subset", rng: Optional[random.Random] = None):
    """Enabled candidates chosen by the supervisor strategy.

    ``max_subset`` keeps a maximum-cardinality consistent subset of each
    conflict group; ``random`` keeps one randomly chosen action of every
    group that is in conflict.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy}")
    enabled = []
    for group in conflict_groups(problem):
        if problem.consistent(group):
            enabled.extend(group)
        elif strategy == "max_subset":
            enabled.extend(max_consistent_subset(problem, group))
        else:
            viable = [c for c in group if problem.consistent([c])]
            if viable:
                enabled.append((rng or random.Random(0)).choice(viable))
    return sorted(enabled, key=lambda c: c.key)


def enforce_global(seq, enabled: Sequence[Candidate], problem: Problem):
    """Shrink ``enabled`` until the committed state meets the global constraints.

    Returns the kept candidates. The largest subset that still admits a
    solution inside the global constraints wins, ties broken by name.
    """
    accept = globals_accept(seq, problem.global_constraints, len(seq))
    arb = ArbitrationProblem(list(enabled), seq, problem.domains, accept)
    if accept is None or arb.consistent(enabled):
        return list(enabled)
    if not accept({}):
        raise GlobalUnsatisfiable(f"no transition from step {len(seq) - 1} satisfies the global constraints")
    return max_consistent_subset(arb)


def commit_step(seq, problem: Problem, proposals, enabled: Sequence[Candidate], inhibited) -> StepResult:
    accept = globals_accept(seq, problem.global_constraints, len(seq))
    arb = ArbitrationProblem(list(enabled), seq, problem.domains, accept)
    sigma = arb.solve(enabled)
    if sigma is None:
        raise GlobalUnsatisfiable("enabled actions admit no solution")
    nxt = inertial_complete(sigma, seq)
    prev = seq[-1]
    diffs = tuple((f, prev[f], nxt[f]) for f in problem.order if prev[f] != nxt[f])
    outcomes = {}
    for agent in sorted(proposals):
        failed = any(k[0] == agent for k in inhibited)
        outcomes[agent] = "failure" if failed else "success"
    return StepResult(
        step=len(seq), proposals=dict(proposals),
        enabled=frozenset(c.key for c in enabled), inhibited=dict(inhibited),
        state=nxt, diffs=diffs, outcomes=outcomes,
    )


class Supervisor:
    def __init__(self, problem: Problem, strategy="max_subset", mode="supervisor", seed=0):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy}")
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode}")
        self.problem = problem
        self.strategy = strategy
        self.mode = mode
        self.rng = random.Random(seed)

    def _candidates(self, seq, proposals, inhibited):
        out = []
        for agent in sorted(proposals):
            spec_owner = self.problem.theory(agent)
            for name in sorted(proposals[agent]):
                spec = self.problem.action_spec(agent, name)
                if spec is None:
                    inhibited[(agent, name)] = "unknown_action"
                    continue
                if not any(holds(seq, len(seq) - 1, c) for c in spec.exec_conds):
                    inhibited[(agent, name)] = "not_executable"
                    continue
                decl = spec_owner.action(name)
                out.append(Candidate(
                    agent, name, desired_effects(spec, seq, name),
                    spec_owner.priority, decl.on_conflict if decl else (),
                ))
        return out

    def step(self, seq, proposals: Dict[str, FrozenSet[str]]) -> StepResult:
        inhibited: Dict[Tuple[str, str], str] = {}
        cands = self._candidates(seq, proposals, inhibited)
        arb = ArbitrationProblem(cands, seq, self.problem.domains)
        enabled: List[Candidate] = []
        conflicts, decisions, negotiation = [], {}, []
        for group in conflict_groups(arb):
            if arb.consistent(group):
                enabled.extend(group)
                continue
            conflicts.append(tuple(c.key for c in group))
            sub = ArbitrationProblem(group, seq, self.problem.domains)
            survivors, dropped = priority_filter(sub)
            for c in dropped:
                inhibited[c.key] = "priority"
            if sub.consistent(survivors):
                enabled.extend(survivors)
                continue
            if self.mode == "negotiate":
                res = negotiate_round_robin(
                    [Contender(c.agent, c.action, c.effect, c.options, c.priority) for c in survivors],
                    seq, self.problem.domains,
                )
                negotiation.extend(res.log)
                keep = set(res.survivors)
                for c in survivors:
                    d = res.decisions[c.key]
                    if c.key not in keep:
                        decisions[c.key] = d
                        inhibited[c.key] = f"negotiation:{d}"
                survivors = [c for c in survivors if c.key in keep]
                if sub.consistent(survivors):
                    enabled.extend(survivors)
                    continue
            chosen = arbitrate(ArbitrationProblem(survivors, seq, self.problem.domains), self.strategy, self.rng)
            chosen_keys = {c.key for c in chosen}
            for c in survivors:
                if c.key not in chosen_keys:
                    inhibited[c.key] = "arbitration"
            enabled.extend(chosen)
        kept = enforce_global(seq, sorted(enabled, key=lambda c: c.key), self.problem)
        kept_keys = {c.key for c in kept}
        for c in enabled:
            if c.key not in kept_keys:
                inhibited[c.key] = "global"
        result = commit_step(seq, self.problem, proposals, kept, inhibited)
        result.conflicts = conflicts
        result.decisions = decisions
        result.negotiation = negotiation
        return result
