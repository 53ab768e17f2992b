"""Bounded-horizon local planner.

An agent plans against its own theory only: fluents it does not declare are
invisible, and every fluent not changed by its own actions keeps its value.
The search is depth-first over the remaining steps. At every node it first
asks whether idling until the horizon already meets all goals; otherwise it
tries the consistent action sets executable there (smallest sets first, the
empty set last, ties by declaration order). Failed ``(time, recent states)``
nodes are memoised, so the search is exhaustive yet visits each situation
once.

Requests of the planning agent may be modelled optimistically: an
``await.<r>`` pseudo action stands for another agent serving request ``r``.
It is never proposed for execution.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .lang.ast import TRUE, conj, lookback, shift
from .problem import (
    ActionSpec, State, SynthAction, request_effect, synthesize_help_actions,
)
from .semantics import forced_assignment, globals_accept, holds, inertial_complete, iter_solutions

__all__ = [
    "HelpObligation", "NoPlan", "PendingRequest", "Plan", "Planner",
    "SearchBudgetExceeded", "evaluate_request", "plan", "replan",
    "synthesize_help_action",
]

log = logging.getLogger(__name__)

AWAIT_PREFIX = "await."


class SearchBudgetExceeded(RuntimeError):
    """The node budget ran out before the search was exhausted."""


class NoPlan(LookupError):
    pass


@dataclass(frozen=True)
class Plan:
    agent: str
    start: int
    steps: Tuple[FrozenSet[str], ...]
    states: Tuple[State, ...]

    @property
    def horizon(self):
        return self.start + len(self.steps)

    def next_actions(self) -> FrozenSet[str]:
        return self.steps[0] if self.steps else frozenset()

    def executable_actions(self, k=0) -> FrozenSet[str]:
        """Step ``k`` without pseudo actions."""
        if k >= len(self.steps):
            return frozenset()
        return frozenset(a for a in self.steps[k] if not a.startswith(AWAIT_PREFIX))

    def advance(self) -> "Plan":
        return Plan(self.agent, self.start + 1, self.steps[1:], self.states[1:])

    def expected_state(self, k=1) -> State:
        return self.states[k]


@dataclass(frozen=True)
class PendingRequest:
    req_id: str
    requester: str
    index: int
    axiom: object
    posted_at: int
    requester_priority: int = 0


@dataclass(frozen=True)
class HelpObligation:
    constraint: object
    due: int
    requester: str
    req_id: str
    offer: object = None
    actions: Tuple[SynthAction, ...] = ()


def synthesize_help_action(request, help_axiom, helper="helper", requester="requester", index=0, help_index=0):
    """Derived help action for a single (request, help axiom) pair."""
    return SynthAction(
        helper, requester, index, help_index,
        conj(help_axiom.cond, shift(request.c2, -1)),
        request_effect(request),
    )


@dataclass
class _Ctx:
    seq: List[State]
    horizon: int
    specs: List[ActionSpec]
    goals_at: Dict[int, List[object]]
    globals_: List[object]
    window: int
    failed: dict = field(default_factory=dict)
    # True when failing from a window at time t implies failing at any later t
    monotone: bool = False
    moves: dict = field(default_factory=dict)
    nodes: int = 0


class Planner:
    """Planner for one agent; not reentrant, keep one per agent."""

    def __init__(self, theory, node_budget=200_000, max_set_size=None, expect_help=True):
        self.theory = theory
        self.node_budget = node_budget
        self.max_set_size = max_set_size
        self.expect_help = expect_help
        self.last_nodes = 0

    # -- action model ---------------------------------------------------------

    def _specs(self, synth=()):
        t = self.theory
        specs = [
            ActionSpec(t.name, a, t.exec_conditions(a), tuple((l.eff, l.prec) for l in t.laws_for(a)))
            for a in t.action_names
        ]
        specs.extend(s.spec() for s in synth)
        if self.expect_help:
            for r, req in enumerate(t.requests):
                specs.append(ActionSpec(
                    t.name, f"{AWAIT_PREFIX}{r}", (shift(req.c2, -1),),
                    ((request_effect(req), TRUE),),
                ))
        return specs

    def _window(self, specs, constraints):
        lb = 0
        for s in specs:
            for c in s.exec_conds:
                lb = max(lb, lookback(c))
            for eff, prec in s.laws:
                lb = max(lb, lookback(prec), lookback(eff) - 1)
        for c in constraints:
            lb = max(lb, lookback(c))
        return lb + 1

    # -- search -----------------------------------------------------------------

    def plan(self, seq: Sequence, horizon: int, extra_goals=(), synth=()) -> Optional[Plan]:
        """Plan from the end of ``seq`` up to absolute time ``horizon``.

        ``extra_goals`` holds ``(constraint, time)`` pairs; a time of None means
        the horizon. Returns None when no plan exists.
        """
        names = self.theory.fluent_names
        local = [State({f: s[f] for f in names}) for s in seq]
        start = len(local) - 1
        if start > horizon:
            raise ValueError("sequence already past the horizon")
        goals_at: Dict[int, List[object]] = {horizon: list(self.theory.goals)}
        for c, t in extra_goals:
            t = horizon if t is None else t
            if t <= start or t > horizon:
                continue
            goals_at.setdefault(t, []).append(c)
        globals_ = list(self.theory.global_constraints)
        specs = self._specs(synth)
        constraints = [c for cs in goals_at.values() for c in cs] + [g.cond for g in globals_]
        ctx = _Ctx(local, horizon, specs, goals_at, globals_, self._window(specs, constraints))
        # idling preserves state-only goals and globals, so a longer remaining
        # horizon can never hurt
        ctx.monotone = (
            set(goals_at) == {horizon}
            and all(g.at is None for g in globals_)
            and all(lookback(c) == 0 for c in constraints)
        )
        steps: List[FrozenSet[str]] = []
        try:
            found = self._dfs(ctx, steps)
        finally:
            self.last_nodes = ctx.nodes
        if not found:
            return None
        while len(steps) < horizon - start:
            steps.append(frozenset())
            ctx.seq.append(ctx.seq[-1])
        return Plan(self.theory.name, start, tuple(steps), tuple(ctx.seq[start:]))

    def _check_at(self, ctx, seq, t):
        for g in ctx.globals_:
            if g.applies_at(t) and not holds(seq, t, g.cond):
                return False
        return all(holds(seq, t, c) for c in ctx.goals_at.get(t, ()))

    def _idle_succeeds(self, ctx):
        seq = ctx.seq
        if ctx.monotone:
            # state-only goals and globals: the current state decides
            last = [seq[-1]]
            return all(holds(last, 0, c) for c in ctx.goals_at[ctx.horizon])
        t0 = len(seq) - 1
        last = seq[-1]
        ext = list(seq)
        for t in range(t0 + 1, ctx.horizon + 1):
            ext.append(last)
            if not self._check_at(ctx, ext, t):
                return False
        return True

    def _key(self, ctx):
        return (len(ctx.seq) - 1, tuple(ctx.seq[-ctx.window:]))

    def _dfs(self, ctx, steps) -> bool:
        ctx.nodes += 1
        if ctx.nodes > self.node_budget:
            raise SearchBudgetExceeded(f"{self.theory.name}: more than {self.node_budget} nodes")
        t = len(ctx.seq) - 1
        if self._idle_succeeds(ctx):
            return True
        if t >= ctx.horizon:
            return False
        key = self._key(ctx)
        seen = ctx.failed.get(key[1] if ctx.monotone else key)
        if seen is not None and t >= seen:
            return False
        # transitions depend only on the window and on which globals apply next
        mkey = (key[1], tuple(g.applies_at(t + 1) for g in ctx.globals_))
        moves = ctx.moves.get(mkey)
        if moves is None:
            moves = ctx.moves[mkey] = _Lazy(self._successors(ctx))
        for names, nxt in moves:
            ctx.seq.append(nxt)
            steps.append(names)
            if self._check_at(ctx, ctx.seq, t + 1) and self._dfs(ctx, steps):
                return True
            ctx.seq.pop()
            steps.pop()
        fkey = key[1] if ctx.monotone else key
        ctx.failed[fkey] = min(t, ctx.failed.get(fkey, t))
        return False

    def _successors(self, ctx):
        """(action-name set, next state) pairs in search order; the empty set comes last."""
        # copy now: the generator may be resumed from a deeper node
        return self._expand(ctx, list(ctx.seq))

    def _expand(self, ctx, seq):
        i = len(seq) - 1
        domains = self.theory.domains
        runnable = []
        for s in ctx.specs:
            if _any_holds(seq, i, s.exec_conds):
                eff = conj(*(e for e, p in s.laws if holds(seq, i, p)))
                runnable.append((s.name, eff, forced_assignment(seq, eff, domains)))
        limit = len(runnable) if self.max_set_size is None else self.max_set_size
        accept = globals_accept(seq, ctx.globals_, len(seq))
        # level k holds the consistent k-subsets in lexicographic index order;
        # sets of actions with forced effects are combined without search
        level = [((), TRUE, {})]
        for _size in range(limit):
            nxt_level = []
            for combo, effs, forced in level:
                for j in range((combo[-1] + 1) if combo else 0, len(runnable)):
                    name, eff, own = runnable[j]
                    if own is False:
                        continue
                    c = conj(effs, eff)
                    if forced is not None and own is not None:
                        merged = _merge(forced, own)
                        if merged is None:
                            continue
                        grown = combo + (j,)
                        nxt_level.append((grown, c, merged))
                        sigma = merged if accept is None or accept(merged) else None
                    else:
                        solutions = iter_solutions(seq, c, domains)
                        first = next(solutions, None)
                        if first is None:
                            continue
                        grown = combo + (j,)
                        nxt_level.append((grown, c, None))
                        sigma = first if accept is None or accept(first) else _first(solutions, accept)
                    if sigma is not None:
                        yield frozenset(runnable[k][0] for k in grown), inertial_complete(sigma, seq)
            if not nxt_level:
                break
            level = nxt_level
        if accept is None or accept({}):
            yield frozenset(), seq[-1]


class _Lazy:
    """Re-iterable view of a generator that computes each item once."""

    def __init__(self, gen):
        self._gen = gen
        self._items = []

    def __iter__(self):
        k = 0
        while True:
            if k < len(self._items):
                yield self._items[k]
            else:
                item = next(self._gen, _DONE)
                if item is _DONE:
                    return
                self._items.append(item)
                yield item
            k += 1


_DONE = object()


def _any_holds(seq, i, conds):
    for c in conds:
        if holds(seq, i, c):
            return True
    return False


def _merge(a, b):
    """Union of two forced assignments, or None when they disagree."""
    for k, v in b.items():
        if a.get(k, v) != v:
            return None
    return {**a, **b}


def _first(solutions, accept):
    for sigma in solutions:
        if accept is None or accept(sigma):
            return sigma
    return None


# -- functional entry points ----------------------------------------------------

def plan(theory, seq, remaining_horizon: int, extra_goals=(), **kwargs) -> Optional[Plan]:
    """Plan for ``remaining_horizon`` steps after the end of ``seq``."""
    planner = Planner(theory, **kwargs)
    return planner.plan(seq, len(seq) - 1 + remaining_horizon, extra_goals)


def replan(theory, seq, remaining_horizon: int, added_goals=(), obligations=(), **kwargs) -> Optional[Plan]:
    """Fresh plan from the current sequence, keeping accumulated goals and obligations."""
    extra = [(g, None) for g in added_goals] + [(o.constraint, o.due) for o in obligations]
    synth = [a for o in obligations for a in o.actions]
    planner = Planner(theory, **kwargs)
    return planner.plan(seq, len(seq) - 1 + remaining_horizon, extra, synth)


def evaluate_request(planner: Planner, seq, request: PendingRequest, i: int, horizon: int,
                     obligations=(), added_goals=()):
    """Decide whether to serve ``request`` at time ``i``.

    Returns ``(accepted, plan, obligation)``. The request is considered only
    if one of the helper's help axioms serves the requester and its
    condition holds at ``i``; it is accepted iff a plan exists that also
    makes the requested condition true at ``i + 1``.
    """
    theory = planner.theory
    gate = [
        h for h in theory.helps
        if h.serves(request.requester) and holds(seq, i, h.cond)
    ]
    if not gate or i + 1 > horizon:
        return False, None, None
    synth = synthesize_help_actions(theory, request.requester, request.index, request.axiom)
    if not synth:
        return False, None, None
    live = [o for o in obligations if o.due > i]
    new = HelpObligation(
        request.axiom.c1, i + 1, request.requester, request.req_id,
        request.axiom.offer, tuple(synth),
    )
    every = live + [new]
    extra = [(g, None) for g in added_goals] + [(o.constraint, o.due) for o in every]
    try:
        found = planner.plan(seq, horizon, extra, [a for o in every for a in o.actions])
    except SearchBudgetExceeded:
        log.info("%s: budget exceeded evaluating %s", theory.name, request.req_id)
        found = None
    if found is None:
        return False, None, None
    return True, found, new
