"""Reference semantics over state sequences.

A state sequence is any sequence of mappings ``fluent -> int``; index ``j``
of the sequence is time ``j``. Everything here is a pure function of its
arguments.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from .lang.ast import (
    TRUE, Abs, And, BinOp, Bool, Cmp, Fluent, Neg, Not, Num, Or, Rei,
    conj, conjuncts, fluents, is_basic,
)
from .problem import NOP, ActionSpec, Problem, State, action_spec

log = logging.getLogger(__name__)

Action = Tuple[str, str]  # (agent, action name)


class EvalError(ArithmeticError):
    pass


class SearchSpaceTooLarge(RuntimeError):
    pass


def _div(a, b):
    if b == 0:
        raise EvalError("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _mod(a, b):
    return a - b * _div(a, b)


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "mod": _mod,
}

_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<=": lambda a, b: a <= b,
    "<": lambda a, b: a < b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


def eval_expr(seq: Sequence[Mapping[str, int]], j: int, e) -> int:
    """Value of ``e`` at time ``j``; references before time 0 clamp to ``v_0``."""
    t = type(e)
    if t is Num:
        return e.value
    if t is Fluent:
        k = j + e.t
        return seq[k if k >= 0 else 0][e.name]
    if t is BinOp:
        return _ARITH[e.op](eval_expr(seq, j, e.left), eval_expr(seq, j, e.right))
    if t is Neg:
        return -eval_expr(seq, j, e.arg)
    if t is Abs:
        return abs(eval_expr(seq, j, e.arg))
    if t is Rei:
        return 1 if holds(seq, j, e.cond) else 0
    raise TypeError(f"not an expression: {e!r}")


def holds(seq: Sequence[Mapping[str, int]], j: int, c) -> bool:
    """Satisfaction of ``c`` at time ``j``.

    A comparison whose evaluation divides by zero is unsatisfied.
    """
    t = type(c)
    if t is Cmp:
        try:
            return _CMP[c.op](eval_expr(seq, j, c.left), eval_expr(seq, j, c.right))
        except EvalError:
            log.info("division by zero in %s at time %d; treated as unsatisfied", c, j)
            return False
    if t is And:
        for x in c.items:
            if not holds(seq, j, x):
                return False
        return True
    if t is Or:
        for x in c.items:
            if holds(seq, j, x):
                return True
        return False
    if t is Not:
        return not holds(seq, j, c.arg)
    if t is Bool:
        return c.value
    raise TypeError(f"not a constraint: {c!r}")


# -- v-solutions ----------------------------------------------------------------

def _ordered_vars(c, domains):
    names = set(fluents(c))
    missing = names - set(domains)
    if missing:
        raise KeyError(f"undeclared fluents {sorted(missing)}")
    return [f for f in domains if f in names]


def _bound(ext, j, part, var):
    """``(op, k)`` when ``part`` compares ``var`` itself with a var-free side."""
    if type(part) is not Cmp:
        return None
    left, right, op = part.left, part.right, part.op
    if type(right) is Fluent and right.t == 0 and right.name == var:
        left, right = right, left
        op = _FLIP[op]
    if type(left) is Fluent and left.t == 0 and left.name == var and not fluents(right):
        try:
            return op, eval_expr(ext, j, right)
        except EvalError:
            return op, None
    return None


_FLIP = {"=": "=", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}


def _filter_unary(ext, j, part, var, dom, sigma):
    bound = _bound(ext, j, part, var)
    if bound is not None:
        op, k = bound
        if k is None:
            return []
        if op == "=":
            return (k,) if k in dom else ()
        test = _CMP[op]
        return [v for v in dom if test(v, k)]
    out = []
    for v in dom:
        sigma[var] = v
        if holds(ext, j, part):
            out.append(v)
    sigma.pop(var, None)
    return out


def forced_assignment(seq, c, domains):
    """The only v-solution of ``c`` when every conjunct is ``f = E`` with ``E`` over the past.

    Returns None when ``c`` has another shape (use ``iter_solutions``) and
    False when the conjuncts contradict each other or leave a domain.
    """
    out: Dict[str, int] = {}
    ext = list(seq) + [out]
    j = len(seq)
    for part in conjuncts(c):
        if not is_basic(part) or fluents(part.right):
            return None
        try:
            v = eval_expr(ext, j, part.right)
        except EvalError:
            return False
        name = part.left.name
        if out.get(name, v) != v or v not in domains[name]:
            return False
        out[name] = v
    return out


def iter_solutions(seq, c, domains: Mapping[str, Sequence[int]]):
    """All v-solutions of ``c`` in lexicographic order (depth-first search).

    Variables are the timeless fluents of ``c`` in ``domains`` order, values
    ascending. A basic conjunct ``f = E`` whose right side only mentions
    earlier variables fixes ``f`` outright; every other conjunct is checked
    as soon as its last variable is bound.
    """
    order = _ordered_vars(c, domains)
    if not order:
        if holds(list(seq) + [{}], len(seq), c):
            yield {}
        return
    pos = {f: k for k, f in enumerate(order)}
    parts = conjuncts(c) or (TRUE,)
    sigma: Dict[str, int] = {}
    ext = list(seq) + [sigma]
    j = len(seq)
    doms = [domains[f] for f in order]
    checks = [[] for _ in order]
    forcing = [[] for _ in order]
    for part in parts:
        vs = fluents(part)
        if not vs:
            if not holds(ext, j, part):
                return
            continue
        if len(vs) == 1:
            # node consistency: prune the single variable's domain up front
            k = pos[vs[0]]
            doms[k] = _filter_unary(ext, j, part, vs[0], doms[k], sigma)
            if not doms[k]:
                return
            continue
        last = max(pos[v] for v in vs)
        checks[last].append(part)
        if is_basic(part):
            k = pos[part.left.name]
            rhs = fluents(part.right)
            if all(pos[v] < k for v in rhs):
                forcing[k].append(part.right)
    domsets = [d if isinstance(d, range) else frozenset(d) for d in doms]

    def dfs(k):
        if k == len(order):
            yield dict(sigma)
            return
        var = order[k]
        if forcing[k]:
            try:
                v = eval_expr(ext, j, forcing[k][0])
            except EvalError:
                return
            candidates = (v,) if v in domsets[k] else ()
        else:
            candidates = doms[k]
        for v in candidates:
            sigma[var] = v
            if all(holds(ext, j, part) for part in checks[k]):
                yield from dfs(k + 1)
        sigma.pop(var, None)

    yield from dfs(0)


def solve_effects(seq, c, domains: Mapping[str, Sequence[int]], accept=None) -> Optional[Dict[str, int]]:
    """Lexicographically smallest v-solution of ``c``, or None when unsatisfiable.

    ``accept`` optionally filters candidate solutions (e.g. global constraints
    on the completed state).
    """
    for sigma in iter_solutions(seq, c, domains):
        if accept is None or accept(sigma):
            return sigma
    return None


def inertial_complete(sigma: Mapping[str, int], seq) -> State:
    last = seq[-1]
    if not sigma:
        return last if isinstance(last, State) else State(last)
    merged = dict(last)
    merged.update(sigma)
    return State(merged)


# -- actions ------------------------------------------------------------------

def _spec(theory_or_spec, action, others=None) -> ActionSpec:
    if isinstance(theory_or_spec, ActionSpec):
        return theory_or_spec
    spec = action_spec(theory_or_spec, action, others)
    if spec is None:
        raise KeyError(f"{theory_or_spec.name} has no action {action}")
    return spec


def executable_in(theory, seq, action, others=None) -> bool:
    """True iff some executability condition of ``action`` holds at the last index."""
    spec = _spec(theory, action, others)
    i = len(seq) - 1
    return any(holds(seq, i, c) for c in spec.exec_conds)


def desired_effects(theory, seq, action, others=None):
    """Conjunction of the effects of every law of ``action`` whose precondition holds now."""
    spec = _spec(theory, action, others)
    i = len(seq) - 1
    return conj(*(eff for eff, prec in spec.laws if holds(seq, i, prec)))


def joint_effects(problem: Problem, seq, actions) -> object:
    effs = []
    for agent, name in sorted(actions):
        spec = problem.action_spec(agent, name)
        if spec is None:
            raise KeyError(f"unknown action {agent}:{name}")
        effs.append(desired_effects(spec, seq, name))
    return conj(*effs)


def globals_accept(seq, constraints, i_next):
    """Filter accepting a v-solution whose inertial completion meets the global constraints."""
    active = [g.cond for g in constraints if g.applies_at(i_next)]
    if not active:
        return None

    def accept(sigma):
        nxt = inertial_complete(sigma, seq)
        ext = list(seq) + [nxt]
        return all(holds(ext, i_next, c) for c in active)

    return accept


def apply_transition(seq, actions, problem: Problem, enforce_globals=False) -> Optional[State]:
    """Next state after jointly executing ``actions``, or None when their effects clash.

    Every action must already be executable; the empty set leaves the state
    unchanged.
    """
    if not actions:
        nxt = inertial_complete({}, seq)
        if enforce_globals:
            accept = globals_accept(seq, problem.global_constraints, len(seq))
            if accept is not None and not accept({}):
                return None
        return nxt
    c = joint_effects(problem, seq, actions)
    accept = globals_accept(seq, problem.global_constraints, len(seq)) if enforce_globals else None
    sigma = solve_effects(seq, c, problem.domains, accept)
    if sigma is None:
        return None
    return inertial_complete(sigma, seq)


# -- trajectories -------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """Alternating states and action sets ``v0, X1, v1, ..., XN, vN``."""

    states: Tuple[State, ...]
    actions: Tuple[FrozenSet[Action], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(s if isinstance(s, State) else State(s) for s in self.states))
        object.__setattr__(self, "actions", tuple(frozenset(x) for x in self.actions))

    @property
    def horizon(self):
        return len(self.actions)


@dataclass(frozen=True)
class Violation:
    step: int
    kind: str
    detail: str

    def __str__(self):
        return f"step {self.step}: {self.kind}: {self.detail}"


@dataclass
class Report:
    violations: List[Violation] = field(default_factory=list)
    success: Dict[str, bool] = field(default_factory=dict)

    @property
    def valid(self):
        return not self.violations

    def lines(self):
        if self.valid:
            yield "valid"
        else:
            yield from (str(v) for v in self.violations)
        for agent, ok in self.success.items():
            yield f"goal {agent}: {'success' if ok else 'failure'}"


def check_trajectory(problem: Problem, traj: Trajectory, N: int) -> Report:
    """Independent validity check of a trajectory, plus per-agent goal verdicts at ``N``."""
    rep = Report()
    bad = rep.violations.append
    if len(traj.states) != N + 1 or len(traj.actions) != N:
        bad(Violation(0, "length", f"expected {N} steps, got {len(traj.actions)} action sets and {len(traj.states)} states"))
        return rep
    for i, st in enumerate(traj.states):
        for f, dom in problem.domains.items():
            if f not in st:
                bad(Violation(i, "domain", f"{f} missing"))
            elif st[f] not in dom:
                bad(Violation(i, "domain", f"{f}={st[f]} outside its domain"))
        extra = set(st) - set(problem.domains)
        if extra:
            bad(Violation(i, "domain", f"undeclared fluents {sorted(extra)}"))
    if rep.violations:
        return rep
    seq = traj.states
    for t in problem.theories.values():
        for c in t.initially:
            if not holds(seq[:1], 0, c):
                bad(Violation(0, "initial", f"{t.name}: initially {c} violated"))
    for i, xs in enumerate(traj.actions):
        prefix = seq[: i + 1]
        nxt = seq[i + 1]
        effs = []
        ok = True
        for agent, name in sorted(xs):
            spec = problem.action_spec(agent, name)
            if spec is None:
                bad(Violation(i + 1, "unknown_action", f"{agent}:{name}"))
                ok = False
                continue
            if not any(holds(prefix, i, c) for c in spec.exec_conds):
                bad(Violation(i + 1, "not_executable", f"{agent}:{name}"))
                ok = False
            effs.append(desired_effects(spec, prefix, name))
        if not ok:
            continue
        c = conj(*effs)
        touched = set(fluents(c))
        for f in problem.order:
            if f not in touched and nxt[f] != prefix[-1][f]:
                bad(Violation(i + 1, "inertia", f"{f} changed {prefix[-1][f]} -> {nxt[f]} without a cause"))
        if not holds(seq[: i + 2], i + 1, c):
            bad(Violation(i + 1, "effect", f"effects {c} not satisfied"))
    for g in problem.global_constraints:
        times = range(N + 1) if g.at is None else ([g.at] if g.at <= N else [])
        for i in times:
            if not holds(seq, i, g.cond):
                what = "always" if g.at is None else f"holds_at {g.at}"
                bad(Violation(i, "global", f"{what} {g.cond} violated"))
    for agent, t in problem.theories.items():
        rep.success[agent] = all(holds(seq, N, c) for c in t.goals)
    return rep


def chain(problem: Problem, init, action_sets) -> Trajectory:
    """Trajectory obtained by applying each action set in turn (raises on a clash)."""
    seq = [init if isinstance(init, State) else State(init)]
    for xs in action_sets:
        nxt = apply_transition(seq, xs, problem)
        if nxt is None:
            raise ValueError(f"action set {sorted(xs)} has no v-solution at step {len(seq)}")
        seq.append(nxt)
    return Trajectory(tuple(seq), tuple(action_sets))


# -- brute-force oracle ---------------------------------------------------------

def _all_solutions_bruteforce(seq, c, domains):
    """Every v-solution by plain enumeration of the cross product (no propagation)."""
    names = [f for f in domains if f in set(fluents(c))]
    j = len(seq)
    for values in itertools.product(*(domains[f] for f in names)):
        sigma = dict(zip(names, values))
        if holds(list(seq) + [sigma], j, c):
            yield sigma


def brute_force_plans(theory, init, N: int, max_set_size: int = 1, node_limit: int = 10**6,
                      smallest_only: bool = False):
    """Every valid single-agent trajectory of length ``N`` that meets the goals at ``N``.

    Each step executes at most ``max_set_size`` actions (the empty set is the
    agent idling). All v-solutions are explored unless ``smallest_only``, in
    which case only the lexicographically smallest one meeting the global
    constraints is followed, as the supervisor would commit it.
    """
    domains = theory.domains
    names = list(theory.action_names)
    init = State(init)
    glob = theory.global_constraints
    nodes = 0
    found = set()

    def globals_ok(seq):
        i = len(seq) - 1
        return all(holds(seq, i, g.cond) for g in glob if g.applies_at(i))

    def rec(seq, acts):
        nonlocal nodes
        nodes += 1
        if nodes > node_limit:
            raise SearchSpaceTooLarge(f"more than {node_limit} nodes")
        if len(acts) == N:
            if all(holds(seq, N, c) for c in theory.goals):
                found.add(Trajectory(tuple(seq), tuple(acts)))
            return
        i = len(seq) - 1
        runnable = [a for a in names if any(holds(seq, i, c) for c in theory.exec_conditions(a))]
        for size in range(0, max_set_size + 1):
            for combo in itertools.combinations(runnable, size):
                effs = conj(*(desired_effects(theory, seq, a) for a in combo))
                for sigma in _all_solutions_bruteforce(seq, effs, domains):
                    nxt = inertial_complete(sigma, seq)
                    ext = list(seq) + [nxt]
                    if globals_ok(ext):
                        rec(ext, acts + [frozenset((theory.name, a) for a in combo)])
                        if smallest_only:
                            break

    start = [init]
    if globals_ok(start):
        rec(start, [])
    return found
