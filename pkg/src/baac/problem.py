"""The multi-agent planning problem: fluent universe and action lookup.

Besides declared actions, every agent implicitly owns ``nop`` and one
synthetic help action per (request axiom of another agent, own help axiom)
pair it can serve. Help actions are named ``help.<requester>.<r>.<h>`` where
``r`` indexes the requester's request axioms and ``h`` the helper's help
axioms.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .lang.ast import TRUE, all_fluent_names, conj, shift
from .lang.theory import AgentTheory, GlobalConstraint, RequestAxiom

NOP = "nop"


class State(dict):
    """Immutable, hashable total valuation ``fluent -> int``."""

    __slots__ = ("_hash",)

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash(frozenset(self.items()))
            object.__setattr__(self, "_hash", h)
            return h

    def _readonly(self, *args, **kwargs):
        raise TypeError("State is immutable")

    __setitem__ = __delitem__ = update = pop = popitem = clear = setdefault = _readonly

    def __reduce__(self):
        return (State, (dict(self),))

    def replace(self, changes):
        merged = dict(self)
        merged.update(changes)
        return State(merged)

    def project(self, names):
        return State({n: self[n] for n in names})


@dataclass(frozen=True)
class ActionSpec:
    """Executability conditions (disjunctive) and (effect, precondition) laws."""

    agent: str
    name: str
    exec_conds: Tuple = (TRUE,)
    laws: Tuple = ()


@dataclass(frozen=True)
class SynthAction:
    """A helper's derived action for serving one request."""

    helper: str
    requester: str
    request_index: int
    help_index: int
    exec_cond: object
    effect: object

    @property
    def name(self):
        return help_action_name(self.requester, self.request_index, self.help_index)

    def spec(self):
        return ActionSpec(self.helper, self.name, (self.exec_cond,), ((self.effect, TRUE),))


def help_action_name(requester, request_index, help_index):
    return f"help.{requester}.{request_index}.{help_index}"


def parse_help_action_name(name):
    parts = name.split(".")
    if len(parts) != 4 or parts[0] != "help":
        return None
    try:
        return parts[1], int(parts[2]), int(parts[3])
    except ValueError:
        return None


def request_effect(request: RequestAxiom):
    return request.c1 if request.offer is None else conj(request.c1, request.offer)


def can_serve(helper: AgentTheory, requester: str, request: RequestAxiom):
    """Whether ``helper`` may answer ``request`` at all (ignoring state)."""
    if helper.name == requester:
        return False
    if request.target is not None and request.target != helper.name:
        return False
    known = set(helper.fluent_names)
    needed = set(all_fluent_names(request_effect(request))) | set(all_fluent_names(request.c2))
    return needed <= known


def synthesize_help_actions(helper: AgentTheory, requester: str, request_index: int,
                            request: RequestAxiom) -> List[SynthAction]:
    """One derived action per help axiom of ``helper`` that serves ``requester``.

    Executable when the help condition holds and the request's trigger held
    one step earlier; its effect is the requested condition plus any offer.
    """
    if not can_serve(helper, requester, request):
        return []
    out = []
    for h, ax in enumerate(helper.helps):
        if ax.serves(requester):
            out.append(SynthAction(
                helper.name, requester, request_index, h,
                conj(ax.cond, shift(request.c2, -1)),
                request_effect(request),
            ))
    return out


class Problem:
    """All agents' theories plus the shared fluent universe."""

    def __init__(self, theories: Sequence[AgentTheory]):
        self.theories: Dict[str, AgentTheory] = {}
        for t in theories:
            if t.name in self.theories:
                raise ValueError(f"duplicate agent {t.name}")
            self.theories[t.name] = t
        self.domains: Dict[str, Tuple[int, ...]] = {}
        for t in theories:
            for d in t.fluents:
                prev = self.domains.setdefault(d.name, d.domain)
                if prev != d.domain:
                    raise ValueError(f"fluent {d.name} declared with different domains")
        self.order = tuple(self.domains)
        seen, globals_ = set(), []
        for t in theories:
            for g in t.global_constraints:
                if g not in seen:
                    seen.add(g)
                    globals_.append(g)
        self.global_constraints: Tuple[GlobalConstraint, ...] = tuple(globals_)

    @property
    def agents(self):
        return tuple(self.theories)

    def theory(self, agent) -> AgentTheory:
        return self.theories[agent]

    def priority(self, agent):
        return self.theories[agent].priority

    def action_spec(self, agent, name) -> Optional[ActionSpec]:
        theory = self.theories.get(agent)
        if theory is None:
            return None
        return action_spec(theory, name, self.theories)


def action_spec(theory: AgentTheory, name, others=None) -> Optional[ActionSpec]:
    """Resolve an action owned by ``theory``; ``others`` maps agent names to theories."""
    if name == NOP:
        return ActionSpec(theory.name, NOP)
    if theory.action(name) is not None:
        return ActionSpec(
            theory.name, name, theory.exec_conditions(name),
            tuple((law.eff, law.prec) for law in theory.laws_for(name)),
        )
    parsed = parse_help_action_name(name)
    if parsed is None or not others:
        return None
    requester, r, h = parsed
    req_theory = others.get(requester)
    if req_theory is None or not 0 <= r < len(req_theory.requests) or not 0 <= h < len(theory.helps):
        return None
    for synth in synthesize_help_actions(theory, requester, r, req_theory.requests[r]):
        if synth.help_index == h:
            return synth.spec()
    return None
