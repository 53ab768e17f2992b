"""Axiom records making up one agent's action theory."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

from .ast import TRUE, Constraint

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class FluentDecl:
    name: str
    domain: Sequence[int]  # a range for intervals, a sorted tuple otherwise
    interval: bool = True

    def __post_init__(self):
        if not self.domain:
            raise ValueError(f"fluent {self.name}: empty domain")
        if self.domain[0] < INT64_MIN or self.domain[-1] > INT64_MAX:
            raise ValueError(f"fluent {self.name}: value outside signed 64-bit range")

    @property
    def lo(self):
        return self.domain[0]

    @property
    def hi(self):
        return self.domain[-1]

    def domain_text(self):
        if self.interval:
            return f"{self.lo}..{self.hi}"
        return "[" + ", ".join(map(str, self.domain)) + "]"


@dataclass(frozen=True)
class ConflictOption:
    """``forego``, ``retry_after T`` or ``arbitrate``, gated by ``provided C``."""

    kind: str
    steps: Optional[int] = None
    cond: Constraint = TRUE

    def __str__(self):
        head = f"retry_after {self.steps}" if self.kind == "retry_after" else self.kind
        if self.cond != TRUE:
            head += f" provided {self.cond}"
        return "on_conflict " + head


@dataclass(frozen=True)
class FailureOption:
    """``retry_after T``, ``replan [add_goal C2]`` or ``fail``, gated by ``if C``."""

    kind: str
    steps: Optional[int] = None
    cond: Constraint = TRUE
    add_goal: Optional[Constraint] = None

    def __str__(self):
        head = f"retry_after {self.steps}" if self.kind == "retry_after" else self.kind
        if self.cond != TRUE:
            head += f" if {self.cond}"
        if self.add_goal is not None:
            head += f" add_goal {self.add_goal}"
        return "on_failure " + head


@dataclass(frozen=True)
class ActionDecl:
    name: str
    on_conflict: Tuple[ConflictOption, ...] = ()
    on_failure: Tuple[FailureOption, ...] = ()


@dataclass(frozen=True)
class ExecAxiom:
    action: str
    cond: Constraint


@dataclass(frozen=True)
class DynamicLaw:
    action: str
    eff: Constraint
    prec: Constraint = TRUE


@dataclass(frozen=True)
class RequestAxiom:
    c1: Constraint
    c2: Constraint
    target: Optional[str] = None
    offer: Optional[Constraint] = None


@dataclass(frozen=True)
class HelpAxiom:
    donors: Tuple[str, ...]
    cond: Constraint = TRUE

    @property
    def helps_all(self):
        return self.donors == ("all",)

    def serves(self, agent):
        return self.helps_all or agent in self.donors


@dataclass(frozen=True)
class GlobalConstraint:
    """``always C`` when ``at`` is None, otherwise ``C holds_at at``."""

    cond: Constraint
    at: Optional[int] = None

    def applies_at(self, i):
        return self.at is None or self.at == i


@dataclass(frozen=True)
class AgentTheory:
    name: str
    priority: int = 0
    known_agents: Tuple[str, ...] = ()
    fluents: Tuple[FluentDecl, ...] = ()
    actions: Tuple[ActionDecl, ...] = ()
    executability: Tuple[ExecAxiom, ...] = ()
    laws: Tuple[DynamicLaw, ...] = ()
    requests: Tuple[RequestAxiom, ...] = ()
    helps: Tuple[HelpAxiom, ...] = ()
    goals: Tuple[Constraint, ...] = ()
    initially: Tuple[Constraint, ...] = ()
    global_constraints: Tuple[GlobalConstraint, ...] = ()
    _index: Dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        index = {
            "fluents": {d.name: d for d in self.fluents},
            "actions": {a.name: a for a in self.actions},
            "exec": {},
            "laws": {},
        }
        for ax in self.executability:
            index["exec"].setdefault(ax.action, []).append(ax.cond)
        for law in self.laws:
            index["laws"].setdefault(law.action, []).append(law)
        object.__setattr__(self, "_index", index)

    @property
    def fluent_names(self):
        return tuple(d.name for d in self.fluents)

    @property
    def domains(self):
        return {d.name: d.domain for d in self.fluents}

    @property
    def action_names(self):
        return tuple(a.name for a in self.actions)

    def fluent(self, name):
        return self._index["fluents"].get(name)

    def action(self, name):
        return self._index["actions"].get(name)

    def exec_conditions(self, action):
        return tuple(self._index["exec"].get(action, ()))

    def laws_for(self, action):
        return tuple(self._index["laws"].get(action, ()))

    def to_text(self):
        from .printer import theory_to_text

        return theory_to_text(self)
