"""Cross-theory consistency checks for a planning problem."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

from .ast import Cmp, Fluent, Num, conjuncts


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    agent: str
    message: str

    def __str__(self):
        return f"{self.severity}: {self.agent}: {self.message}"


def _literal_facts(constraint):
    """``f = n`` conjuncts of a timeless constraint."""
    for c in conjuncts(constraint):
        if isinstance(c, Cmp) and c.op == "=":
            if isinstance(c.left, Fluent) and isinstance(c.right, Num):
                yield c.left.name, c.right.value
            elif isinstance(c.right, Fluent) and isinstance(c.left, Num):
                yield c.right.name, c.left.value


def validate_problem(theories) -> List[Diagnostic]:
    """Diagnostics for a list of parsed theories; no errors means valid."""
    out = []
    names = {}
    for t in theories:
        if t.name in names:
            out.append(Diagnostic("error", t.name, "agent declared by more than one theory"))
        names[t.name] = t

    domains = {}
    for t in theories:
        for d in t.fluents:
            prev = domains.get(d.name)
            if prev is None:
                domains[d.name] = (t.name, d.domain)
            elif prev[1] != d.domain:
                out.append(Diagnostic(
                    "error", t.name,
                    f"fluent {d.name} domain {d.domain_text()} differs from agent {prev[0]}'s",
                ))

    facts = {}
    for t in theories:
        for c in t.initially:
            for f, v in _literal_facts(c):
                prev = facts.get(f)
                if prev is not None and prev[1] != v:
                    out.append(Diagnostic(
                        "error", t.name,
                        f"initial value {f}={v} contradicts {f}={prev[1]} from {prev[0]}",
                    ))
                elif prev is None:
                    facts[f] = (t.name, v)
                dom = domains.get(f)
                if dom is not None and v not in dom[1]:
                    out.append(Diagnostic("error", t.name, f"initial value {f}={v} outside its domain"))

    for t in theories:
        for r in t.requests:
            if r.target is not None and r.target not in names:
                out.append(Diagnostic(
                    "warning", t.name,
                    f"request target {r.target} has no theory; the request will never be answered",
                ))
        for a in t.known_agents:
            if a not in names:
                out.append(Diagnostic("warning", t.name, f"known agent {a} has no theory"))
    return out
