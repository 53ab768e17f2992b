"""Render an AgentTheory back to theory-file syntax."""
from .ast import TRUE


def _axioms(theory):
    yield f"agent {theory.name} priority {theory.priority}."
    if theory.known_agents:
        yield "known_agents " + ", ".join(theory.known_agents) + "."
    for d in theory.fluents:
        yield f"fluent {d.name} valued {d.domain_text()}."
    for a in theory.actions:
        opts = [str(o) for o in a.on_conflict] + [str(o) for o in a.on_failure]
        yield " ".join([f"action {a.name}"] + opts) + "."
    for ax in theory.executability:
        yield f"executable {ax.action} if {ax.cond}."
    for law in theory.laws:
        tail = "" if law.prec == TRUE else f" if {law.prec}"
        yield f"{law.action} causes {law.eff}{tail}."
    for r in theory.requests:
        line = f"request {r.c1}"
        if r.target is not None:
            line += f" to_agent {r.target}"
        line += f" if {r.c2}"
        if r.offer is not None:
            line += f" offering {r.offer}"
        yield line + "."
    for h in theory.helps:
        line = "help " + ", ".join(h.donors)
        if h.cond != TRUE:
            line += f" if {h.cond}"
        yield line + "."
    for g in theory.goals:
        yield f"goal {g}."
    for c in theory.initially:
        yield f"initially {c}."
    for g in theory.global_constraints:
        yield f"always {g.cond}." if g.at is None else f"({g.cond}) holds_at {g.at}."


def theory_to_text(theory):
    return "\n".join(_axioms(theory)) + "\n"
