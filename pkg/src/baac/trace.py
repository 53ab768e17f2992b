"""Line-oriented, tab-separated run log.

Header records (``HEADER``, ``SETTING``, ``AGENT``, ``RENDER``, ``INIT``)
are followed by one block per step opened by ``STEP i``; the block holds
``TUPLE``, ``PROPOSE``, ``CONFLICT``, ``NEGOTIATE``, ``ENABLE``, ``INHIBIT``,
``STATE-DIFF`` and ``OUTCOME`` records. ``GOAL`` verdicts close the file.
The ``INIT`` state plus the ``STATE-DIFF`` stream rebuild every state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .problem import State

FORMAT_VERSION = "1"


def _fmt_actions(names):
    return ",".join(sorted(names)) if names else "-"


def _fmt_state(state, order):
    return ",".join(f"{f}={state[f]}" for f in order)


class TraceWriter:
    def __init__(self):
        self.lines: List[str] = []

    def emit(self, *fields):
        self.lines.append("\t".join(str(f) for f in fields))

    def header(self, settings: Dict[str, object], agents, render_lines=(), init=None, order=()):
        self.emit("HEADER", "baac-trace", FORMAT_VERSION)
        for k, v in settings.items():
            self.emit("SETTING", k, v)
        for name, priority, fluent_names in agents:
            self.emit("AGENT", name, priority, ",".join(fluent_names))
        for key, value in render_lines:
            self.emit("RENDER", key, value)
        if init is not None:
            self.emit("INIT", _fmt_state(init, order))

    def step(self, i):
        self.emit("STEP", i)

    def tuple_event(self, op, message):
        self.emit("TUPLE", op, message)

    def propose(self, agent, actions):
        self.emit("PROPOSE", agent, _fmt_actions(actions))

    def conflict(self, keys):
        self.emit("CONFLICT", ",".join(f"{a}:{x}" for a, x in keys))

    def negotiate(self, agent, action, option, applied):
        self.emit("NEGOTIATE", agent, action, option, "applied" if applied else "skipped")

    def enable(self, agent, action):
        self.emit("ENABLE", agent, action)

    def inhibit(self, agent, action, reason):
        self.emit("INHIBIT", agent, action, reason)

    def diff(self, fluent, old, new):
        self.emit("STATE-DIFF", fluent, old, new)

    def outcome(self, agent, outcome):
        self.emit("OUTCOME", agent, outcome)

    def goal(self, agent, verdict):
        self.emit("GOAL", agent, verdict)

    def text(self):
        return "\n".join(self.lines) + "\n"


@dataclass
class TraceData:
    settings: Dict[str, str] = field(default_factory=dict)
    agents: List[Tuple[str, int, Tuple[str, ...]]] = field(default_factory=list)
    render: List[Tuple[str, str]] = field(default_factory=list)
    init: Optional[State] = None
    order: Tuple[str, ...] = ()
    steps: List[dict] = field(default_factory=list)
    goals: Dict[str, str] = field(default_factory=dict)

    def states(self) -> List[State]:
        """All states, rebuilt from ``INIT`` and the diffs."""
        if self.init is None:
            return []
        out = [self.init]
        for st in self.steps:
            out.append(out[-1].replace({f: new for f, _old, new in st["diffs"]}))
        return out

    def action_sets(self):
        return [frozenset(st["enabled"]) for st in self.steps]


class TraceError(ValueError):
    pass


def _parse_state(text):
    if not text or text == "-":
        return {}
    out = {}
    for item in text.split(","):
        k, _, v = item.partition("=")
        out[k.strip()] = int(v)
    return out


def parse_trace(text: str) -> TraceData:
    data = TraceData()
    cur = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        kind = parts[0]
        try:
            if kind == "HEADER":
                if len(parts) < 2 or parts[1] != "baac-trace":
                    raise TraceError("not a trace file")
            elif kind == "SETTING":
                data.settings[parts[1]] = parts[2]
            elif kind == "AGENT":
                names = tuple(n for n in parts[3].split(",") if n) if len(parts) > 3 else ()
                data.agents.append((parts[1], int(parts[2]), names))
            elif kind == "RENDER":
                data.render.append((parts[1], parts[2]))
            elif kind == "INIT":
                st = _parse_state(parts[1] if len(parts) > 1 else "")
                data.init = State(st)
                data.order = tuple(st)
            elif kind == "STEP":
                cur = {"index": int(parts[1]), "enabled": [], "diffs": [], "inhibited": [], "outcomes": {}}
                data.steps.append(cur)
            elif kind == "ENABLE":
                cur["enabled"].append((parts[1], parts[2]))
            elif kind == "INHIBIT":
                cur["inhibited"].append((parts[1], parts[2], parts[3]))
            elif kind == "STATE-DIFF":
                cur["diffs"].append((parts[1], int(parts[2]), int(parts[3])))
            elif kind == "OUTCOME":
                cur["outcomes"][parts[1]] = parts[2]
            elif kind == "GOAL":
                data.goals[parts[1]] = parts[2]
            elif kind in ("TUPLE", "PROPOSE", "CONFLICT", "NEGOTIATE"):
                if cur is None:
                    raise TraceError(f"{kind} outside a step")
            else:
                raise TraceError(f"unknown record {kind!r}")
        except (IndexError, ValueError, TypeError) as exc:
            if isinstance(exc, TraceError):
                raise TraceError(f"line {lineno}: {exc}") from None
            raise TraceError(f"line {lineno}: malformed {kind} record") from None
    return data


def load_trace(path) -> TraceData:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh.read())
