"""Trajectory fixtures: ``STEP i | ACTIONS agent:action,... | STATE f=v,...``.

Lines starting with ``%`` are comments; ``% settings <path>`` names the
settings file (relative to the fixture) whose theories the trajectory is
checked against.
"""
from __future__ import annotations

import os
from typing import List, Optional, Tuple

from .problem import State
from .semantics import Trajectory


class FixtureError(ValueError):
    pass


def format_fixture(traj: Trajectory, order, settings: Optional[str] = None) -> str:
    lines = []
    if settings:
        lines.append(f"% settings {settings}")
    for i, state in enumerate(traj.states):
        acts = [] if i == 0 else sorted(f"{a}:{x}" for a, x in traj.actions[i - 1])
        st = ",".join(f"{f}={state[f]}" for f in order)
        lines.append(f"STEP {i} | ACTIONS {','.join(acts)} | STATE {st}".replace("ACTIONS  |", "ACTIONS |"))
    return "\n".join(lines) + "\n"


def parse_fixture(text: str) -> Tuple[Trajectory, Optional[str]]:
    """Trajectory and the settings path named in the header, if any."""
    settings = None
    states: List[State] = []
    actions = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("%"):
            body = line[1:].strip()
            if body.startswith("settings "):
                settings = body[len("settings "):].strip()
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) != 3 or not parts[0].startswith("STEP") or not parts[1].startswith("ACTIONS") \
                or not parts[2].startswith("STATE"):
            raise FixtureError(f"line {lineno}: expected 'STEP i | ACTIONS ... | STATE ...'")
        try:
            idx = int(parts[0][4:])
        except ValueError:
            raise FixtureError(f"line {lineno}: bad step index") from None
        if idx != len(states):
            raise FixtureError(f"line {lineno}: step {idx} out of order, expected {len(states)}")
        acts = set()
        for item in parts[1][len("ACTIONS"):].split(","):
            item = item.strip()
            if not item:
                continue
            agent, sep, name = item.partition(":")
            if not sep or not agent or not name:
                raise FixtureError(f"line {lineno}: action {item!r} must be agent:action")
            acts.add((agent, name))
        st = {}
        for item in parts[2][len("STATE"):].split(","):
            item = item.strip()
            if not item:
                continue
            f, sep, v = item.partition("=")
            try:
                st[f.strip()] = int(v)
            except ValueError:
                raise FixtureError(f"line {lineno}: bad value in {item!r}") from None
        if idx == 0:
            if acts:
                raise FixtureError(f"line {lineno}: step 0 cannot carry actions")
        else:
            actions.append(frozenset(acts))
        states.append(State(st))
    if not states:
        raise FixtureError("empty fixture")
    return Trajectory(tuple(states), tuple(actions)), settings


def load_fixture(path):
    """(trajectory, absolute settings path or None)."""
    with open(path, encoding="utf-8") as fh:
        traj, settings = parse_fixture(fh.read())
    if settings is not None:
        settings = os.path.normpath(os.path.join(os.path.dirname(os.path.abspath(path)), settings))
    return traj, settings
