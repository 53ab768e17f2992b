"""ASCII frames for grid domains.

The field is drawn inside a ``*`` border with ``|`` marking the net column;
the top row is the largest y. Each piece has a glyph and a glyph used while
it holds the ball; the ball itself is drawn only where nobody stands.
"""
from __future__ import annotations

import logging
from typing import List

from .lang.settings import Piece, RenderHints

log = logging.getLogger(__name__)


def render_frame(state, hints: RenderHints) -> List[str]:
    w, h = hints.width, hints.height
    grid = [[" "] * w for _ in range(h)]
    if hints.net:
        for row in grid:
            row[hints.net - 1] = "|"

    def put(x, y, glyph):
        if 1 <= x <= w and 1 <= y <= h:
            grid[h - y][x - 1] = glyph

    if hints.ball is not None:
        glyph, bx, by = hints.ball
        put(state[bx], state[by], glyph)
    for p in hints.pieces:
        holding = p.holds is not None and state.get(p.holds, 0) > 0
        put(state[p.x], state[p.y], p.holding_glyph if holding else p.glyph)
    border = ["*"] * (w + 2)
    if hints.net:
        border[hints.net] = "|"
    edge = "".join(border)
    return [edge] + ["*" + "".join(row) + "*" for row in grid] + [edge]


def render_frames(states, hints: RenderHints) -> List[List[str]]:
    return [render_frame(s, hints) for s in states]


def render_text(states, hints: RenderHints) -> str:
    out = []
    for t, frame in enumerate(render_frames(states, hints)):
        out.append(f"Time {t}:")
        out.extend(frame)
    return "\n".join(out) + ("\n" if out else "")


def hints_to_lines(hints: RenderHints):
    lines = [("grid", f"{hints.width}x{hints.height}")]
    if hints.net:
        lines.append(("net", str(hints.net)))
    for p in hints.pieces:
        spec = f"{p.glyph}:{p.holding_glyph}:{p.x}:{p.y}"
        if p.holds:
            spec += f":{p.holds}"
        lines.append(("piece", spec))
    if hints.ball is not None:
        lines.append(("ball", ":".join(hints.ball)))
    return lines


def hints_from_lines(lines):
    """Inverse of ``hints_to_lines``; None when no grid is declared."""
    width = height = None
    net = 0
    pieces, ball = [], None
    for key, value in lines:
        if key == "grid":
            a, _, b = value.partition("x")
            width, height = int(a), int(b)
        elif key == "net":
            net = int(value)
        elif key == "piece":
            f = value.split(":")
            pieces.append(Piece(f[0], f[1], f[2], f[3], f[4] if len(f) > 4 else None))
        elif key == "ball":
            ball = tuple(value.split(":"))
    if width is None:
        return None
    return RenderHints(width, height, net, tuple(pieces), ball)
