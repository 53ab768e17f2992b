"""``key=value`` run settings."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Tuple

STRATEGIES = ("random", "max_subset")
MODES = ("supervisor", "negotiate")


class SettingsError(ValueError):
    pass


@dataclass(frozen=True)
class Piece:
    """A rendered grid token: glyph, glyph while holding the ball, fluents."""

    glyph: str
    holding_glyph: str
    x: str
    y: str
    holds: Optional[str] = None


@dataclass(frozen=True)
class RenderHints:
    width: int
    height: int
    net: Optional[int] = None
    pieces: Tuple[Piece, ...] = ()
    ball: Optional[Tuple[str, str, str]] = None  # glyph, x fluent, y fluent


@dataclass(frozen=True)
class RunConfig:
    horizon: int
    theories: Tuple[str, ...] = ()
    strategy: str = "max_subset"
    mode: str = "supervisor"
    seed: int = 0
    deterministic: bool = True
    node_budget: int = 200_000
    max_set_size: Optional[int] = None
    render: Optional[RenderHints] = None
    base_dir: Optional[str] = field(default=None, compare=False)

    def theory_paths(self):
        base = Path(self.base_dir) if self.base_dir else Path(".")
        return [base / p for p in self.theories]


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _int(key, value, lo=None):
    try:
        v = int(value)
    except ValueError:
        raise SettingsError(f"{key}: expected an integer, got {value!r}") from None
    if lo is not None and v < lo:
        raise SettingsError(f"{key}: must be >= {lo}")
    return v


def _piece(value):
    parts = value.split(":")
    if len(parts) not in (4, 5) or not all(parts):
        raise SettingsError(f"piece: expected glyph:held_glyph:x:y[:holds], got {value!r}")
    return Piece(*parts)


def parse_settings(text: str, base_dir=None) -> RunConfig:
    values = {}
    theories, pieces = [], []
    render = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SettingsError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "theory":
            theories.append(value)
        elif key == "piece":
            pieces.append(_piece(value))
        elif key == "grid":
            try:
                w, h = (int(v) for v in value.lower().split("x"))
            except ValueError:
                raise SettingsError(f"grid: expected WxH, got {value!r}") from None
            render["size"] = (w, h)
        elif key == "net":
            render["net"] = _int(key, value)
        elif key == "ball":
            parts = value.split(":")
            if len(parts) != 3:
                raise SettingsError("ball: expected glyph:x:y")
            render["ball"] = tuple(parts)
        elif key == "horizon":
            values[key] = _int(key, value, lo=1)
        elif key == "max_set_size":
            values[key] = _int(key, value, lo=1)
        elif key in ("seed", "node_budget"):
            values[key] = _int(key, value, lo=0)
        elif key == "strategy":
            if value not in STRATEGIES:
                raise SettingsError(f"strategy must be one of {STRATEGIES}")
            values[key] = value
        elif key == "mode":
            if value not in MODES:
                raise SettingsError(f"mode must be one of {MODES}")
            values[key] = value
        elif key == "deterministic":
            if value.lower() not in _BOOL:
                raise SettingsError(f"deterministic: expected a boolean, got {value!r}")
            values[key] = _BOOL[value.lower()]
        else:
            raise SettingsError(f"line {lineno}: unknown key {key!r}")
    if "horizon" not in values:
        raise SettingsError("horizon is required")
    if values.get("seed", 0) >= 2**64:
        raise SettingsError("seed must fit in 64 bits")
    hints = None
    if "size" in render:
        hints = RenderHints(
            render["size"][0], render["size"][1], render.get("net"),
            tuple(pieces), render.get("ball"),
        )
    return RunConfig(
        theories=tuple(theories),
        render=hints,
        base_dir=str(base_dir) if base_dir is not None else None,
        **values,
    )


def load_settings(path) -> RunConfig:
    path = Path(path)
    return parse_settings(path.read_text(encoding="utf-8"), base_dir=path.parent)
