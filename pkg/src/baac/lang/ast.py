"""Expression and constraint trees for action theories.

All nodes are frozen dataclasses, so theories can be compared structurally,
hashed and shared between agents without copying. ``str(node)`` renders the
surface syntax accepted by the parser.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Tuple, Union

ARITH_OPS = ("+", "-", "*", "/", "mod")
CMP_OPS = ("=", "!=", "<=", "<", ">=", ">")

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "mod": 2}


@dataclass(frozen=True)
class Num:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Fluent:
    """A fluent reference ``name@t``; ``t == 0`` is the timeless form."""

    name: str
    t: int = 0

    def __str__(self):
        return self.name if self.t == 0 else f"{self.name}@{self.t}"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"{_wrap(self.left, self.op, False)} {self.op} {_wrap(self.right, self.op, True)}"


@dataclass(frozen=True)
class Neg:
    arg: "Expr"

    def __str__(self):
        return f"-({self.arg})"


@dataclass(frozen=True)
class Abs:
    arg: "Expr"

    def __str__(self):
        return f"abs({self.arg})"


@dataclass(frozen=True)
class Rei:
    cond: "Constraint"

    def __str__(self):
        return f"rei({self.cond})"


Expr = Union[Num, Fluent, BinOp, Neg, Abs, Rei]


def _wrap(e, parent_op, right_side):
    if isinstance(e, BinOp):
        p, q = _PREC[e.op], _PREC[parent_op]
        # left-assoc: a right operand of equal precedence needs parens
        if p < q or (p == q and right_side):
            return f"({e})"
    return str(e)


@dataclass(frozen=True)
class Cmp:
    op: str
    left: Expr
    right: Expr

    def __str__(self):
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class And:
    items: Tuple["Constraint", ...]

    def __str__(self):
        return " and ".join(_cwrap(c, And) for c in self.items)


@dataclass(frozen=True)
class Or:
    items: Tuple["Constraint", ...]

    def __str__(self):
        return " or ".join(_cwrap(c, Or) for c in self.items)


@dataclass(frozen=True)
class Not:
    arg: "Constraint"

    def __str__(self):
        return f"not ({self.arg})"


@dataclass(frozen=True)
class Bool:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


Constraint = Union[Cmp, And, Or, Not, Bool]

TRUE = Bool(True)
FALSE = Bool(False)


def _cwrap(c, parent):
    if isinstance(c, (And, Or)) and not isinstance(c, parent):
        return f"({c})"
    if isinstance(c, (And, Or)):
        return f"({c})"
    return str(c)


def conj(*items):
    """Flattened conjunction; drops ``true`` and collapses singletons."""
    out = []
    for c in items:
        if isinstance(c, And):
            out.extend(c.items)
        elif c == TRUE:
            continue
        else:
            out.append(c)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*items):
    out = []
    for c in items:
        if isinstance(c, Or):
            out.extend(c.items)
        elif c == FALSE:
            continue
        else:
            out.append(c)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def conjuncts(c) -> Tuple[Constraint, ...]:
    if isinstance(c, And):
        return c.items
    if c == TRUE:
        return ()
    return (c,)


def walk(node) -> Iterator[object]:
    """Pre-order traversal over expression and constraint nodes."""
    yield node
    if isinstance(node, (BinOp, Cmp)):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, (Neg, Abs, Not)):
        yield from walk(node.arg)
    elif isinstance(node, Rei):
        yield from walk(node.cond)
    elif isinstance(node, (And, Or)):
        for c in node.items:
            yield from walk(c)


_REFS: dict = {}


def _refs(node) -> Tuple[Fluent, ...]:
    # keyed by identity; the entry keeps the node alive so ids are not reused
    hit = _REFS.get(id(node))
    if hit is not None and hit[0] is node:
        return hit[1]
    if isinstance(node, (And, Or)):
        # fresh conjunctions of cached parts are common; reuse the parts
        refs = tuple(f for c in node.items for f in _refs(c))
    else:
        refs = tuple(n for n in walk(node) if isinstance(n, Fluent))
    if len(_REFS) > 200_000:
        _REFS.clear()
    _REFS[id(node)] = (node, refs)
    return refs


def fluent_refs(node) -> Iterator[Fluent]:
    return iter(_refs(node))


def fluents(node) -> Tuple[str, ...]:
    """Names of timeless fluents in first-occurrence order."""
    seen = {}
    for f in _refs(node):
        if f.t == 0:
            seen.setdefault(f.name, None)
    return tuple(seen)


def all_fluent_names(node) -> Tuple[str, ...]:
    seen = {}
    for f in fluent_refs(node):
        seen.setdefault(f.name, None)
    return tuple(seen)


def lookback(node) -> int:
    """Deepest past reference, as a non-negative step count."""
    return max((-f.t for f in fluent_refs(node)), default=0)


def is_timeless(node) -> bool:
    return all(f.t == 0 for f in fluent_refs(node))


def shift(node, k: int):
    """Move every fluent reference ``k`` steps in time (``k < 0`` = into the past)."""
    if isinstance(node, Fluent):
        return Fluent(node.name, node.t + k)
    if isinstance(node, Num) or isinstance(node, Bool):
        return node
    if isinstance(node, BinOp):
        return BinOp(node.op, shift(node.left, k), shift(node.right, k))
    if isinstance(node, Cmp):
        return Cmp(node.op, shift(node.left, k), shift(node.right, k))
    if isinstance(node, Neg):
        return Neg(shift(node.arg, k))
    if isinstance(node, Abs):
        return Abs(shift(node.arg, k))
    if isinstance(node, Not):
        return Not(shift(node.arg, k))
    if isinstance(node, Rei):
        return Rei(shift(node.cond, k))
    if isinstance(node, And):
        return And(tuple(shift(c, k) for c in node.items))
    if isinstance(node, Or):
        return Or(tuple(shift(c, k) for c in node.items))
    raise TypeError(f"not an expression or constraint: {node!r}")


def is_basic(c) -> bool:
    """``f = E`` with a timeless fluent on the left."""
    return isinstance(c, Cmp) and c.op == "=" and isinstance(c.left, Fluent) and c.left.t == 0
