"""Recursive-descent parser for theory files.

A theory file is a sequence of ``.``-terminated statements with ``%`` line
comments. ``forall VAR in lo..hi: <statement>`` (or ``in [a, b, ...]``, or a
tuple binder ``forall (D, DX) in [(n, 0), (e, 1)]:``) expands to one ground
statement per binding before parsing; ``{EXPR}`` placeholders inside the body
are replaced by the bound value, with ``+ - *`` arithmetic allowed.
"""
from __future__ import annotations

import ast as pyast
import re
from dataclasses import dataclass
from typing import List, Optional

from .ast import (
    CMP_OPS, FALSE, TRUE, Abs, BinOp, Bool, Cmp, Fluent, Neg, Not, Num, Rei,
    conj, conjuncts, disj, fluent_refs, is_basic, is_timeless, walk,
)
from .theory import (
    ActionDecl, AgentTheory, ConflictOption, DynamicLaw, ExecAxiom,
    FailureOption, FluentDecl, GlobalConstraint, HelpAxiom, RequestAxiom,
)

KEYWORDS = frozenset(
    """agent priority known_agents fluent valued action on_conflict on_failure
    retry_after provided forego arbitrate replan add_goal fail if executable
    causes request to_agent offering help all goal initially always holds_at
    forall in and or not true false rei abs pair mod eq neq leq lt geq gt nop""".split()
)

CMP_ALIASES = {"eq": "=", "neq": "!=", "leq": "<=", "lt": "<", "geq": ">=", "gt": ">"}


class ParseError(Exception):
    def __init__(self, message, line=0, col=0, fatal=False):
        super().__init__(f"{line}:{col}: {message}")
        self.fatal = fatal  # not worth retrying with another reading of the input
        self.message = message
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str  # INT, ID, OP, TPL, END
    text: str
    pos: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<tpl>\{[^{}\n]*\})
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\.\.|!=|<=|>=|[.,:()\[\]@+\-*/=<>])
    """,
    re.VERBOSE,
)


def _line_col(text, pos):
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def tokenize(text) -> List[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            line, col = _line_col(text, pos)
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "int":
            out.append(Token("INT", m.group(), pos))
        elif kind == "id":
            out.append(Token("ID", m.group(), pos))
        elif kind == "op":
            out.append(Token("OP", m.group(), pos))
        elif kind == "tpl":
            out.append(Token("TPL", m.group(), pos))
        pos = m.end()
    out.append(Token("END", "", len(text)))
    return out


def _split_statements(text, tokens):
    """Yield ``(first, last)`` token indices of each ``.``-terminated statement."""
    first = None
    for k, tok in enumerate(tokens):
        if tok.kind == "END":
            if first is not None:
                line, col = _line_col(text, tokens[first].pos)
                raise ParseError("statement not terminated by '.'", line, col)
            return
        if first is None:
            first = k
        if tok.kind == "OP" and tok.text == ".":
            yield first, k
            first = None


# -- template expansion -------------------------------------------------------

_ALLOWED_TPL_NODES = (
    pyast.Expression, pyast.BinOp, pyast.UnaryOp, pyast.Add, pyast.Sub,
    pyast.Mult, pyast.USub, pyast.UAdd, pyast.Constant, pyast.Name, pyast.Load,
)


def _eval_placeholder(src, env):
    src = src.strip()
    if src in env:
        return str(env[src])
    try:
        tree = pyast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"bad template expression {{{src}}}") from exc
    for node in pyast.walk(tree):
        if not isinstance(node, _ALLOWED_TPL_NODES):
            raise ValueError(f"bad template expression {{{src}}}")
        if isinstance(node, pyast.Name) and not isinstance(env.get(node.id), int):
            raise ValueError(f"unbound or non-integer template variable {node.id}")
        if isinstance(node, pyast.Constant) and not isinstance(node.value, int):
            raise ValueError(f"bad template expression {{{src}}}")
    return str(eval(compile(tree, "<template>", "eval"), {"__builtins__": {}}, dict(env)))


def _substitute(body, env, final):
    def repl(m):
        src = m.group(1)
        names = set(re.findall(r"[A-Za-z_][A-Za-z0-9_]*", src))
        if not final and not names <= set(env):
            return m.group(0)  # bound by an inner forall
        return _eval_placeholder(src, env)

    return re.sub(r"\{([^{}\n]*)\}", repl, body)


def _parse_binding_values(toks, i, text):
    """Parse ``lo..hi`` or ``[v, v, ...]`` / ``[(v, v), ...]``; return (values, next index)."""

    def scalar(j):
        t = toks[j]
        if t.kind == "OP" and t.text == "-" and toks[j + 1].kind == "INT":
            return -int(toks[j + 1].text), j + 2
        if t.kind == "INT":
            return int(t.text), j + 1
        if t.kind == "ID":
            return t.text, j + 1
        raise _err(text, t, "expected a template value")

    if toks[i].kind == "OP" and toks[i].text == "[":
        values = []
        j = i + 1
        while not (toks[j].kind == "OP" and toks[j].text == "]"):
            if toks[j].kind == "OP" and toks[j].text == "(":
                j += 1
                tup = []
                while True:
                    v, j = scalar(j)
                    tup.append(v)
                    if toks[j].text == ",":
                        j += 1
                        continue
                    if toks[j].text == ")":
                        j += 1
                        break
                    raise _err(text, toks[j], "expected ',' or ')' in template tuple")
                values.append(tuple(tup))
            else:
                v, j = scalar(j)
                values.append(v)
            if toks[j].kind == "OP" and toks[j].text == ",":
                j += 1
            elif not (toks[j].kind == "OP" and toks[j].text == "]"):
                raise _err(text, toks[j], "expected ',' or ']' in template list")
        return values, j + 1
    lo, j = scalar(i)
    if not (toks[j].kind == "OP" and toks[j].text == ".."):
        raise _err(text, toks[j], "expected '..' in template range")
    hi, j = scalar(j + 1)
    if not (isinstance(lo, int) and isinstance(hi, int)):
        raise _err(text, toks[i], "template range bounds must be integers")
    return list(range(lo, hi + 1)), j


def _err(text, tok, message):
    line, col = _line_col(text, tok.pos)
    return ParseError(message, line, col)


def expand_templates(stmt, offset=0, outer=None):
    """Expand one statement into ground statement strings.

    Returns a list of (statement_text, source_offset) pairs; nested
    ``forall`` bodies are expanded recursively.
    """
    toks = tokenize(stmt)
    if not (toks[0].kind == "ID" and toks[0].text == "forall"):
        return [(stmt, offset)]
    i = 1
    if toks[i].kind == "OP" and toks[i].text == "(":
        names = []
        i += 1
        while True:
            if toks[i].kind != "ID":
                raise _err(stmt, toks[i], "expected template variable")
            names.append(toks[i].text)
            i += 1
            if toks[i].text == ",":
                i += 1
            elif toks[i].text == ")":
                i += 1
                break
            else:
                raise _err(stmt, toks[i], "expected ',' or ')'")
    elif toks[i].kind == "ID" and toks[i].text not in KEYWORDS:
        names = [toks[i].text]
        i += 1
    else:
        raise _err(stmt, toks[i], "expected template variable after forall")
    if not (toks[i].kind == "ID" and toks[i].text == "in"):
        raise _err(stmt, toks[i], "expected 'in'")
    values, i = _parse_binding_values(toks, i + 1, stmt)
    if not (toks[i].kind == "OP" and toks[i].text == ":"):
        raise _err(stmt, toks[i], "expected ':' after template binding")
    body_pos = toks[i + 1].pos
    body = stmt[body_pos:]
    out = []
    for v in values:
        tup = v if isinstance(v, tuple) else (v,)
        if len(tup) != len(names):
            raise _err(stmt, toks[0], "template tuple arity mismatch")
        env = dict(outer or {})
        env.update(zip(names, tup))
        nested = tokenize(body)[0].text == "forall"
        try:
            ground = _substitute(body, env, final=not nested)
        except ValueError as exc:
            raise _err(stmt, toks[0], str(exc)) from None
        out.extend(expand_templates(ground, offset + body_pos, env))
    return out


# -- statement parser ---------------------------------------------------------

class _StatementParser:
    def __init__(self, source, stmt, offset, toks=None):
        self.source = source
        if toks is None:
            toks = tokenize(stmt)
            for t in toks:
                t.pos += offset
        self.toks = toks
        self.i = 0

    # token helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, message, tok=None, fatal=False):
        exc = _err(self.source, tok or self.tok, message)
        exc.fatal = fatal
        return exc

    def at(self, text):
        t = self.tok
        return t.kind in ("OP", "ID") and t.text == text

    def accept(self, text):
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")

    def name(self, what="identifier"):
        t = self.tok
        if t.kind == "TPL":
            raise self.error("template placeholder outside forall")
        if t.kind != "ID" or t.text in KEYWORDS:
            raise self.error(f"expected {what}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def integer(self):
        neg = self.accept("-")
        t = self.tok
        if t.kind != "INT":
            raise self.error("expected integer")
        self.i += 1
        return -int(t.text) if neg else int(t.text)

    def names(self, what):
        out = [self.name(what)]
        while self.accept(","):
            out.append(self.name(what))
        return out

    def end(self):
        self.expect(".")
        if self.tok.kind != "END":
            raise self.error("unexpected tokens after '.'")

    # expressions
    def expr(self):
        left = self.term()
        while self.tok.kind == "OP" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.factor()
        while (self.tok.kind == "OP" and self.tok.text in ("*", "/")) or self.at("mod"):
            op = self.tok.text
            op_tok = self.tok
            self.i += 1
            right = self.factor()
            if op in ("/", "mod") and right == Num(0):
                raise self.error("division by literal zero", op_tok, fatal=True)
            left = BinOp(op, left, right)
        return left

    def factor(self):
        t = self.tok
        if t.kind == "OP" and t.text == "-":
            self.i += 1
            if self.tok.kind == "INT":
                v = -int(self.tok.text)
                self.i += 1
                return Num(v)
            return Neg(self.factor())
        if t.kind == "INT":
            self.i += 1
            return Num(int(t.text))
        if t.kind == "OP" and t.text == "(":
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        if self.at("abs"):
            self.i += 1
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return Abs(e)
        if self.at("rei"):
            self.i += 1
            self.expect("(")
            c = self.constraint()
            self.expect(")")
            return Rei(c)
        name_tok = t
        name = self.name("fluent name or number")
        at = 0
        if self.accept("@"):
            sign = 1
            if self.accept("-"):
                sign = -1
            elif self.accept("+"):
                sign = 1
            if self.tok.kind != "INT":
                raise self.error("expected integer time annotation")
            at = sign * int(self.tok.text)
            self.i += 1
            if at > 0:
                raise self.error(f"future annotation {name}@{at} is not allowed", name_tok, fatal=True)
        return Fluent(name, at)

    def cmp_op(self):
        t = self.tok
        if t.kind == "OP" and t.text in CMP_OPS:
            self.i += 1
            return t.text
        if t.kind == "ID" and t.text in CMP_ALIASES:
            self.i += 1
            return CMP_ALIASES[t.text]
        raise self.error(f"expected comparison operator, found {t.text or 'end of input'!r}")

    def at_cmp_op(self):
        t = self.tok
        return (t.kind == "OP" and t.text in CMP_OPS) or (t.kind == "ID" and t.text in CMP_ALIASES)

    # constraints
    def constraint(self):
        items = [self.conjunction()]
        while self.accept("or"):
            items.append(self.conjunction())
        return disj(*items) if len(items) > 1 else items[0]

    def conjunction(self):
        items = [self.negation()]
        while self.accept("and"):
            items.append(self.negation())
        return conj(*items) if len(items) > 1 else items[0]

    def negation(self):
        if self.accept("not"):
            return Not(self.negation())
        return self.atom()

    def atom(self):
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if self.at("pair"):
            return self.pair_cmp()
        if self.at("("):
            save = self.i
            try:
                self.i += 1
                c = self.constraint()
                self.expect(")")
                t = self.tok
                arith = t.kind == "OP" and t.text in ("+", "-", "*", "/")
                if not (arith or self.at("mod") or self.at_cmp_op()):
                    return c
            except ParseError as exc:
                if exc.fatal:
                    raise
            self.i = save
        left = self.expr()
        op = self.cmp_op()
        return Cmp(op, left, self.expr())

    def pair_args(self):
        self.expect("pair")
        self.expect("(")
        a = self.expr()
        self.expect(",")
        b = self.expr()
        self.expect(")")
        return a, b

    def pair_cmp(self):
        start = self.tok
        a, b = self.pair_args()
        op = self.cmp_op()
        c, d = self.pair_args()
        if op == "=":
            return conj(Cmp("=", a, c), Cmp("=", b, d))
        if op == "!=":
            return disj(Cmp("!=", a, c), Cmp("!=", b, d))
        raise self.error("pair supports only = and !=", start)


@dataclass
class _Stmt:
    kind: str
    value: object
    tok: Token


def _parse_statement(p: _StatementParser) -> Optional[_Stmt]:
    first = p.tok
    kw = first.text if first.kind == "ID" else None

    if kw == "agent":
        p.i += 1
        name = p.name("agent name")
        prio = 0
        if p.accept("priority"):
            prio = p.integer()
            if prio < 0:
                raise p.error("priority must be a natural number", first)
        p.end()
        return _Stmt("agent", (name, prio), first)
    if kw == "known_agents":
        p.i += 1
        names = p.names("agent name")
        p.end()
        return _Stmt("known", names, first)
    if kw == "fluent":
        p.i += 1
        names = p.names("fluent name")
        p.expect("valued")
        if p.accept("["):
            values = [p.integer()]
            while p.accept(","):
                values.append(p.integer())
            p.expect("]")
            dom, interval = tuple(sorted(set(values))), False
        else:
            lo = p.integer()
            p.expect("..")
            hi = p.integer()
            if hi < lo:
                raise p.error("empty fluent domain", first)
            dom, interval = range(lo, hi + 1), True
        p.end()
        try:
            return _Stmt("fluent", [FluentDecl(n, dom, interval) for n in names], first)
        except ValueError as exc:
            raise p.error(str(exc), first) from None
    if kw == "action":
        p.i += 1
        name = p.name("action name")
        conflict, failure = [], []
        while True:
            if p.accept("on_conflict"):
                conflict.append(_conflict_option(p))
            elif p.accept("on_failure"):
                failure.append(_failure_option(p))
            else:
                break
        p.end()
        return _Stmt("action", ActionDecl(name, tuple(conflict), tuple(failure)), first)
    if kw == "executable":
        p.i += 1
        name = p.name("action name")
        cond = p.constraint() if p.accept("if") else TRUE
        p.end()
        return _Stmt("exec", ExecAxiom(name, cond), first)
    if kw == "request":
        p.i += 1
        c1 = p.constraint()
        target = p.name("agent name") if p.accept("to_agent") else None
        p.expect("if")
        c2 = p.constraint()
        offer = p.constraint() if p.accept("offering") else None
        p.end()
        return _Stmt("request", RequestAxiom(c1, c2, target, offer), first)
    if kw == "help":
        p.i += 1
        if p.accept("all"):
            donors = ("all",)
        else:
            donors = tuple(p.names("agent name"))
        cond = p.constraint() if p.accept("if") else TRUE
        p.end()
        return _Stmt("help", HelpAxiom(donors, cond), first)
    if kw == "goal":
        p.i += 1
        c = p.constraint()
        p.end()
        return _Stmt("goal", c, first)
    if kw == "initially":
        p.i += 1
        c = p.constraint()
        p.end()
        if not is_timeless(c):
            raise p.error("initial-state constraints must be timeless", first)
        return _Stmt("init", c, first)
    if kw == "always":
        p.i += 1
        c = p.constraint()
        p.end()
        return _Stmt("global", GlobalConstraint(c), first)
    if first.kind == "ID" and p.peek().kind == "ID" and p.peek().text == "causes":
        name = p.name("action name")
        p.expect("causes")
        eff = p.constraint()
        prec = p.constraint() if p.accept("if") else TRUE
        p.end()
        for c in conjuncts(eff):
            if not is_basic(c):
                raise p.error(f"effect '{c}' is not a basic primitive constraint", first)
        return _Stmt("law", DynamicLaw(name, eff, prec), first)
    c = p.constraint()
    if p.accept("holds_at"):
        at = p.integer()
        if at < 0:
            raise p.error("holds_at time must be non-negative", first)
        p.end()
        return _Stmt("global", GlobalConstraint(c, at), first)
    raise p.error("unrecognised statement", first)


def _conflict_option(p):
    if p.accept("retry_after"):
        steps = p.integer()
        if steps < 1:
            raise p.error("retry_after needs T >= 1")
        cond = p.constraint() if p.accept("provided") else TRUE
        return ConflictOption("retry_after", steps, cond)
    if p.accept("forego"):
        cond = p.constraint() if p.accept("provided") else TRUE
        return ConflictOption("forego", None, cond)
    if p.accept("arbitrate"):
        return ConflictOption("arbitrate")
    raise p.error("expected retry_after, forego or arbitrate")


def _failure_option(p):
    if p.accept("retry_after"):
        steps = p.integer()
        if steps < 1:
            raise p.error("retry_after needs T >= 1")
        cond = p.constraint() if p.accept("if") else TRUE
        return FailureOption("retry_after", steps, cond)
    if p.accept("replan"):
        cond = p.constraint() if p.accept("if") else TRUE
        goal = p.constraint() if p.accept("add_goal") else None
        return FailureOption("replan", None, cond, goal)
    if p.accept("fail"):
        cond = p.constraint() if p.accept("if") else TRUE
        return FailureOption("fail", None, cond)
    raise p.error("expected retry_after, replan or fail")


def _iter_statements(text):
    tokens = tokenize(text)
    for first, last in _split_statements(text, tokens):
        head = tokens[first]
        if not (head.kind == "ID" and head.text == "forall"):
            # ground statement: reuse the tokens of the whole file
            toks = tokens[first:last + 1] + [Token("END", "", tokens[last].pos + 1)]
            yield _parse_statement(_StatementParser(text, None, 0, toks))
            continue
        start, end = head.pos, tokens[last].pos + 1
        try:
            ground = expand_templates(text[start:end], start)
        except ParseError as exc:
            line, col = _line_col(text, start)
            raise ParseError(exc.message, line, col) from None
        for stmt, offset in ground:
            yield _parse_statement(_StatementParser(text, stmt, offset))


def _constraints_of(value):
    """All constraint sub-trees carried by an axiom record."""
    if isinstance(value, ExecAxiom):
        return [value.cond]
    if isinstance(value, DynamicLaw):
        return [value.eff, value.prec]
    if isinstance(value, RequestAxiom):
        return [c for c in (value.c1, value.c2, value.offer) if c is not None]
    if isinstance(value, HelpAxiom):
        return [value.cond]
    if isinstance(value, GlobalConstraint):
        return [value.cond]
    if isinstance(value, ActionDecl):
        out = [o.cond for o in value.on_conflict] + [o.cond for o in value.on_failure]
        out += [o.add_goal for o in value.on_failure if o.add_goal is not None]
        return out
    return [value]


def parse_theory(text: str) -> AgentTheory:
    """Parse and resolve one agent's theory file."""
    stmts = list(_iter_statements(text))
    agent = None
    known, fluents, actions = [], [], []
    groups = {k: [] for k in ("exec", "law", "request", "help", "goal", "init", "global")}
    for s in stmts:
        if s.kind == "agent":
            if agent is not None:
                raise _err(text, s.tok, "duplicate agent declaration")
            agent = s.value
        elif s.kind == "known":
            known.extend(n for n in s.value if n not in known)
        elif s.kind == "fluent":
            fluents.extend((d, s.tok) for d in s.value)
        elif s.kind == "action":
            actions.append((s.value, s.tok))
        else:
            groups[s.kind].append((s.value, s.tok))
    if agent is None:
        raise ParseError("missing agent declaration", 1, 1)

    declared = {}
    for d, tok in fluents:
        if d.name in declared:
            raise _err(text, tok, f"fluent {d.name} declared twice")
        declared[d.name] = d
    acts = {}
    for a, tok in actions:
        if a.name in acts:
            raise _err(text, tok, f"action {a.name} declared twice")
        acts[a.name] = a

    def check_refs(value, tok):
        for c in _constraints_of(value):
            for f in fluent_refs(c):
                if f.name not in declared:
                    raise _err(text, tok, f"unknown fluent {f.name}")
            for node in walk(c):
                if isinstance(node, BinOp) and node.op in ("/", "mod") and node.right == Num(0):
                    raise _err(text, tok, "division by literal zero")

    for a, tok in actions:
        check_refs(a, tok)
    for kind, items in groups.items():
        for value, tok in items:
            check_refs(value, tok)
            if kind in ("exec", "law") and value.action not in acts:
                raise _err(text, tok, f"undeclared action {value.action}")
            if kind == "law":
                for c in conjuncts(value.eff):
                    if not isinstance(c, Bool) and c.left.name not in declared:
                        raise _err(text, tok, f"unknown fluent {c.left.name}")
            if kind == "request" and value.target is not None and value.target not in known:
                raise _err(text, tok, f"request target {value.target} is not a known agent")
            if kind == "help" and not value.helps_all:
                for d in value.donors:
                    if d not in known:
                        raise _err(text, tok, f"help donor {d} is not a known agent")
    with_exec = {v.action for v, _ in groups["exec"]}
    for a, tok in actions:
        if a.name not in with_exec:
            raise _err(text, tok, f"action {a.name} has no executability axiom")

    return AgentTheory(
        name=agent[0],
        priority=agent[1],
        known_agents=tuple(known),
        fluents=tuple(d for d, _ in fluents),
        actions=tuple(acts.values()),
        executability=tuple(v for v, _ in groups["exec"]),
        laws=tuple(v for v, _ in groups["law"]),
        requests=tuple(v for v, _ in groups["request"]),
        helps=tuple(v for v, _ in groups["help"]),
        goals=tuple(v for v, _ in groups["goal"]),
        initially=tuple(v for v, _ in groups["init"]),
        global_constraints=tuple(v for v, _ in groups["global"]),
    )


def parse_constraint(text: str):
    """Parse a standalone constraint (no declarations, no name resolution)."""
    p = _StatementParser(text, text, 0)
    c = p.constraint()
    if p.tok.kind != "END":
        raise p.error("unexpected trailing input")
    return c


def parse_expr(text: str):
    p = _StatementParser(text, text, 0)
    e = p.expr()
    if p.tok.kind != "END":
        raise p.error("unexpected trailing input")
    return e
