"""Tuple space, round-robin conflict negotiation and the request exchange.

All inter-agent traffic goes through a ``TupleSpace``. It is safe to share
between threads; deterministic runs simply touch it from one thread in a
fixed order.
"""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from .lang.ast import TRUE, conj
from .semantics import holds, inertial_complete, iter_solutions

log = logging.getLogger(__name__)

TAGS = (
    "Propose", "Outcome", "ConflictNotice", "NegotiationTurn", "Resolution",
    "Request", "Offer", "Accept", "Fulfilled", "Tick",
)


class SpaceClosed(RuntimeError):
    pass


@dataclass(frozen=True)
class Message:
    tag: str
    fields: Tuple[Tuple[str, object], ...] = ()

    @classmethod
    def make(cls, tag, **fields):
        return cls(tag, tuple(fields.items()))

    def get(self, key, default=None):
        for k, v in self.fields:
            if k == key:
                return v
        return default

    def matches(self, tag, pattern):
        if tag is not None and tag != self.tag:
            return False
        return all(self.get(k, _MISSING) == v for k, v in pattern.items())

    def __str__(self):
        body = " ".join(f"{k}={_fmt(v)}" for k, v in self.fields)
        return f"{self.tag} {body}".rstrip()


_MISSING = object()


def _fmt(v):
    if isinstance(v, (set, frozenset)):
        return "{" + ",".join(sorted(map(str, v))) + "}"
    if isinstance(v, (tuple, list)):
        return "[" + ",".join(map(str, v)) + "]"
    return str(v).replace(" ", "")


class TupleSpace:
    """Linda-style store with ``out``, ``rd`` and ``in_`` (plus blocking forms).

    ``on_event(op, tuple)`` is called for every successful operation while
    the lock is held, so observers see a linearised history.
    """

    def __init__(self, on_event: Optional[Callable[[str, Message], None]] = None):
        self._items: List[Message] = []
        self._cond = threading.Condition()
        self._closed = False
        self.on_event = on_event

    def _emit(self, op, t):
        if self.on_event is not None:
            self.on_event(op, t)

    def _find(self, tag, pattern):
        for k, t in enumerate(self._items):
            if t.matches(tag, pattern):
                return k
        return None

    def _check_open(self):
        if self._closed:
            raise SpaceClosed("tuple space is closed")

    def out(self, t: Message):
        with self._cond:
            self._check_open()
            self._items.append(t)
            self._emit("out", t)
            self._cond.notify_all()

    def rd(self, tag=None, **pattern) -> Optional[Message]:
        with self._cond:
            self._check_open()
            k = self._find(tag, pattern)
            if k is None:
                return None
            t = self._items[k]
            self._emit("rd", t)
            return t

    def in_(self, tag=None, **pattern) -> Optional[Message]:
        with self._cond:
            self._check_open()
            k = self._find(tag, pattern)
            if k is None:
                return None
            t = self._items.pop(k)
            self._emit("in", t)
            return t

    def _wait(self, remove, tag, pattern, timeout):
        with self._cond:
            while True:
                self._check_open()
                k = self._find(tag, pattern)
                if k is not None:
                    t = self._items.pop(k) if remove else self._items[k]
                    self._emit("in" if remove else "rd", t)
                    return t
                if not self._cond.wait(timeout):
                    return None

    def rd_wait(self, tag=None, timeout=None, **pattern):
        return self._wait(False, tag, pattern, timeout)

    def in_wait(self, tag=None, timeout=None, **pattern):
        return self._wait(True, tag, pattern, timeout)

    def rd_all(self, tag=None, **pattern) -> List[Message]:
        """Every matching tuple, oldest first, without removing them or logging."""
        with self._cond:
            self._check_open()
            return [t for t in self._items if t.matches(tag, pattern)]

    def close(self):
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def closed(self):
        return self._closed

    def __len__(self):
        with self._cond:
            return len(self._items)


# -- negotiation ------------------------------------------------------------------

@dataclass(frozen=True)
class Contender:
    """One conflicting action with its owner's on_conflict options."""

    agent: str
    action: str
    effect: object
    options: Tuple = ()
    priority: int = 0

    @property
    def key(self):
        return (self.agent, self.action)


@dataclass(frozen=True)
class Decision:
    kind: str  # keep | forego | retry_after | exhausted | delegated
    steps: Optional[int] = None

    def __str__(self):
        return f"retry_after {self.steps}" if self.kind == "retry_after" else self.kind


@dataclass
class Resolution:
    decisions: Dict[Tuple[str, str], Decision] = field(default_factory=dict)
    turns: int = 0
    log: List[Tuple[str, str, str, bool]] = field(default_factory=list)

    @property
    def survivors(self):
        return sorted(k for k, d in self.decisions.items() if d.kind in ("keep", "delegated"))

    @property
    def delegated(self):
        return any(d.kind == "delegated" for d in self.decisions.values())


def _consistent(seq, effects, domains, accept=None):
    c = conj(*effects) if effects else TRUE
    for sigma in iter_solutions(seq, c, domains):
        if accept is None or accept(sigma):
            return True
    return False


def _peer_guarantees(seq, peer, cond, domains):
    """Whether executing ``peer`` alone can leave ``cond`` true in the next state."""
    i_next = len(seq)
    for sigma in iter_solutions(seq, peer.effect, domains):
        if holds(list(seq) + [inertial_complete(sigma, seq)], i_next, cond):
            return True
    return False


def negotiate_round_robin(conflict: Sequence[Contender], seq, domains) -> Resolution:
    """Resolve a conflict through the contenders' own on_conflict options.

    Contenders take turns in (agent, action) order, each trying its next
    untried option. After every full round the remaining actions are tested
    for joint consistency and negotiation stops once they are. A contender
    with no options left is dropped with failure; one that picks
    ``arbitrate`` stays in and leaves the final choice to the supervisor.
    """
    res = Resolution()
    order = sorted(conflict, key=lambda c: c.key)
    cursor = {c.key: 0 for c in order}
    for c in order:
        if c.options:
            res.decisions[c.key] = Decision("keep")
        else:
            res.decisions[c.key] = Decision("exhausted")
            res.log.append((c.agent, c.action, "none", False))
    i = len(seq) - 1

    def remaining():
        return [c for c in order if res.decisions[c.key].kind in ("keep", "delegated")]

    while True:
        alive = remaining()
        if _consistent(seq, [c.effect for c in alive], domains):
            break
        movers = [c for c in alive if res.decisions[c.key].kind == "keep"]
        if not movers:
            break
        round_start = list(alive)
        for c in movers:
            k = cursor[c.key]
            if k >= len(c.options):
                res.decisions[c.key] = Decision("exhausted")
                continue
            opt = c.options[k]
            cursor[c.key] = k + 1
            res.turns += 1
            if opt.kind == "arbitrate":
                applied = True
                res.decisions[c.key] = Decision("delegated")
            elif opt.kind == "retry_after":
                applied = holds(seq, i, opt.cond)
                if applied:
                    res.decisions[c.key] = Decision("retry_after", opt.steps)
            else:
                peers = [p for p in round_start if p.agent != c.agent]
                applied = any(_peer_guarantees(seq, p, opt.cond, domains) for p in peers)
                if applied:
                    res.decisions[c.key] = Decision("forego")
            res.log.append((c.agent, c.action, str(opt), applied))
            if not applied and cursor[c.key] >= len(c.options):
                res.decisions[c.key] = Decision("exhausted")
    return res


# -- request exchange ----------------------------------------------------------

def request_id(requester, index, posted_at):
    return f"{requester}.{index}@{posted_at}"


def pending_requests(space: TupleSpace) -> List[Message]:
    return space.rd_all("Request")


def select_offer(offers: Iterable[Message], priority_of: Callable[[str], int]) -> Optional[Message]:
    """Default responder choice: best (lowest) priority number, then name."""
    offers = list(offers)
    if not offers:
        return None
    return min(offers, key=lambda t: (priority_of(t.get("helper")), t.get("helper")))


def settle_requests(space: TupleSpace, requester: str, step: int,
                    priority_of: Callable[[str], int], chooser=select_offer) -> List[Tuple[str, str]]:
    """Requester side of the exchange: accept one offer per own request.

    Returns ``(request id, chosen helper)`` pairs. The request and all of
    its offers leave the space; the Accept and Fulfilled tuples record the
    rendez-vous.
    """
    settled = []
    for req in space.rd_all("Request", requester=requester):
        rid = req.get("id")
        offers = space.rd_all("Offer", id=rid)
        chosen = chooser(offers, priority_of)
        if chosen is None:
            continue
        helper = chosen.get("helper")
        space.out(Message.make("Accept", id=rid, helper=helper, step=step))
        space.in_("Request", id=rid)
        while space.in_("Offer", id=rid) is not None:
            pass
        space.out(Message.make("Fulfilled", id=rid, requester=requester, helper=helper, step=step))
        settled.append((rid, helper))
    return settled


def request_exchange(agents, space: TupleSpace, step: int, priority_of, turn_offset=0):
    """One exchange round at time ``step``.

    ``agents`` maps names to objects exposing ``offer_phase(space, step)``
    (post offers for pending requests), ``accept_phase(space, step)``
    (settle own requests), ``commit_phase(space, step)`` (pick up Accept
    tuples) and ``post_phase(space, step)`` (post new requests). Offers are
    made in a rotating turn order starting at ``turn_offset``.
    """
    names = sorted(agents)
    if names:
        k = turn_offset % len(names)
        names = names[k:] + names[:k]
    for n in names:
        agents[n].offer_phase(space, step)
    settled = []
    for n in names:
        settled.extend(agents[n].accept_phase(space, step))
    for n in names:
        agents[n].commit_phase(space, step)
    for n in names:
        agents[n].post_phase(space, step)
    return settled
