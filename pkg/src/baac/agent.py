"""Per-agent runtime: plan execution, failure handling and request traffic."""
from __future__ import annotations

import logging
from collections import deque
from typing import Dict, FrozenSet, List, Optional

from .coordination import Message, TupleSpace, request_id, settle_requests
from .lang.ast import TRUE, conj
from .lang.theory import RequestAxiom
from .planner import (
    AWAIT_PREFIX, HelpObligation, PendingRequest, Plan, Planner,
    SearchBudgetExceeded, evaluate_request,
)
from .problem import State, action_spec
from .semantics import holds, inertial_complete, iter_solutions

log = logging.getLogger(__name__)

ACTIVE, FAILED = "active", "failed"


class AgentRuntime:
    """One agent's view of the run.

    The runtime keeps its own copy of the state sequence restricted to the
    fluents the agent knows, updated from the diffs the supervisor
    broadcasts. ``propose`` yields the next action set (None once failed);
    ``observe`` digests the step outcome.
    """

    def __init__(self, theory, horizon: int, init: State, priorities=None,
                 node_budget=200_000, max_set_size=None, expect_help=True):
        self.theory = theory
        self.name = theory.name
        self.horizon = horizon
        self.planner = Planner(theory, node_budget, max_set_size, expect_help)
        self.priorities = dict(priorities or {})
        self.seq: List[State] = [init.project(theory.fluent_names)]
        self.status = ACTIVE
        self.plan: Optional[Plan] = None
        self.queue: deque = deque()
        self.added_goals: List[object] = []
        self.obligations: List[HelpObligation] = []
        self.tentative: Dict[str, tuple] = {}
        self.proposal: FrozenSet[str] = frozenset()
        self.expected: Optional[State] = None
        self.last_success = True
        self.pending: Dict[int, str] = {}
        self.in_flight: Dict[int, int] = {}
        self.events: List[str] = []

    # -- helpers ----------------------------------------------------------------

    @property
    def now(self):
        return len(self.seq) - 1

    def _note(self, text):
        self.events.append(text)
        log.debug("%s: %s", self.name, text)

    def _live_obligations(self):
        return [o for o in self.obligations if o.due > self.now]

    def _spec(self, name):
        if name.startswith("help."):
            for o in self.obligations:
                for a in o.actions:
                    if a.name == name:
                        return a.spec()
            return None
        return action_spec(self.theory, name)

    def _executable(self, name):
        spec = self._spec(name)
        return spec is not None and any(holds(self.seq, self.now, c) for c in spec.exec_conds)

    def expected_state(self, actions=None) -> State:
        """Next state if only this agent's ``actions`` were executed."""
        actions = self.proposal if actions is None else actions
        effs = []
        for name in sorted(actions):
            spec = self._spec(name)
            effs.extend(e for e, p in spec.laws if holds(self.seq, self.now, p))
        c = conj(*effs)
        sigma = next(iter_solutions(self.seq, c, self.theory.domains), None)
        return inertial_complete(sigma or {}, self.seq)

    def replan(self) -> Optional[Plan]:
        live = self._live_obligations()
        extra = [(g, None) for g in self.added_goals] + [(o.constraint, o.due) for o in live]
        synth = [a for o in live for a in o.actions]
        try:
            found = self.planner.plan(self.seq, self.horizon, extra, synth)
        except SearchBudgetExceeded as exc:
            self._note(f"budget {exc}")
            found = None
        self._note("plan found" if found is not None else "no plan")
        return found

    def _plan_usable(self):
        p = self.plan
        if p is None or p.start != self.now or not p.steps:
            return False
        if p.states[0] != self.seq[-1]:
            return False
        return all(self._executable(a) for a in p.executable_actions(0))

    # -- proposing --------------------------------------------------------------

    def propose(self) -> Optional[FrozenSet[str]]:
        if self.status != ACTIVE:
            return None
        if self.now >= self.horizon:
            return frozenset()
        while self.queue:
            kind, acts = self.queue.popleft()
            if kind == "nop":
                return self._set(frozenset())
            ready = frozenset(a for a in acts if self._executable(a))
            self.plan = None
            if ready:
                return self._set(ready)
        if not self._plan_usable():
            self.plan = self.replan()
        if self.plan is None:
            return self._set(frozenset())
        return self._set(self.plan.executable_actions(0))

    def _set(self, actions):
        self.proposal = frozenset(actions)
        self.expected = self.expected_state(self.proposal)
        return self.proposal

    # -- outcome ------------------------------------------------------------------

    def observe(self, result):
        """Apply the broadcast diffs, then react to this agent's outcome."""
        prev = self.seq[-1]
        changes = {f: new for f, _old, new in result.diffs if f in prev}
        self.seq.append(prev.replace(changes) if changes else prev)
        if self.status != ACTIVE:
            return
        if self.plan is not None and self.plan.start == self.now - 1:
            self.plan = self.plan.advance()
        failed = sorted(a for (ag, a) in result.inhibited if ag == self.name)
        self.last_success = not failed
        if not failed:
            return
        decision = next((result.decisions[(self.name, a)] for a in failed
                         if (self.name, a) in result.decisions), None)
        if decision is not None and decision.kind == "retry_after":
            self._schedule_retry(decision.steps, failed)
            self._note(f"conflict retry_after {decision.steps}")
        elif decision is not None and decision.kind == "forego":
            self.plan = None
            self._note("conflict forego")
        else:
            self.handle_failure(failed)

    def _schedule_retry(self, steps, actions):
        self.queue.clear()
        for _ in range(steps - 1):
            self.queue.append(("nop", frozenset()))
        self.queue.append(("retry", frozenset(actions)))
        self.plan = None

    def handle_failure(self, failed_actions):
        """Apply the first on_failure option whose condition holds now."""
        chosen = next(
            ((name, opt) for name in failed_actions
             for opt in getattr(self.theory.action(name), "on_failure", ())
             if holds(self.seq, self.now, opt.cond)),
            None,
        )
        if chosen is not None:
            name, opt = chosen
            self._note(f"{name} {opt}")
            if opt.kind == "retry_after":
                self._schedule_retry(opt.steps, [name])
                return
            if opt.kind == "fail":
                self.status = FAILED
                return
            if opt.add_goal is not None and opt.add_goal != TRUE:
                self.added_goals.append(opt.add_goal)
        self.queue.clear()
        self.plan = self.replan()
        if self.plan is None:
            self.status = FAILED
            self._note("failed: no plan after failure")

    # -- request exchange -------------------------------------------------------------

    def _priority(self, agent):
        return self.priorities.get(agent, 0)

    def offer_phase(self, space: TupleSpace, step):
        if self.status != ACTIVE or not self.last_success or step >= self.horizon:
            return
        reqs = [m for m in space.rd_all("Request") if m.get("requester") != self.name]
        reqs.sort(key=lambda m: (m.get("priority"), m.get("requester"), m.get("step"), m.get("index")))
        committed = list(self.obligations)
        for m in reqs:
            rid = m.get("id")
            if rid in self.tentative or space.rd_all("Offer", id=rid, helper=self.name):
                continue
            axiom = RequestAxiom(m.get("c1"), m.get("c2"), m.get("target"), m.get("offer"))
            req = PendingRequest(rid, m.get("requester"), m.get("index"), axiom, m.get("step"), m.get("priority"))
            if not any(h.serves(req.requester) for h in self.theory.helps):
                continue
            space.rd("Request", id=rid)
            ok, found, obligation = evaluate_request(
                self.planner, self.seq, req, step, self.horizon, committed, self.added_goals)
            if ok:
                committed.append(obligation)
                self.tentative[rid] = (obligation, found)
                space.out(Message.make("Offer", id=rid, helper=self.name, step=step))

    def accept_phase(self, space: TupleSpace, step):
        if self.status != ACTIVE or not self.last_success:
            return []
        settled = settle_requests(space, self.name, step, self._priority)
        for rid, _helper in settled:
            for r, pid in list(self.pending.items()):
                if pid == rid:
                    del self.pending[r]
                    self.in_flight[r] = step + 1
        return settled

    def commit_phase(self, space: TupleSpace, step):
        if not self.tentative:
            return
        accepted, last_plan = [], None
        for rid, (obligation, found) in self.tentative.items():
            if space.in_("Accept", id=rid, helper=self.name) is not None:
                accepted.append(obligation)
            last_plan = found
        all_in = len(accepted) == len(self.tentative)
        self.tentative = {}
        for o in accepted:
            self.obligations.append(o)
            self._note(f"obligation {o.constraint} at {o.due} for {o.requester}")
        if accepted:
            self.plan = last_plan if all_in else None

    def post_phase(self, space: TupleSpace, step):
        if self.status != ACTIVE or not self.last_success or step >= self.horizon:
            return
        for r, req in enumerate(self.theory.requests):
            if r in self.pending or self.in_flight.get(r, -1) > step:
                continue
            if not holds(self.seq, step, req.c2):
                continue
            rid = request_id(self.name, r, step)
            self.pending[r] = rid
            space.out(Message.make(
                "Request", id=rid, requester=self.name, index=r, c1=req.c1, c2=req.c2,
                target=req.target, offer=req.offer, step=step, priority=self.theory.priority,
            ))

    def is_successful(self, seq=None) -> bool:
        seq = self.seq if seq is None else seq
        j = len(seq) - 1
        return all(holds(seq, j, g) for g in self.theory.goals)


def is_pseudo(action: str) -> bool:
    return action.startswith(AWAIT_PREFIX)
