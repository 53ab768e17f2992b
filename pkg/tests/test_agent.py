from baac.agent import ACTIVE, FAILED, AgentRuntime
from baac.coordination import Decision
from baac.lang.parser import parse_theory
from baac.lang.settings import load_settings
from baac.problem import State
from baac.runner import run
from baac.supervisor import StepResult

from conftest import DOMAINS, load

GUITAR_START = State({"guitars": 2, "neck": 5, "body": 3, "strings": 24, "pickup": 6, "seller_account": 0})


def outcome(rt, diffs=(), inhibited=None, decisions=None):
    """Feed the runtime a step result as the supervisor would broadcast it."""
    prev = rt.seq[-1]
    state = prev.replace({f: new for f, _, new in diffs})
    res = StepResult(rt.now + 1, {}, frozenset(), dict(inhibited or {}), state, tuple(diffs), {},
                     decisions=dict(decisions or {}))
    rt.observe(res)


def proposals(settings, agent):
    r = run(load_settings(DOMAINS / settings))
    return [sorted(res.proposals.get(agent, ())) for res in r.results]


def test_failure_retry_after_three():
    assert proposals("micro_supervisor.settings", "c") == [["act_c"], [], [], ["act_c"]]


def test_conflict_retry_after_two():
    assert proposals("micro_negotiate.settings", "a") == [["act_a"], [], ["act_a"], []]


TWO_WAYS = """agent a.
fluent f valued 0..3.
fluent g valued 0..1.
action up.
executable up if g = 0.
up causes f = f@-1 + 1.
action hop.
executable hop if g = 1.
hop causes f = f@-1 + 2.
goal f >= 2.
"""


def test_success_follows_plan():
    rt = AgentRuntime(parse_theory(TWO_WAYS), 3, State({"f": 0, "g": 0}))
    assert rt.propose() == {"up"}
    outcome(rt, [("f", 0, 1)])
    assert rt.propose() == {"up"}
    assert rt.events.count("plan found") == 1


def test_replan_when_executability_lost():
    rt = AgentRuntime(parse_theory(TWO_WAYS), 3, State({"f": 0, "g": 0}))
    rt.propose()
    # another agent flips g while our action still succeeds
    outcome(rt, [("f", 0, 1), ("g", 0, 1)])
    assert rt.propose() == {"hop"}
    assert rt.events.count("plan found") == 2


def test_failed_agent_never_proposes():
    t = parse_theory(TWO_WAYS.replace("action up.", "action up on_failure fail."))
    rt = AgentRuntime(t, 3, State({"f": 0, "g": 0}))
    rt.propose()
    outcome(rt, inhibited={("a", "up"): "arbitration"})
    assert rt.status == FAILED
    assert rt.propose() is None
    outcome(rt)
    assert rt.propose() is None


def test_no_options_means_replan():
    rt = AgentRuntime(parse_theory(TWO_WAYS), 4, State({"f": 0, "g": 0}))
    rt.propose()
    outcome(rt, inhibited={("a", "up"): "arbitration"})
    assert rt.status == ACTIVE
    assert rt.events[-1] == "plan found"
    assert rt.propose() == {"up"}


def test_replan_without_plan_fails():
    rt = AgentRuntime(parse_theory(TWO_WAYS), 2, State({"f": 0, "g": 0}))
    rt.propose()
    outcome(rt, inhibited={("a", "up"): "arbitration"})
    assert rt.status == FAILED


def test_add_goal_is_kept():
    t = parse_theory(TWO_WAYS.replace("action up.", "action up on_failure replan if true add_goal g = 0."))
    rt = AgentRuntime(t, 4, State({"f": 0, "g": 0}))
    rt.propose()
    outcome(rt, inhibited={("a", "up"): "arbitration"})
    assert len(rt.added_goals) == 1
    assert rt.plan.states[-1]["g"] == 0


def test_conflict_decision_beats_failure_options():
    t = parse_theory(TWO_WAYS.replace("action up.", "action up on_failure fail."))
    rt = AgentRuntime(t, 4, State({"f": 0, "g": 0}))
    rt.propose()
    outcome(rt, inhibited={("a", "up"): "negotiation:forego"}, decisions={("a", "up"): Decision("forego")})
    assert rt.status == ACTIVE


def test_retry_waits_for_executability():
    t = parse_theory(TWO_WAYS.replace("action up.", "action up on_failure retry_after 1."))
    rt = AgentRuntime(t, 4, State({"f": 0, "g": 0}))
    rt.propose()
    outcome(rt, [("g", 0, 1)], inhibited={("a", "up"): "arbitration"})
    # up is no longer executable, so the retry is dropped and the agent replans
    assert rt.propose() == {"hop"}


def test_expected_state():
    rt = AgentRuntime(load("guitar_maker.baac"), 22, GUITAR_START)
    assert rt.expected_state(frozenset()) == GUITAR_START
    assert rt.expected_state(frozenset({"make_guitar"}))["guitars"] == 3


def test_expected_state_joint():
    t = parse_theory(TWO_WAYS + "action flip.\nexecutable flip.\nflip causes g = 1.\n")
    rt = AgentRuntime(t, 3, State({"f": 0, "g": 0}))
    assert rt.expected_state(frozenset({"up", "flip"})) == {"f": 1, "g": 1}


def test_idle_until_horizon_after_success():
    rt = AgentRuntime(parse_theory(TWO_WAYS), 3, State({"f": 2, "g": 0}))
    assert rt.propose() == frozenset()
    assert rt.is_successful()
