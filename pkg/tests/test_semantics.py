import pytest

from baac.lang.parser import parse_constraint, parse_expr, parse_theory
from baac.problem import Problem, State
from baac.semantics import (
    SearchSpaceTooLarge, Trajectory, apply_transition, brute_force_plans, chain,
    check_trajectory, desired_effects, eval_expr, executable_in, holds, inertial_complete,
    solve_effects,
)

from conftest import load

GUITAR_START_INIT = {"guitars": 2, "neck": 5, "body": 3, "strings": 24, "pickup": 6, "seller_account": 0}


def ev(seq, j, text):
    return eval_expr(seq, j, parse_expr(text))


def test_eval_previous_value(seq_f):
    assert ev(seq_f, 1, "f@-1") == 5


def test_eval_clamps_before_start(seq_f):
    assert ev(seq_f, 0, "f@-2") == 5
    assert ev(seq_f, 1, "f@-4") == 5


def test_eval_reified(seq_f):
    assert ev(seq_f, 1, "rei(f > 6)") == 1
    assert ev(seq_f, 0, "rei(f > 6)") == 0


def test_eval_abs(seq_f):
    assert ev(seq_f, 1, "abs(f@-1 - f)") == 2


@pytest.mark.parametrize("text,value", [
    ("7 / 2", 3), ("-7 / 2", -3), ("7 / -2", -3), ("7 mod 3", 1), ("-7 mod 3", -1), ("2 * 3 - 4", 2),
])
def test_eval_arithmetic_truncates(text, value):
    assert ev([State({"f": 0})], 0, text) == value


def test_division_by_zero_is_false():
    seq = [State({"f": 0})]
    assert not holds(seq, 0, parse_constraint("3 / f = 0"))
    assert not holds(seq, 0, parse_constraint("3 mod f != 7"))


def test_holds_examples(seq_f):
    assert holds(seq_f, 1, parse_constraint("f > 6 and f@-1 < 6"))
    assert holds(seq_f, 0, parse_constraint("pair(f, g) = pair(f, g)"))
    assert holds(seq_f, 0, parse_constraint("f = 5 or f = 9"))
    assert not holds(seq_f, 0, parse_constraint("not (f = 5)"))


def test_solve_forced():
    seq = [State({"f": 0})]
    assert solve_effects(seq, parse_constraint("f = f@-1 + 1"), {"f": range(3)}) == {"f": 1}


def test_solve_contradiction():
    assert solve_effects([State({"f": 0})], parse_constraint("f = 1 and f = 2"), {"f": range(3)}) is None


def test_solve_smallest_of_many():
    seq = [State({"f": 0, "g": 0})]
    c = parse_constraint("f + g = 3")
    assert solve_effects(seq, c, {"f": range(4), "g": range(4)}) == {"f": 0, "g": 3}


def test_solve_out_of_domain():
    seq = [State({"f": 2})]
    assert solve_effects(seq, parse_constraint("f = f@-1 + 1"), {"f": range(3)}) is None


def test_solve_accept_filter():
    seq = [State({"f": 0})]
    sigma = solve_effects(seq, parse_constraint("f > 0"), {"f": range(4)}, accept=lambda s: s["f"] != 1)
    assert sigma == {"f": 2}


def test_inertial_complete():
    seq = [State({"f": 1, "g": 2})]
    assert inertial_complete({}, seq) == seq[-1]
    assert inertial_complete({"f": 9}, seq) == {"f": 9, "g": 2}
    assert inertial_complete({"f": 3, "g": 4}, seq) == {"f": 3, "g": 4}


def test_executable_make_guitar(guitar_maker):
    assert executable_in(guitar_maker, [State(GUITAR_START_INIT)], "make_guitar")
    assert not executable_in(guitar_maker, [State({**GUITAR_START_INIT, "strings": 5})], "make_guitar")


def test_exec_axioms_are_disjunctive():
    t = parse_theory("agent a.\nfluent f valued 0..3.\naction x.\nexecutable x if f = 1.\nexecutable x if f = 2.")
    assert executable_in(t, [State({"f": 2})], "x")
    assert not executable_in(t, [State({"f": 3})], "x")


def test_desired_effects_pick_firing_law(guitar_maker):
    c = str(desired_effects(guitar_maker, [State(GUITAR_START_INIT)], "make_guitar"))
    assert "pickup = pickup@-1 - 2" in c
    assert "pickup = pickup@-1 - 1" not in c


def test_desired_effects_throw():
    black = load("volley_black_2v2.baac")
    start = {f: d[0] for f, d in black.domains.items()}
    start.update(x_b1=3, y_b1=1, hasball_b1=1, x_b2=1, y_b2=5)
    seq = [State(start)]
    c = desired_effects(black, seq, "throw_b1_n_3")
    sigma = solve_effects(seq, c, black.domains)
    assert (sigma["x_ball"], sigma["y_ball"]) == (3, 4)


def test_desired_effects_none_fire():
    t = parse_theory("agent a.\nfluent f valued 0..3.\naction x.\nexecutable x.\nx causes f = 1 if f = 3.")
    assert str(desired_effects(t, [State({"f": 0})], "x")) == "true"


def test_apply_empty_set():
    p = Problem([load("guitar_maker.baac")])
    seq = [State(GUITAR_START_INIT)]
    assert apply_transition(seq, [], p) == seq[-1]


def test_apply_clash():
    p = Problem([load("micro_a.baac"), load("micro_b.baac"), load("micro_c.baac")])
    seq = [State({"f": 0})]
    assert apply_transition(seq, [("a", "act_a"), ("b", "act_b")], p) is None


def test_apply_make_guitar():
    p = Problem([load("guitar_maker.baac")])
    nxt = apply_transition([State(GUITAR_START_INIT)], [("guitar_maker", "make_guitar")], p)
    assert nxt == {"guitars": 3, "neck": 4, "body": 2, "strings": 18, "pickup": 4, "seller_account": 0}


INC = """agent a.
fluent f valued 0..2.
action inc.
executable inc.
inc causes f = f@-1 + 1 if f < 2.
goal f = 2.
initially f = 0.
"""


def test_brute_force_inc_to_two():
    t = parse_theory(INC)
    plans = brute_force_plans(t, {"f": 0}, 2)
    assert [p.actions for p in plans] == [(frozenset({("a", "inc")}),) * 2]


def test_brute_force_zero_horizon():
    t = parse_theory(INC)
    plans = brute_force_plans(t, {"f": 2}, 0)
    assert [p.actions for p in plans] == [()]


def test_brute_force_unreachable():
    t = parse_theory(INC)
    assert brute_force_plans(t, {"f": 0}, 1) == set()


def test_brute_force_guard():
    t = parse_theory(INC)
    with pytest.raises(SearchSpaceTooLarge):
        brute_force_plans(t, {"f": 0}, 30, node_limit=1000)


def _inc_problem():
    return Problem([parse_theory(INC)])


def test_check_valid_chain():
    p = _inc_problem()
    traj = chain(p, {"f": 0}, [{("a", "inc")}, {("a", "inc")}])
    rep = check_trajectory(p, traj, 2)
    assert rep.valid and rep.success == {"a": True}


def test_check_spurious_change_is_inertia_violation():
    p = _inc_problem()
    traj = Trajectory((State({"f": 0}), State({"f": 1})), (frozenset(),))
    rep = check_trajectory(p, traj, 1)
    assert [v.kind for v in rep.violations] == ["inertia"]


def test_check_wrong_effect():
    p = _inc_problem()
    traj = Trajectory((State({"f": 0}), State({"f": 2})), (frozenset({("a", "inc")}),))
    assert [v.kind for v in check_trajectory(p, traj, 1).violations] == ["effect"]


def test_check_not_executable_and_unknown():
    t = parse_theory(INC.replace("executable inc.", "executable inc if f < 1."))
    p = Problem([t])
    traj = Trajectory((State({"f": 1}), State({"f": 2})), (frozenset({("a", "inc")}),))
    assert "not_executable" in [v.kind for v in check_trajectory(p, traj, 1).violations]
    traj = Trajectory((State({"f": 1}), State({"f": 1})), (frozenset({("a", "jump")}),))
    assert "unknown_action" in [v.kind for v in check_trajectory(p, traj, 1).violations]


def test_check_length():
    p = _inc_problem()
    traj = Trajectory((State({"f": 0}),), ())
    assert [v.kind for v in check_trajectory(p, traj, 2).violations] == ["length"]


def test_check_global_violation():
    t = parse_theory(INC.replace("initially f = 0.", "always f < 2."))
    p = Problem([t])
    traj = Trajectory((State({"f": 1}), State({"f": 2})), (frozenset({("a", "inc")}),))
    assert [v.kind for v in check_trajectory(p, traj, 1).violations] == ["global"]


def test_check_goal_already_true_with_no_actions():
    p = Problem([parse_theory(INC.replace("initially f = 0.", ""))])
    traj = Trajectory((State({"f": 2}),) * 4, (frozenset(),) * 3)
    rep = check_trajectory(p, traj, 3)
    assert rep.valid and rep.success["a"]


def test_check_rally_fixture():
    from baac.fixture import load_fixture
    from baac.lang.settings import load_settings
    from baac.runner import build_problem, load_theories
    from conftest import DOMAINS

    traj, settings = load_fixture(DOMAINS / "rally.fixture")
    cfg = load_settings(DOMAINS / settings)
    rep = check_trajectory(build_problem(load_theories(cfg)), traj, 9)
    assert rep.valid, rep.lines()
    throws = [i + 1 for i, xs in enumerate(traj.actions) if any(a.startswith("throw") for _, a in xs)]
    assert throws == [1, 3, 5, 7]
