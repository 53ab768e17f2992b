import random

import pytest
from hypothesis import given, settings, strategies as st

from baac.lang.ast import And, Cmp, Fluent, Num, fluent_refs
from baac.lang.parser import ParseError, parse_constraint, parse_theory
from baac.lang.settings import SettingsError, parse_settings
from baac.lang.validate import validate_problem

import gen
from conftest import DOMAINS, load

HEAD = "agent a.\nfluent f valued 0..5.\nfluent g valued 0..5.\n"


def test_initially_is_a_conjunction():
    t = parse_theory("agent m.\nfluent guitars, body valued 0..20.\ninitially guitars = 2 and body = 3.")
    (init,) = t.initially
    assert init == And((Cmp("=", Fluent("guitars"), Num(2)), Cmp("=", Fluent("body"), Num(3))))


def test_goal():
    t = parse_theory("agent m.\nfluent guitars valued 0..20.\ngoal guitars = 10.")
    assert t.goals == (Cmp("=", Fluent("guitars"), Num(10)),)


def test_singleton_domain():
    t = parse_theory("agent a.\nfluent f valued 0..0.")
    assert list(t.fluent("f").domain) == [0]


def test_explicit_set_domain_is_sorted():
    t = parse_theory("agent a.\nfluent f valued [3, 1, 2].")
    assert tuple(t.fluent("f").domain) == (1, 2, 3)


def test_future_annotation_rejected():
    with pytest.raises(ParseError):
        parse_theory(HEAD + "goal f@1 > 0.")


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_theory(HEAD + "goal f >> 1.")
    assert info.value.line == 4


@pytest.mark.parametrize("body", [
    "goal h = 1.",                         # undeclared fluent
    "action x.\nx causes f = 1.",          # action without executability
    "fluent k valued 3..1.",               # empty domain
    "goal f = 1 / 0.",                     # literal division by zero
    "action x.\nexecutable x if true.\nx causes f > 1.",  # non-basic effect
])
def test_rejected(body):
    with pytest.raises(ParseError):
        parse_theory(HEAD + body)


def test_pair_is_normalized():
    c = parse_constraint("pair(f, g) = pair(1, 2)")
    assert c == And((Cmp("=", Fluent("f"), Num(1)), Cmp("=", Fluent("g"), Num(2))))
    d = parse_constraint("pair(f, g) != pair(1, 2)")
    assert "or" in str(d)


def test_aliases():
    assert parse_constraint("f eq 1") == parse_constraint("f = 1")
    assert parse_constraint("f neq 1") == parse_constraint("f != 1")
    assert parse_constraint("f leq 1") == parse_constraint("f <= 1")
    assert parse_constraint("f lt 1") == parse_constraint("f < 1")


def test_conflict_and_failure_options_keep_order():
    t = parse_theory(HEAD + """
action x on_conflict forego provided g = 0 on_conflict retry_after 2 on_conflict arbitrate
    on_failure retry_after 1 if g = 0 on_failure replan if true add_goal f = 2 on_failure fail.
executable x if true.
x causes f = 1.
""")
    a = t.action("x")
    assert [o.kind for o in a.on_conflict] == ["forego", "retry_after", "arbitrate"]
    assert a.on_conflict[1].steps == 2
    assert [o.kind for o in a.on_failure] == ["retry_after", "replan", "fail"]


def test_retry_after_zero_rejected():
    with pytest.raises(ParseError):
        parse_theory(HEAD + "action x on_conflict retry_after 0.\nexecutable x.")


@pytest.mark.parametrize("k", [1, 2, 5])
def test_template_makes_k_copies(k):
    t = parse_theory(HEAD + f"forall X in 1..{k}:\n    action a{{X}}.\n"
                     f"forall X in 1..{k}:\n    executable a{{X}} if f < {{X}}.\n")
    assert len(t.actions) == k
    assert len(t.executability) == k
    assert t.exec_conditions(f"a{k}") == (Cmp("<", Fluent("f"), Num(k)),)


def test_bundled_domains_parse():
    for path in sorted(DOMAINS.glob("*.baac")):
        parse_theory(path.read_text())


def test_round_trip_bundled():
    for path in sorted(DOMAINS.glob("*.baac")):
        t = parse_theory(path.read_text())
        assert parse_theory(t.to_text()) == t, path.name


def test_validate_identical_decls():
    a = parse_theory("agent a.\nfluent f valued 0..5.")
    b = parse_theory("agent b.\nfluent f valued 0..5.")
    assert validate_problem([a, b]) == []


def test_validate_domain_mismatch():
    a = parse_theory("agent a.\nfluent f valued 0..5.")
    b = parse_theory("agent b.\nfluent f valued 0..9.")
    diags = validate_problem([a, b])
    assert [d.severity for d in diags] == ["error"]


def test_validate_contradictory_initial_literals():
    a = parse_theory("agent a.\nfluent f valued 0..5.\ninitially f = 1.")
    b = parse_theory("agent b.\nfluent f valued 0..5.\ninitially f = 2.")
    assert any(d.severity == "error" for d in validate_problem([a, b]))


def test_validate_unknown_request_target_warns():
    a = parse_theory("agent a.\nknown_agents ghost.\nfluent f valued 0..5.\nrequest f = 1 to_agent ghost if f = 0.")
    diags = validate_problem([a])
    assert diags and all(d.severity == "warning" for d in diags)


def test_settings_defaults():
    cfg = parse_settings("horizon=9\nseed=1")
    assert (cfg.horizon, cfg.seed) == (9, 1)
    assert (cfg.strategy, cfg.mode, cfg.deterministic) == ("max_subset", "supervisor", True)


def test_settings_random_strategy():
    assert parse_settings("horizon=3\nstrategy=random").strategy == "random"


@pytest.mark.parametrize("text", ["horizon=0", "horizon=-2", "colour=blue", "horizon=3\nstrategy=best",
                                  "horizon=3\nmode=vote", "horizon", "horizon=x"])
def test_settings_errors(text):
    with pytest.raises(SettingsError):
        parse_settings(text)


def test_settings_comments_and_theories(tmp_path):
    cfg = parse_settings("# a comment\nhorizon=4\ntheory=a.baac\ntheory=b.baac\n", base_dir=tmp_path)
    assert [p.name for p in cfg.theory_paths()] == ["a.baac", "b.baac"]


def test_bundled_settings_load():
    from baac.lang.settings import load_settings
    for path in sorted(DOMAINS.glob("*.settings")):
        cfg = load_settings(path)
        assert all(p.exists() for p in cfg.theory_paths())


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=1000, deadline=None)
@given(seeds)
def test_annotations_never_in_future(seed):
    c = parse_constraint(gen.constraint(random.Random(seed), ("f", "g"), max_back=4))
    assert all(r.t <= 0 for r in fluent_refs(c))


@settings(max_examples=1000, deadline=None)
@given(seeds)
def test_constraint_print_round_trip(seed):
    c = parse_constraint(gen.constraint(random.Random(seed), ("f", "g"), max_back=4))
    assert parse_constraint(str(c)) == c


@settings(max_examples=1000, deadline=None)
@given(seeds)
def test_theory_print_round_trip(seed):
    rng = random.Random(seed)
    text = gen.theory_text(rng)
    text += "".join(f"goal {gen.constraint(rng, gen.SMALL, 0)}.\n" for _ in range(rng.randint(0, 2)))
    text += "".join(f"always {gen.constraint(rng, gen.SMALL)}.\n" for _ in range(rng.randint(0, 2)))
    text += f"x0 on_conflict forego provided {gen.constraint(rng, gen.SMALL, 0)} on_failure fail.\n".replace(
        "x0 on_conflict", "action y on_conflict")
    text += "executable y.\n"
    t = parse_theory(text)
    assert parse_theory(t.to_text()) == t


@settings(max_examples=1000, deadline=None)
@given(seeds)
def test_future_annotation_always_rejected(seed):
    rng = random.Random(seed)
    text = gen.constraint(rng, ("f", "g"))
    with pytest.raises(ParseError):
        parse_constraint(f"({text}) and f@{rng.randint(1, 5)} = 0")
