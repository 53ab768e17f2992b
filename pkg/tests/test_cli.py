import dataclasses
import logging
from pathlib import Path

import pytest

from baac.cli import main
from baac.fixture import format_fixture, parse_fixture
from baac.lang.settings import RenderHints, Piece, load_settings, parse_settings
from baac.problem import State
from baac.render import render_frame, render_text
from baac.runner import build_problem, load_theories, run
from baac.semantics import Trajectory, check_trajectory
from baac.trace import parse_trace

from conftest import DOMAINS

RALLY = DOMAINS / "rally.fixture"
GOLDEN = Path(__file__).parent / "golden"


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_rally_valid(capsys):
    code, out, _ = run_cli(capsys, "check", RALLY)
    assert code == 0 and out.splitlines()[0] == "valid"


def _fixture_copy(tmp_path, edit):
    lines = RALLY.read_text().splitlines()
    lines = edit(lines)
    lines = [l.replace("% settings ", f"% settings {DOMAINS}/") for l in lines]
    path = tmp_path / "edited.fixture"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_check_mutated_fixture(tmp_path, capsys):
    def bump(lines):
        k = next(i for i, l in enumerate(lines) if l.startswith("STEP 4 "))
        lines[k] = lines[k].replace("y_w2=4", "y_w2=3")
        return lines

    code, out, _ = run_cli(capsys, "check", _fixture_copy(tmp_path, bump))
    assert code == 1
    assert "step 4" in out and ("inertia" in out or "effect" in out)


def test_check_truncated_fixture(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "check", _fixture_copy(tmp_path, lambda lines: lines[:-2]))
    assert code == 1 and "length" in out


def test_check_bad_fixture_is_input_error(tmp_path, capsys):
    path = tmp_path / "bad.fixture"
    path.write_text("STEP 0 | nonsense\n")
    code, _, err = run_cli(capsys, "check", path, "--settings", DOMAINS / "micro_supervisor.settings")
    assert code == 2 and "error" in err


def test_render_rally(capsys):
    code, out, _ = run_cli(capsys, "render", RALLY)
    assert code == 0
    assert out == (GOLDEN / "rally_frames.txt").read_text()
    frames = out.split("Time ")[1:]
    assert len(frames) == 10
    for frame in frames:
        rows = frame.splitlines()[1:]
        assert len(rows) == 7 and {len(r) for r in rows} == {13}
    assert "Q" in out


def test_render_glyphs():
    hints = RenderHints(5, 3, 3, (Piece("Y", "X", "xa", "ya", "ha"), Piece("O", "Q", "xb", "yb", "hb")),
                        ("o", "xo", "yo"))
    state = State({"xa": 1, "ya": 1, "ha": 0, "xb": 5, "yb": 3, "hb": 1, "xo": 5, "yo": 3})
    assert render_frame(state, hints) == [
        "***|***", "*  | Q*", "*  |  *", "*Y |  *", "***|***",
    ]
    assert render_text([], hints) == ""


def test_render_without_hints_warns(tmp_path, capsys, caplog):
    trace = tmp_path / "micro.trace"
    assert run_cli(capsys, "run", DOMAINS / "micro_supervisor.settings", "--trace-out", trace)[0] == 1
    with caplog.at_level(logging.WARNING):
        code, out, _ = run_cli(capsys, "render", trace)
    assert code == 0 and out == ""
    assert "no render hints" in caplog.text


def test_render_run_trace(tmp_path, capsys):
    trace = tmp_path / "v.trace"
    run_cli(capsys, "run", DOMAINS / "volleyball_1v1.settings", "--trace-out", trace)
    code, out, _ = run_cli(capsys, "render", trace)
    assert code == 0 and out.count("Time ") == 9


def test_run_prints_verdicts(tmp_path, capsys):
    trace = tmp_path / "t.trace"
    code, out, _ = run_cli(capsys, "run", DOMAINS / "micro_negotiate.settings", "--trace-out", trace)
    assert code == 1
    assert out.splitlines() == ["a: failure", "b: success", "c: failure"]
    assert trace.read_text().startswith("HEADER\tbaac-trace")


def test_run_to_stdout(capsys):
    code, out, _ = run_cli(capsys, "run", DOMAINS / "micro_supervisor.settings", "--strategy", "random", "--seed", "3")
    data = parse_trace(out)
    assert data.settings["strategy"] == "random" and data.settings["seed"] == "3"
    assert len(data.steps) == 4 and code in (0, 1)


def test_same_seed_same_trace(tmp_path, capsys):
    paths = [tmp_path / "one.trace", tmp_path / "two.trace"]
    for p in paths:
        run_cli(capsys, "run", DOMAINS / "volleyball_2v2.settings", "--seed", 7, "--trace-out", p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


@pytest.mark.parametrize("name", ["micro_negotiate.settings", "volleyball_1v1.settings"])
def test_concurrent_matches_deterministic(name):
    cfg = load_settings(DOMAINS / name)
    a = run(cfg).trace
    b = run(dataclasses.replace(cfg, deterministic=False)).trace
    assert a == b


def _replayed(result, cfg):
    data = parse_trace(result.trace)
    traj = Trajectory(tuple(data.states()), tuple(data.action_sets()))
    text = format_fixture(traj, data.order)
    again, _ = parse_fixture(text)
    return check_trajectory(build_problem(load_theories(cfg)), again, cfg.horizon)


@pytest.mark.parametrize("name", ["micro_negotiate.settings", "micro_supervisor.settings",
                                  "volleyball_1v1.settings", "volleyball_2v2.settings"])
def test_trace_replays_as_valid_fixture(name):
    cfg = load_settings(DOMAINS / name)
    result = run(cfg)
    assert result.report.valid
    rep = _replayed(result, cfg)
    assert rep.valid, rep.lines()


def test_horizon_zero_run(tmp_path):
    (tmp_path / "a.baac").write_text("agent a.\nfluent f valued 0..3.\ninitially f = 2.\ngoal f = 2.\n")
    cfg = dataclasses.replace(parse_settings("horizon=1\ntheory=a.baac", base_dir=tmp_path), horizon=0)
    result = run(cfg)
    assert result.exit_code == 0
    assert "STEP" not in result.trace
    assert result.verdicts == {"a": "success"}


@pytest.mark.parametrize("settings", ["horizon=0\n", "horizon=2\n", "horizon=2\ntheory=missing.baac\n"])
def test_config_errors_exit_two(tmp_path, capsys, settings):
    path = tmp_path / "bad.settings"
    path.write_text(settings)
    code, _, err = run_cli(capsys, "run", path)
    assert code == 2 and err.startswith("error:")


def test_contradictory_initial_state_exits_two(tmp_path, capsys):
    (tmp_path / "a.baac").write_text("agent a.\nfluent f valued 0..3.\ninitially f = 1.\n")
    (tmp_path / "b.baac").write_text("agent b.\nfluent f valued 0..3.\ninitially f >= 2.\n")
    (tmp_path / "s.settings").write_text("horizon=2\ntheory=a.baac\ntheory=b.baac\n")
    assert run_cli(capsys, "run", tmp_path / "s.settings")[0] == 2
