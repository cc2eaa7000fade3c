import json

import pytest
import yaml

from conftest import CONFIGS
from verdictgame.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, build_parser, cmd_play, main


def test_solve_exact(capsys, tmp_path):
    out = tmp_path / "solve.json"
    assert main(["solve", "--config", str(CONFIGS / "court_tiny.yaml"), "--out", str(out)]) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ["value X: -1", "value Y: 1"]
    report = json.loads(out.read_text())
    assert report["status"] == "ok" and report["values"] == {"X": -1.0, "Y": 1.0}


def test_solve_bayesian(capsys):
    assert main(["solve", "--config", str(CONFIGS / "slip.yaml")]) == EXIT_OK
    assert "value X: 0.5" in capsys.readouterr().out


def test_solve_without_pure_equilibrium(capsys):
    assert main(["solve", "--config", str(CONFIGS / "no_pure_pbe.yaml")]) == EXIT_RUNTIME
    assert capsys.readouterr().out.strip() == "no pure PBE"


def test_solve_search_is_seeded(capsys):
    args = ["solve", "--config", str(CONFIGS / "court_tiny.yaml"), "--engine", "mcts", "--iterations", "300",
            "--seed", "4"]
    main(args)
    first = capsys.readouterr().out
    main(args)
    assert capsys.readouterr().out == first
    assert first.startswith("chosen: ")


def test_missing_config(capsys):
    assert main(["solve", "--config", "/nonexistent.yaml"]) == EXIT_USAGE
    assert "not found" in capsys.readouterr().err


def test_bad_arguments():
    assert main(["solve"]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE


def write_config(tmp_path, mutate):
    data = yaml.safe_load((CONFIGS / "benchmark.yaml").read_text())
    mutate(data)
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


def test_zero_matches_rejected(tmp_path, capsys):
    path = write_config(tmp_path, lambda d: d["experiment"].update(n_matches=0))
    assert main(["simulate", "--config", str(path)]) == EXIT_USAGE
    assert "n_matches" in capsys.readouterr().err


def test_simulate_then_analyze(tmp_path, capsys):
    path = write_config(tmp_path, lambda d: d["experiment"].update(n_matches=15))
    out = tmp_path / "records.jsonl"
    assert main(["simulate", "--config", str(path), "--out", str(out)]) == EXIT_OK
    printed = capsys.readouterr().out
    assert (tmp_path / "records.jsonl.summary.txt").read_text() == printed
    assert main(["analyze", str(out)]) == EXIT_OK
    captured = capsys.readouterr()
    assert captured.out == printed and captured.err == ""


def test_simulate_overwrites_previous_records(tmp_path, capsys):
    path = write_config(tmp_path, lambda d: d["experiment"].update(n_matches=3))
    out = tmp_path / "records.jsonl"
    main(["simulate", "--config", str(path), "--out", str(out)])
    main(["simulate", "--config", str(path), "--out", str(out)])
    assert len(out.read_text().splitlines()) == 6


def test_analyze_flags_tampering(tmp_path, capsys):
    path = write_config(tmp_path, lambda d: d["experiment"].update(n_matches=10))
    out = tmp_path / "records.jsonl"
    main(["simulate", "--config", str(path), "--out", str(out)])
    lines = [json.loads(x) for x in out.read_text().splitlines()]
    victim = next(r for r in lines if r["terminal_verdict"] == "One")
    victim["verdicts"][-1] = "Cont"
    out.write_text("".join(json.dumps(r) + "\n" for r in lines))
    capsys.readouterr()
    assert main(["analyze", str(out)]) == EXIT_OK
    err = capsys.readouterr().err
    assert "replay mismatch" in err and "1 replay mismatch" in err


def test_analyze_empty_and_corrupt(tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert main(["analyze", str(empty)]) == EXIT_OK
    assert capsys.readouterr().out.strip().startswith("arm")
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    assert main(["analyze", str(bad)]) == EXIT_RUNTIME
    assert "line 1" in capsys.readouterr().err


def play(lines, config="play_confess.yaml"):
    feed, shown = iter(lines), []

    def read(prompt):
        try:
            return next(feed)
        except StopIteration:
            raise EOFError from None

    args = build_parser().parse_args(["play", "--config", str(CONFIGS / config)])
    return cmd_play(args, read=read, write=shown.append), shown


def test_play_until_scripted_confession():
    code, shown = play(["1", "2", "1"])
    assert code == EXIT_OK
    assert shown[-2:] == ["verdict: One", "payoffs: X=1, Y=-1"]
    assert shown.count("Y: confess") == 1 and shown.count("Y: deny") == 2


def test_play_reprompts_and_quits():
    code, shown = play(["9", "quit"])
    assert code == EXIT_OK
    assert "choose 1-2" in shown and shown[-1] == "aborted (quit)"


def test_play_eof_aborts():
    code, shown = play([])
    assert code == EXIT_OK and shown[-1] == "aborted (end of input)"


def test_play_needs_a_human():
    with pytest.raises(Exception, match="human"):
        play([], config="benchmark.yaml")
