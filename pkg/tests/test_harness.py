from __future__ import annotations

import json

import pytest

from recurlab import cli
from recurlab.arena import B, T, move
from recurlab.formula import Kind, atoms
from recurlab.harness import (MatchConfig, ReplayMismatch, TableConfig, check_replay,
                              interpretation_family, replay_file, run_match, scheme_formula)
from recurlab.machines import MACHINES, Machine


def test_short_production_random_env_machine_wins_everywhere():
    tr = run_match(MatchConfig("short-prod", "prec", "sp", "random", 50, seed=7))
    assert tr.illegal is None and not tr.drain_exceeded
    assert len(tr.verdicts) == 6
    assert all(rep.winner is T for _, rep in tr.verdicts)
    assert tr.machine_won


def test_s4_naive_against_c_loses():
    tr = run_match(MatchConfig("s4", "aleph0", "naive", "c", 20))
    assert tr.analysis is not None and tr.analysis.ok
    assert all(rep.winner is B for _, rep in tr.verdicts)


def test_single_silent_round():
    tr = run_match(MatchConfig("short", "p", "silent", "silent", 1))
    assert len(tr.rounds) == 1 and tr.run == []
    recs = tr.records()
    assert [r["type"] for r in recs] == ["config", "round"] + ["verdict"] * 6 + ["summary"]


def test_rounds_must_be_positive():
    with pytest.raises(ValueError):
        MatchConfig("short", "p", "sp", "random", 0)


def test_scheme_families():
    kinds = {a.letter.kind for a in atoms(scheme_formula("short", "p", "elementary"))}
    assert kinds == {Kind.ELEMENTARY}
    mixed = {a.letter.name: a.letter.kind for a in atoms(scheme_formula("long", "p", "mixed"))}
    assert set(mixed.values()) == {Kind.ELEMENTARY, Kind.ENUMERATION}
    with pytest.raises(ValueError):
        scheme_formula("short", "p", "weird")


def test_interpretation_family_is_deterministic():
    f = scheme_formula("long", "c", "mixed")
    a = [i.description for i in interpretation_family(f)]
    assert a == [i.description for i in interpretation_family(f)] and len(a) == 6


def test_trace_is_deterministic_and_replays(tmp_path):
    cfg = dict(scheme="long", bang="c", machine="k", env="schedule", rounds=30, seed=4)
    one = run_match(MatchConfig(**cfg, out=str(tmp_path / "a.jsonl")))
    two = run_match(MatchConfig(**cfg, out=str(tmp_path / "b.jsonl")))
    a = (tmp_path / "a.jsonl").read_bytes()
    assert a.replace(b"a.jsonl", b"b.jsonl") == (tmp_path / "b.jsonl").read_bytes()
    check_replay(one)
    assert replay_file(tmp_path / "a.jsonl") == len(two.rounds)


def test_replay_detects_tampering(tmp_path):
    path = tmp_path / "t.jsonl"
    run_match(MatchConfig("short", "p", "sp", "random", 10, seed=1, out=str(path)))
    lines = [json.loads(x) for x in path.read_text().splitlines()]
    for r in lines:
        if r["type"] == "round":
            r["digest"] = "0" * 64
            break
    path.write_text("".join(json.dumps(r) + "\n" for r in lines))
    with pytest.raises(ReplayMismatch):
        replay_file(path)


class _Cheater(Machine):
    name = "cheater"

    def step(self, s, rnd):
        return move("T 3.:") if rnd == 2 else None


def test_illegal_machine_move_is_recorded(monkeypatch, tmp_path):
    monkeypatch.setitem(MACHINES, "cheater", _Cheater)
    path = tmp_path / "i.jsonl"
    tr = run_match(MatchConfig("s4", "c", "cheater", "c", 5, out=str(path)))
    assert tr.illegal["move"] == "T 3.:" and tr.illegal["round"] == 2
    assert tr.run[-1] == move("T 3.:")
    assert all(rep.winner is B for _, rep in tr.verdicts)
    check_replay(tr)
    assert replay_file(path) == 1


def test_table_config_from_text():
    tc = TableConfig.from_text("[table]\nmatches = 3\nrounds = 12\nfamilies = elementary, mixed\n")
    assert (tc.matches, tc.rounds, tc.families) == (3, 12, ("elementary", "mixed"))
    assert TableConfig.from_text("seed = 9").seed == 9
    assert TableConfig.from_text("[table]\nmatches = 5   ; per cell\n").matches == 5


def test_cli_run_writes_trace_and_replays(tmp_path, capsys):
    out = tmp_path / "run.jsonl"
    code = cli.main(["run", "--scheme", "short", "--bang", "prec", "--machine", "sp",
                     "--env", "random", "--rounds", "20", "--seed", "3", "--out", str(out)])
    assert code == 0
    first = json.loads(out.read_text().splitlines()[0])
    assert first["type"] == "config" and first["scheme"] == "short-prod"
    assert "overall: T" in capsys.readouterr().err
    assert cli.main(["replay", str(out)]) == 0
    assert "rounds replayed" in capsys.readouterr().out


def test_cli_run_to_stdout_and_errors(capsys):
    assert cli.main(["run", "--scheme", "s6", "--bang", "u", "--machine", "silent",
                     "--env", "d", "--rounds", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert json.loads(lines[-1])["type"] == "summary"
    assert cli.main(["run", "--scheme", "s4", "--bang", "p", "--machine", "naive",
                     "--env", "c", "--rounds", "3"]) == 2


def test_cli_table_small(tmp_path, capsys):
    cfg = tmp_path / "t.ini"
    cfg.write_text(f"[table]\nmatches = 2\nrounds = 16\nd_rounds = 4\nout = {tmp_path / 'traces'}\n")
    code = cli.main(["table", "--config", str(cfg)])
    text = capsys.readouterr().out
    assert code == 0, text
    assert text.splitlines()[1].split() == ["short", "production", "VALID", "INVALID", "INVALID"]
    assert text.splitlines()[2].split() == ["long", "production", "VALID", "VALID", "INVALID"]
    assert any((tmp_path / "traces").iterdir())
