from __future__ import annotations

import pytest

from recurlab.arena import check_and_apply, move, new_game
from recurlab.chains import (AnalysisError, S4Inventory, S4Literal, S6Literal, build_s4_chains,
                             build_s6_chains, check_s4_lemmas, check_s6_lemmas, extract_s4,
                             extract_s6, induce_s4, induce_s6)
from recurlab.environments import CStrategy, DStrategy
from recurlab.formula import instantiate_scheme
from recurlab.harness import MatchConfig, run_match

S4_C = instantiate_scheme("s4-instance", "c")
S6_U = instantiate_scheme("s6-instance", "u")
fs = frozenset


def _after_split():
    c = CStrategy()
    c.start(S4_C)
    s = new_game(S4_C)
    run = list(c.step(s, 1, None))
    for m in run:
        s = check_and_apply(s, m)
    mv = move("T 3..5")
    s = check_and_apply(s, mv)
    run.append(mv)
    batch = c.step(s, 2, mv)
    run += batch
    led = c.ledger()
    heads = ((led["m"], led["n1"]), (led["m"], led["n2"]))
    return run, heads


def test_s4_inventory_right_after_split():
    run, heads = _after_split()
    inv = extract_s4(S4_C, run, heads=heads)
    assert {l.key[1:] for l in inv.positive()} == set(heads)
    chains = build_s4_chains(inv)
    assert [c.literals for c in chains] == [((True,) + heads[0],), ((True,) + heads[1],)]
    assert all(not c.is_chain for c in chains)
    assert all(r.ok for r in check_s4_lemmas(inv, chains))
    interp, details = induce_s4(inv, chains)
    assert details["head"] == 1
    assert not interp.elementary["p"](*heads[0]) and interp.elementary["p"](*heads[1])


def test_s4_empty_trace():
    inv = extract_s4(S4_C, [])
    assert inv.literals == {} and build_s4_chains(inv) == []
    res = check_s4_lemmas(inv, [])
    assert all(r.ok for r in res)
    assert res[1].detail == "vacuous"
    _, details = induce_s4(inv, [])
    assert details["mode"] == "all-true"


def test_s4_activation_rounds_recorded():
    run, heads = _after_split()
    inv = extract_s4(S4_C, run, rounds=[1, 2, 2, 2, 2], heads=heads)
    assert inv.activation[1] == 1 and inv.activation[5] == 2
    assert inv.literals[(True,) + heads[0]].at == 2
    assert any(row.startswith(f"p({heads[0][0]},{heads[0][1]})") for row in inv.table())


def _inventory(keys, mates, heads):
    lits = {k: S4Literal(*k) for k in keys}
    consts = sorted({x for k in keys for x in k[1:]})
    return S4Inventory(lits, mates, {c: i for i, c in enumerate(reversed(consts), 1)}, heads)


def test_induce_s4_rejects_two_complete_heads():
    keys = [(True, 5, 6), (False, 5, 6), (True, 1, 8), (False, 1, 8),
            (True, 5, 7), (False, 5, 7), (True, 1, 9), (False, 1, 9)]
    mates = {(5, 6): {(1, 8)}, (5, 7): {(1, 9)}}
    inv = _inventory(keys, mates, ((5, 6), (5, 7)))
    chains = build_s4_chains(inv)
    assert sum(c.complete() for c in chains) == 2
    assert not check_s4_lemmas(inv, chains)[4].ok
    with pytest.raises(AnalysisError):
        induce_s4(inv, chains)


def test_induce_s4_picks_incomplete_head():
    keys = [(True, 5, 6), (False, 5, 6), (True, 1, 8), (False, 1, 8),
            (True, 5, 7), (False, 5, 7), (True, 1, 9)]
    mates = {(5, 6): {(1, 8)}, (5, 7): {(1, 9)}}
    inv = _inventory(keys, mates, ((5, 6), (5, 7)))
    interp, details = induce_s4(inv, build_s4_chains(inv))
    assert details["head"] == 2
    assert details["false_atoms"] == [[1, 9], [5, 7]]
    assert interp.elementary["p"](5, 6)


def test_s4_threadmate_cycle_is_an_error():
    inv = _inventory([(True, 5, 6), (False, 5, 6)], {(5, 6): {(5, 6)}}, ((5, 6),))
    with pytest.raises(AnalysisError):
        build_s4_chains(inv)


def test_s6_after_first_round_of_d():
    d = DStrategy()
    d.start(S6_U)
    s = new_game(S6_U)
    for m in d.step(s, 1, None):
        s = check_and_apply(s, m)
    lits = extract_s6(s)
    chains = build_s6_chains(lits)
    assert [c.type for c in chains] == [(1,)]
    assert str(chains[0]) == "~P1"
    res = check_s6_lemmas(lits, chains, 2)
    assert all(r.ok for r in res)
    interp, details = induce_s6(chains)
    only = chains[0].literals[0]
    # the first disjunct's P-run has the environment's constant as a machine move
    assert interp.enumeration["P"](only.bot, only.top)
    assert details["reachable"] == ["~P1"]


def _synthetic():
    return [
        S6Literal(1, None, False, fs(), fs({10})),
        S6Literal(2, "0", True, fs({10}), fs()),
        S6Literal(3, "0", False, fs(), fs({11})),
        S6Literal(4, "0", False, fs(), fs({12})),
        S6Literal(8, "1", True, fs({11}), fs()),
        S6Literal(8, "0", True, fs(), fs({13})),
    ]


def test_s6_synthetic_chains_and_types():
    lits = _synthetic()
    chains = build_s6_chains(lits)
    assert [c.type for c in chains] == [(1,), (1, 2), (1, 2, 3), (1, 2, 4), (1, 2, 3, 8)]
    res = check_s6_lemmas(lits, chains, 2)
    assert [r.ok for r in res] == [True, True, True]
    interp, details = induce_s6(chains)
    pred = interp.enumeration["P"]
    assert pred(fs({11}), fs())          # P8 on thread 1 is reachable
    assert not pred(fs(), fs({13}))      # P8 on thread 0 is not
    assert "P8_1" in details["reachable"]


def test_s6_duplicate_content_fails_first_lemma():
    lits = _synthetic() + [S6Literal(7, "1", False, fs(), fs({12}))]
    res = check_s6_lemmas(lits, build_s6_chains(lits))
    assert not res[0].ok
    assert "~P4_0" in res[0].detail and "~P7_1" in res[0].detail


def test_s6_revisit_raises():
    lits = [S6Literal(1, None, False, fs(), fs({10})),
            S6Literal(2, "0", True, fs({10}), fs()),
            S6Literal(3, "0", False, fs(), fs({10}))]
    with pytest.raises(AnalysisError):
        build_s6_chains(lits)


def test_s6_silent_match_reaches_only_first_disjunct():
    tr = run_match(MatchConfig("s6", "u", "silent", "d", 4))
    assert tr.analysis.ok
    assert [str(c) for c in tr.analysis.chain_objects] == ["~P1"]
    assert not tr.machine_won
