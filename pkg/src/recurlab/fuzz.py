"""Random formulas, runs and interpretations for property tests."""

from __future__ import annotations

import hashlib
import random
from typing import Sequence

from .adjudicator import Interpretation
from .arena import B, LabeledMove, T, check_and_apply, new_game
from .formula import (And, Atom, BCorec, BRec, Card, ChoiceAll, ChoiceExists, Formula, Kind,
                      Letter, Neg, Or, PCorec, PRec, letters, number_occurrences)
from .oracle import legal_moves_oracle

ENUM_LETTERS = (Letter("P", Kind.ENUMERATION, 0), Letter("Q", Kind.ENUMERATION, 0))
FLAG = Letter("e", Kind.ELEMENTARY, 0)
UNARY = Letter("q", Kind.ELEMENTARY, 1)


def random_formula(rng: random.Random, depth: int = 3, branching_only: bool = False,
                   nnf: bool = True) -> Formula:
    """A random closed formula.  With ``nnf=False`` negations may sit on
    compound subformulas."""
    counter = [0]

    def leaf(bound: list[str]) -> Formula:
        r = rng.random()
        if bound and r < 0.2:
            return Atom(UNARY, (rng.choice(bound),))
        if r < 0.3:
            return Atom(FLAG, ())
        a = Atom(rng.choice(ENUM_LETTERS), ())
        return Neg(a) if rng.random() < 0.4 else a

    def go(d: int, bound: list[str]) -> Formula:
        if d <= 0 or rng.random() < 0.2:
            return leaf(bound)
        kinds = ["and", "or", "all", "exists", "brec", "bcorec"]
        if not branching_only:
            kinds += ["prec", "pcorec"]
        if not nnf:
            kinds.append("neg")
        k = rng.choice(kinds)
        if k in ("and", "or"):
            kids = (go(d - 1, bound), go(d - 1, bound))
            return And(kids) if k == "and" else Or(kids)
        if k in ("all", "exists"):
            counter[0] += 1
            var = f"x{counter[0]}"
            body = go(d - 1, bound + [var])
            return ChoiceAll(var, body) if k == "all" else ChoiceExists(var, body)
        if k == "neg":
            return Neg(go(d - 1, bound))
        child = go(d - 1, bound)
        card = rng.choice((Card.UNCOUNTABLE, Card.ALEPH0))
        return {"brec": lambda: BRec(card, child), "bcorec": lambda: BCorec(card, child),
                "prec": lambda: PRec(child), "pcorec": lambda: PCorec(child)}[k]()

    return number_occurrences(go(depth, []))


def random_run(rng: random.Random, f: Formula, length: int, universe: Sequence[int] = (1, 2, 3),
               depth: int = 2) -> list[LabeledMove]:
    """A legal run of at most ``length`` moves drawn from the oracle's move sets."""
    s = new_game(f, require_nnf=False)
    run = []
    for _ in range(length):
        options = sorted(legal_moves_oracle(s, universe, depth), key=LabeledMove.wire)
        if not options:
            break
        m = rng.choice(options)
        s = check_and_apply(s, m)
        run.append(m)
    return run


def _bit(salt: str, *parts) -> bool:
    return bool(hashlib.sha256(repr((salt,) + parts).encode()).digest()[0] & 1)


def random_interpretation(f: Formula, seed: int) -> Interpretation:
    """Hash-defined predicates for every letter of ``f``."""
    el, en = {}, {}
    for name, letter in letters(f).items():
        salt = f"{seed}:{name}"
        if letter.kind is Kind.ELEMENTARY:
            el[name] = lambda *a, _s=salt: _bit(_s, *a)
        else:
            en[name] = lambda t, b, _s=salt: _bit(_s, tuple(sorted(t)), tuple(sorted(b)))
    return Interpretation(el, en, f"hashed #{seed}")


_SEGMENTS = ("1", "2", "3", "", "0", "01", "1:", ":", "0:", "00", "x", "02")


def random_candidate(rng: random.Random) -> LabeledMove:
    """A syntactically arbitrary move whose numeric segments stay within 1..3."""
    n = rng.randint(1, 5)
    return LabeledMove(rng.choice((T, B)), tuple(rng.choice(_SEGMENTS) for _ in range(n)))
