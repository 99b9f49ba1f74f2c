"""Brute-force legal move enumeration.

Works directly on the run by structural recursion and projection, without
touching the incremental states of :mod:`recurlab.arena`, so it can serve as
an independent reference in property tests.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .arena import B, LabeledMove, Player, T, GameState, is_replication
from .formula import (And, Atom, BCorec, BRec, ChoiceAll, ChoiceExists, Formula, Kind, Neg,
                      Or, PCorec, PRec, substitute)

Moves = frozenset[tuple[Player, tuple[str, ...]]]


def _strip(run: Iterable[LabeledMove], seg: str) -> list[LabeledMove]:
    return [LabeledMove(m.player, m.path[1:]) for m in run if m.path and m.path[0] == seg]


def _prefix(moves: Iterable[tuple[Player, tuple[str, ...]]], seg: str) -> set:
    return {(p, (seg,) + path) for p, path in moves}


def tree_of(run: Sequence[LabeledMove]) -> set[str]:
    """Actual nodes produced by the replications at this node."""
    nodes = {""}
    for m in run:
        if len(m.path) == 1 and is_replication(m.path[0]):
            w = m.path[0][:-1]
            nodes |= {w + "0", w + "1"}
    return nodes


def leaves_of(nodes: set[str]) -> list[str]:
    return sorted(w for w in nodes if w + "0" not in nodes)


def thread_run(run: Sequence[LabeledMove], x: str) -> list[LabeledMove]:
    """Moves ``u.β`` with ``u`` an initial segment of ``x``, stripped to ``β``."""
    out = []
    for m in run:
        if len(m.path) >= 2 and not m.path[0].endswith(":") and x.startswith(m.path[0]):
            out.append(LabeledMove(m.player, m.path[1:]))
    return out


def moves_for(f: Formula, run: Sequence[LabeledMove], universe: Sequence[int],
              depth: int) -> set[tuple[Player, tuple[str, ...]]]:
    if isinstance(f, Atom):
        if f.letter.kind is Kind.ELEMENTARY:
            return set()
        return {(p, (str(c),)) for p in (T, B) for c in universe}
    if isinstance(f, Neg):
        inner = moves_for(f.child, [m.flipped() for m in run], universe, depth)
        return {(p.opposite, path) for p, path in inner}
    if isinstance(f, (And, Or)):
        out: set = set()
        for i, child in enumerate(f.children, 1):
            out |= _prefix(moves_for(child, _strip(run, str(i)), universe, depth), str(i))
        return out
    if isinstance(f, (ChoiceAll, ChoiceExists)):
        owner = B if isinstance(f, ChoiceAll) else T
        if not run:
            return {(owner, (str(c),)) for c in universe}
        chosen = int(run[0].path[0])
        return moves_for(substitute(f.child, f.var, chosen), run[1:], universe, depth)
    if isinstance(f, (PRec, PCorec)):
        out = set()
        for i in range(1, depth + 1):
            out |= _prefix(moves_for(f.child, _strip(run, str(i)), universe, depth), str(i))
        return out
    if isinstance(f, (BRec, BCorec)):
        nodes = tree_of(run)
        leaves = leaves_of(nodes)
        rep = B if isinstance(f, BRec) else T
        out = {(rep, (w + ":",)) for w in leaves}
        per_leaf = {x: moves_for(f.child, thread_run(run, x), universe, depth) for x in leaves}
        for w in sorted(nodes):
            common = None
            for x in leaves:
                if x.startswith(w):
                    common = per_leaf[x] if common is None else common & per_leaf[x]
            out |= _prefix(common or set(), w)
        return out
    raise TypeError(f"cannot enumerate moves of {f!r}")


def legal_moves_oracle(s: GameState, universe: Iterable[int], depth: int) -> set[LabeledMove]:
    """Every legal move with payloads in ``universe`` and copy indices ≤ ``depth``."""
    uni = sorted(set(universe))
    return {LabeledMove(p, path) for p, path in moves_for(s.formula, s.history, uni, depth)}

