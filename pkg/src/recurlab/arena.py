"""Runtime game states, move legality and thread projection.

A move is a player label plus a path of string segments.  Per node type a
segment means:

* ``And`` / ``Or``: operand index, 1-based decimal.
* ``PRec`` / ``PCorec``: copy index, 1-based decimal.
* ``BRec`` / ``BCorec``: a bitstring naming an actual node (thread) of the
  tree, or, as the terminal segment, ``w:`` which replicates leaf ``w``.
* ``ChoiceAll`` / ``ChoiceExists`` (unresolved): the chosen constant, terminal.
  A resolved choice is transparent: the path continues into its instance.
* enumeration atom: the constant moved, terminal.  ``Neg`` is transparent and
  swaps the labels of moves passing through it.

Wire format: ``T 3.01.5`` (label, space, segments joined by ``.``); the empty
bitstring appears as an empty segment, so ``T 3..5`` moves 5 in thread ε.
"""

from __future__ import annotations

import enum
import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .formula import (And, Atom, BCorec, BRec, ChoiceAll, ChoiceExists, Formula, Implies,
                      Kind, Neg, Or, PCorec, PRec, is_nnf, substitute)


class Player(enum.Enum):
    T = "T"  # machine
    B = "B"  # environment

    @property
    def opposite(self) -> "Player":
        return Player.B if self is Player.T else Player.T

    def __str__(self) -> str:
        return self._value_

    __repr__ = __str__  # keeps state digests short and cheap


T, B = Player.T, Player.B

CONST_RE = re.compile(r"[1-9][0-9]*")
BITS_RE = re.compile(r"[01]*")


@dataclass(frozen=True)
class LabeledMove:
    player: Player
    path: tuple[str, ...]

    def wire(self) -> str:
        return f"{self.player.value} {'.'.join(self.path)}"

    @classmethod
    def parse(cls, text: str) -> "LabeledMove":
        label, sep, rest = text.strip("\n").partition(" ")
        if label not in ("T", "B") or not sep:
            raise ValueError(f"malformed move {text!r}")
        return cls(Player(label), tuple(rest.split(".")))

    def flipped(self) -> "LabeledMove":
        return LabeledMove(self.player.opposite, self.path)

    def under(self, *prefix: str) -> "LabeledMove":
        return LabeledMove(self.player, tuple(prefix) + self.path)

    def __str__(self) -> str:
        return self.wire()


def move(text: str) -> LabeledMove:
    """Shorthand for :meth:`LabeledMove.parse`."""
    return LabeledMove.parse(text)


Run = tuple[LabeledMove, ...]


def flip_run(run: Iterable[LabeledMove]) -> Run:
    """The same run with every label reversed."""
    return tuple(m.flipped() for m in run)


def is_constant(seg: str) -> bool:
    return CONST_RE.fullmatch(seg) is not None


def is_replication(seg: str) -> bool:
    return seg.endswith(":") and BITS_RE.fullmatch(seg[:-1]) is not None


class IllegalMove(Exception):
    """A move rejected by :func:`check_and_apply`.

    ``segment`` is the index into the move path where the violation was found.
    """

    def __init__(self, reason: str, move: LabeledMove | None = None, segment: int | None = None):
        self.reason = reason
        self.move = move
        self.segment = segment
        where = ""
        if move is not None:
            where = f" in {move.wire()!r}"
            if segment is not None:
                where += f" at segment {segment}"
        super().__init__(reason + where)


# ---------------------------------------------------------------- bit trees

@dataclass(frozen=True)
class BitTree:
    """Prefix-closed set of bitstrings in which inner nodes have both children."""

    actual: frozenset[str] = frozenset({""})

    @classmethod
    def from_leaves(cls, leaves: Iterable[str]) -> "BitTree":
        nodes = {""}
        for leaf in leaves:
            nodes.update(leaf[:k] for k in range(len(leaf) + 1))
        return cls(frozenset(nodes))

    @property
    def leaves(self) -> frozenset[str]:
        return frozenset(w for w in self.actual if w + "0" not in self.actual)

    def split(self, w: str) -> "BitTree":
        if w not in self.leaves:
            raise ValueError(f"{w or 'ε'} is not a leaf")
        return BitTree(self.actual | {w + "0", w + "1"})

    def leaf_of(self, x: str, zeros: bool = True) -> str | None:
        """The leaf that is a prefix of ``x`` (``x`` followed by 0s if ``zeros``)."""
        k = 0
        while True:
            w = x[:k] if k <= len(x) else x + "0" * (k - len(x))
            if w not in self.actual:
                return None
            if w in self.leaves:
                return w
            if k >= len(x) and not zeros:
                return None
            k += 1

    def check(self) -> None:
        assert "" in self.actual
        for w in self.actual:
            assert w == "" or w[:-1] in self.actual, w
            assert (w + "0" in self.actual) == (w + "1" in self.actual), w


# ---------------------------------------------------------------- node states

@dataclass(frozen=True)
class AtomState:
    log: tuple[tuple[Player, int, int], ...] = ()  # (player, constant, history index)


@dataclass(frozen=True)
class NegState:
    child: "State"


@dataclass(frozen=True)
class SeqState:
    children: tuple["State", ...]


@dataclass(frozen=True)
class CopiesState:
    copies: tuple[tuple[int, "State"], ...] = ()  # touched copies, sorted

    def get(self, i: int, default: "State") -> "State":
        for j, st in self.copies:
            if j == i:
                return st
        return default


@dataclass(frozen=True)
class ChoiceState:
    chosen: int | None = None
    body: "State | None" = None


@dataclass(frozen=True)
class BranchState:
    leaves: tuple[tuple[str, "State"], ...]  # sorted by bitstring

    @property
    def tree(self) -> BitTree:
        return BitTree.from_leaves(w for w, _ in self.leaves)

    def leaf_map(self) -> dict[str, "State"]:
        return dict(self.leaves)


State = AtomState | NegState | SeqState | CopiesState | ChoiceState | BranchState


@lru_cache(maxsize=None)
def instance(f: ChoiceAll | ChoiceExists, value: int) -> Formula:
    return substitute(f.child, f.var, value)


@lru_cache(maxsize=None)
def initial_state(f: Formula) -> State:
    if isinstance(f, Atom):
        return AtomState()
    if isinstance(f, Neg):
        return NegState(initial_state(f.child))
    if isinstance(f, (And, Or)):
        return SeqState(tuple(initial_state(c) for c in f.children))
    if isinstance(f, (PRec, PCorec)):
        return CopiesState()
    if isinstance(f, (ChoiceAll, ChoiceExists)):
        return ChoiceState()
    if isinstance(f, (BRec, BCorec)):
        return BranchState((("", initial_state(f.child)),))
    if isinstance(f, Implies):
        raise ValueError("implications must be eliminated before play")
    raise TypeError(f"not a formula: {f!r}")


def replicator(f: BRec | BCorec) -> Player:
    return B if isinstance(f, BRec) else T


def chooser(f: ChoiceAll | ChoiceExists) -> Player:
    return B if isinstance(f, ChoiceAll) else T


class _Reject(Exception):
    def __init__(self, reason: str, depth: int):
        self.reason = reason
        self.depth = depth


def _apply(f: Formula, st: State, player: Player, path: Sequence[str], d: int,
           stamp: int = 0) -> State:
    """Return the state after ``player`` makes the move ``path[d:]`` in ``f``."""
    if isinstance(f, Neg):
        return NegState(_apply(f.child, st.child, player.opposite, path, d, stamp))
    if d >= len(path):
        raise _Reject("move path ends at a non-terminal node", d)
    seg = path[d]
    if isinstance(f, Atom):
        if f.letter.kind is Kind.ELEMENTARY:
            raise _Reject(f"elementary atom {f.letter.name} has no legal moves", d)
        if d != len(path) - 1:
            raise _Reject("path continues below an atom", d + 1)
        if not is_constant(seg):
            raise _Reject("non-numeric payload", d)
        return AtomState(st.log + ((player, int(seg), stamp),))
    if isinstance(f, (And, Or)):
        if not is_constant(seg) or int(seg) > len(f.children):
            raise _Reject("no such operand", d)
        i = int(seg) - 1
        kids = list(st.children)
        kids[i] = _apply(f.children[i], kids[i], player, path, d + 1, stamp)
        return SeqState(tuple(kids))
    if isinstance(f, (PRec, PCorec)):
        if not is_constant(seg):
            raise _Reject("copy index must be a positive decimal", d)
        i = int(seg)
        new = _apply(f.child, st.get(i, initial_state(f.child)), player, path, d + 1, stamp)
        copies = dict(st.copies)
        copies[i] = new
        return CopiesState(tuple(sorted(copies.items())))
    if isinstance(f, (ChoiceAll, ChoiceExists)):
        if st.chosen is None:
            if d != len(path) - 1:
                raise _Reject("move addressed below an unresolved choice", d + 1)
            if not is_constant(seg):
                raise _Reject("non-numeric payload", d)
            if player is not chooser(f):
                raise _Reject("choice move by the non-owning player", d)
            c = int(seg)
            return ChoiceState(c, initial_state(instance(f, c)))
        body_f = instance(f, st.chosen)
        try:
            return ChoiceState(st.chosen, _apply(body_f, st.body, player, path, d, stamp))
        except _Reject as exc:
            if d == len(path) - 1 and is_constant(seg) and exc.depth == d:
                raise _Reject("choice already resolved", d) from None
            raise
    if isinstance(f, (BRec, BCorec)):
        leaves = st.leaf_map()
        if d == len(path) - 1 and seg.endswith(":"):
            w = seg[:-1]
            if not BITS_RE.fullmatch(w):
                raise _Reject("malformed replication", d)
            if player is not replicator(f):
                raise _Reject(f"replicative move by {player.value}", d)
            if w not in leaves:
                raise _Reject(f"{w or 'ε'} is not a leaf", d)
            child = leaves.pop(w)
            leaves[w + "0"] = child
            leaves[w + "1"] = child
            return BranchState(tuple(sorted(leaves.items())))
        if not BITS_RE.fullmatch(seg):
            raise _Reject("thread segment is not a bitstring", d)
        below = [x for x in leaves if x.startswith(seg)]
        if not below:
            raise _Reject(f"{seg or 'ε'} is not an actual node", d)
        for x in below:
            leaves[x] = _apply(f.child, leaves[x], player, path, d + 1, stamp)
        return BranchState(tuple(sorted(leaves.items())))
    raise TypeError(f"cannot play in {f!r}")


# ---------------------------------------------------------------- game state

@dataclass(frozen=True)
class GameState:
    formula: Formula
    root: State
    history: Run = ()

    def digest(self) -> str:
        return hashlib.sha256(repr(self.root).encode()).hexdigest()[:16]


def new_game(f: Formula, require_nnf: bool = True) -> GameState:
    """Initial position of ``f``; ``f`` must be in negation normal form."""
    if require_nnf and not is_nnf(f):
        raise ValueError("new_game expects a formula in negation normal form")
    return GameState(f, initial_state(f))


def check_and_apply(s: GameState, m: LabeledMove) -> GameState:
    """Apply ``m`` to ``s`` or raise :class:`IllegalMove`."""
    if not m.path:
        raise IllegalMove("empty move path", m, 0)
    try:
        root = _apply(s.formula, s.root, m.player, m.path, 0, len(s.history))
    except _Reject as exc:
        raise IllegalMove(exc.reason, m, exc.depth) from None
    return GameState(s.formula, root, s.history + (m,))


def is_legal(s: GameState, m: LabeledMove) -> bool:
    try:
        check_and_apply(s, m)
    except IllegalMove:
        return False
    return True


def replay(f: Formula, run: Iterable[LabeledMove], require_nnf: bool = True) -> GameState:
    s = new_game(f, require_nnf=require_nnf)
    for m in run:
        s = check_and_apply(s, m)
    return s


def first_illegal(f: Formula, run: Sequence[LabeledMove]) -> tuple[int, IllegalMove] | None:
    """Index and error of the first illegal move of ``run``, or None."""
    s = new_game(f, require_nnf=False)
    for k, m in enumerate(run):
        try:
            s = check_and_apply(s, m)
        except IllegalMove as exc:
            return k, exc
    return None


# ---------------------------------------------------------------- projection and views

def project_thread(run: Iterable[LabeledMove], r: Sequence[str], x: str,
                   zeros: bool = False, formula: Formula | None = None) -> Run:
    """Run of the game played in thread ``x`` of the branching node at ``r``.

    Keeps the moves ``r.u.β`` whose thread ``u`` is an initial segment of
    ``x`` and strips the ``r.u.`` prefix; replications are dropped.  With
    ``zeros`` the string ``x`` stands for ``x000...``.
    """
    r = tuple(r)
    if formula is not None:
        node = node_at(formula, r)
        if not isinstance(node, (BRec, BCorec)):
            raise ValueError(f"address {'.'.join(r)!r} is not a branching node")
    out = []
    k = len(r)
    for m in run:
        if m.path[:k] != r or len(m.path) <= k + 1:
            continue
        u = m.path[k]
        if not BITS_RE.fullmatch(u):
            continue
        if x.startswith(u) or (zeros and u.startswith(x) and set(u[len(x):]) <= {"0"}):
            out.append(LabeledMove(m.player, m.path[k + 1:]))
    return tuple(out)


def node_at(f: Formula, address: Sequence[str]) -> Formula:
    """Subformula reached by following a literal address (threads and copies skipped)."""
    for seg in address:
        while isinstance(f, Neg):
            f = f.child
        if isinstance(f, (And, Or)):
            i = int(seg) - 1
            if not 0 <= i < len(f.children):
                raise ValueError(f"no operand {seg}")
            f = f.children[i]
        elif isinstance(f, (PRec, PCorec, BRec, BCorec)):
            f = f.child
        else:
            raise ValueError(f"cannot descend into {type(f).__name__} with {seg!r}")
    return f


def state_at(s: GameState, address: Sequence[str]) -> tuple[Formula, State]:
    """Formula and state at an address whose thread segments name leaves."""
    f, st = s.formula, s.root
    for seg in address:
        while True:
            if isinstance(f, Neg):
                f, st = f.child, st.child
            elif isinstance(f, (ChoiceAll, ChoiceExists)) and st.chosen is not None:
                f, st = instance(f, st.chosen), st.body
            else:
                break
        if isinstance(f, (And, Or)):
            i = int(seg) - 1
            f, st = f.children[i], st.children[i]
        elif isinstance(f, (PRec, PCorec)):
            f, st = f.child, st.get(int(seg), initial_state(f.child))
        elif isinstance(f, (BRec, BCorec)):
            leaves = st.leaf_map()
            if seg not in leaves:
                raise ValueError(f"{seg or 'ε'} is not a leaf")
            f, st = f.child, leaves[seg]
        else:
            raise ValueError(f"cannot descend into {type(f).__name__} with {seg!r}")
    return f, st


def tree_view(s: GameState, r: Sequence[str]) -> tuple[frozenset[str], frozenset[str]]:
    """Actual nodes and leaves of the branching node at ``r``."""
    f, st = state_at(s, r)
    if not isinstance(f, (BRec, BCorec)):
        raise ValueError(f"address {'.'.join(r)!r} is not a branching node")
    tree = st.tree
    return tree.actual, tree.leaves


def resolve(f: Formula, st: State) -> tuple[Formula, State]:
    """Skip resolved choices and return the current instance."""
    while isinstance(f, (ChoiceAll, ChoiceExists)) and st.chosen is not None:
        f, st = instance(f, st.chosen), st.body
    return f, st


# ---------------------------------------------------------------- fast enumeration

def _state_moves(f: Formula, st: State, universe: Sequence[int], depth: int) -> set:
    if isinstance(f, Atom):
        if f.letter.kind is Kind.ELEMENTARY:
            return set()
        return {(p, (str(c),)) for p in (T, B) for c in universe}
    if isinstance(f, Neg):
        return {(p.opposite, path) for p, path in _state_moves(f.child, st.child, universe, depth)}
    if isinstance(f, (And, Or)):
        out = set()
        for i, (cf, cs) in enumerate(zip(f.children, st.children), 1):
            out |= {(p, (str(i),) + path) for p, path in _state_moves(cf, cs, universe, depth)}
        return out
    if isinstance(f, (PRec, PCorec)):
        out = set()
        for i in range(1, depth + 1):
            sub = _state_moves(f.child, st.get(i, initial_state(f.child)), universe, depth)
            out |= {(p, (str(i),) + path) for p, path in sub}
        return out
    if isinstance(f, (ChoiceAll, ChoiceExists)):
        if st.chosen is None:
            return {(chooser(f), (str(c),)) for c in universe}
        return _state_moves(instance(f, st.chosen), st.body, universe, depth)
    if isinstance(f, (BRec, BCorec)):
        leaves = st.leaf_map()
        out = {(replicator(f), (w + ":",)) for w in leaves}
        per_leaf = {x: _state_moves(f.child, cs, universe, depth) for x, cs in leaves.items()}
        for w in sorted(st.tree.actual):
            sets = [per_leaf[x] for x in leaves if x.startswith(w)]
            common = set.intersection(*sets)
            out |= {(p, (w,) + path) for p, path in common}
        return out
    raise TypeError(f"cannot enumerate moves of {f!r}")


def legal_moves(s: GameState, universe: Iterable[int], depth: int = 1,
                player: Player | None = None) -> list[LabeledMove]:
    """Legal moves read off the current state, sorted by wire text.

    Payloads range over ``universe`` and copy indices over ``1..depth``.
    """
    uni = sorted(set(universe))
    found = _state_moves(s.formula, s.root, uni, depth)
    moves = [LabeledMove(p, path) for p, path in found if player is None or p is player]
    return sorted(moves, key=LabeledMove.wire)


def constants_in(run: Iterable[LabeledMove]) -> set[int]:
    """Every constant occurring as a payload in ``run``."""
    out = set()
    for m in run:
        if m.path and is_constant(m.path[-1]):
            out.add(int(m.path[-1]))
    return out


def move_kind(s: GameState, m: LabeledMove) -> str:
    """``"replicate"``, ``"choice"`` or ``"atom"`` for a legal move ``m``."""
    if m.path[-1].endswith(":"):
        return "replicate"
    f, st = s.formula, s.root
    for seg in m.path:
        f, st = resolve(f, st)
        if isinstance(f, Neg):
            f, st = f.child, st.child
        if isinstance(f, (ChoiceAll, ChoiceExists)):
            return "choice"
        if isinstance(f, Atom):
            return "atom"
        if isinstance(f, (And, Or)):
            f, st = f.children[int(seg) - 1], st.children[int(seg) - 1]
        elif isinstance(f, (PRec, PCorec)):
            f, st = f.child, st.get(int(seg), initial_state(f.child))
        else:
            leaves = st.leaf_map()
            leaf = min(x for x in leaves if x.startswith(seg))
            f, st = f.child, leaves[leaf]
    raise ValueError(f"move {m.wire()} does not end at a terminal node")
