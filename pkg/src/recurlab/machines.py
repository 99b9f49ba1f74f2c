"""Machine-side strategies.

Every strategy is a small state machine with ``step(s, rnd)`` returning at
most one move per scheduled step.  Copycat synchronisation is computed from
the atom logs of the current state: a subgame is owed every environment move
of its partner that it has not yet received, and the strategy always pays
the oldest debt first.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .arena import (B, CopiesState, GameState, LabeledMove, Player, T,
                    constants_in, legal_moves, resolve, state_at)
from .formula import And, Atom, BCorec, BRec, ChoiceAll, ChoiceExists, Formula, Neg, Or

Site = tuple[str, ...]


def site_log(s: GameState, site: Site) -> list[tuple[Player, int, int]]:
    """Moves made at an enumeration-atom site, with their real labels."""
    f, st = state_at(s, site)
    f, st = resolve(f, st)
    if isinstance(f, Neg):
        return [(p.opposite, c, k) for p, c, k in st.child.log]
    if isinstance(f, Atom):
        return list(st.log)
    raise ValueError(f"{'.'.join(site)} is not an atom site")


@dataclass(frozen=True)
class SyncPair:
    """Copycat link between a subgame and its negation."""

    left: Site
    right: Site

    def pending(self, s: GameState) -> list[tuple[int, LabeledMove]]:
        """Unmirrored environment moves, as (history index, mirroring move)."""
        out = []
        for src, dst in ((self.left, self.right), (self.right, self.left)):
            theirs = [(c, k) for p, c, k in site_log(s, src) if p is B]
            done = sum(1 for p, _, _ in site_log(s, dst) if p is T)
            for c, k in theirs[done:]:
                out.append((k, LabeledMove(T, dst + (str(c),))))
        return out

    def __str__(self) -> str:
        return f"{'.'.join(self.left)}={'.'.join(self.right)}"


def copycat_step(pairs: SyncPair | Iterable[SyncPair], s: GameState) -> LabeledMove | None:
    """The mirroring move for the oldest unmirrored adversary move, if any."""
    if isinstance(pairs, SyncPair):
        pairs = [pairs]
    best = None
    for pair in pairs:
        for k, m in pair.pending(s):
            key = (k, m.wire())
            if best is None or key < best[0]:
                best = (key, m)
    return None if best is None else best[1]


class Machine:
    """Base class: a silent machine."""

    name = "silent"

    def start(self, f: Formula) -> None:
        self.formula = f

    def step(self, s: GameState, rnd: int) -> LabeledMove | None:
        return None

    def settled(self, s: GameState) -> bool:
        """True when the machine has nothing left to do in ``s``."""
        return True

    def describe(self) -> list[str]:
        return []


# ---------------------------------------------------------------- parallel recurrence

def touched_copies(s: GameState, site: Site) -> set[int]:
    _, st = state_at(s, site)
    assert isinstance(st, CopiesState)
    return {i for i, _ in st.copies}


class SPParallel(Machine):
    """Copycat network for ``~P | ?p (P & (~P | ~Q)) | !p Q``.

    Copy ``i`` of the ``?p`` disjunct hosts ``P_i`` and ``~P_i | ~Q_i``;
    links are ``~P_0 = P_1``, ``~P_i = P_(i+1)`` and ``~Q_i = Q_i``, where
    ``~P_0`` is the first disjunct.  Copies are opened lazily, one past the
    highest copy touched so far.
    """

    name = "sp"

    def pairs(self, s: GameState) -> list[SyncPair]:
        top = max(touched_copies(s, ("2",)) | touched_copies(s, ("3",)) | {0})
        out = [SyncPair(("1",), ("2", "1", "1"))]
        for i in range(1, top + 2):
            out.append(SyncPair(("2", str(i), "2", "1"), ("2", str(i + 1), "1")))
            out.append(SyncPair(("2", str(i), "2", "2"), ("3", str(i))))
        return out

    _memo: tuple[GameState, LabeledMove | None] | None = None

    def _next(self, s: GameState) -> LabeledMove | None:
        # step() and settled() are asked about the same state; states are immutable
        if self._memo is None or self._memo[0] is not s:
            self._memo = (s, copycat_step(self.pairs(s), s))
        return self._memo[1]

    def step(self, s: GameState, rnd: int) -> LabeledMove | None:
        return self._next(s)

    def settled(self, s: GameState) -> bool:
        return self._next(s) is None


class LPParallel(SPParallel):
    """Copycat network for ``~P | ?p (P & (~P | ~Q)) | ?p ((R | Q) & ~R) | !p R``.

    Links, for every copy ``k``: ``~P_(k-1) = P_k`` (``~P_0`` being the
    first disjunct), ``~Q_k = Q_k`` across the two ``?p`` disjuncts and
    ``~R_k = R_k`` between the second ``?p`` disjunct and the ``!p`` one.
    The ``R`` inside ``R | Q`` stays unlinked.
    """

    name = "lp"

    def pairs(self, s: GameState) -> list[SyncPair]:
        top = max(touched_copies(s, ("2",)) | touched_copies(s, ("3",))
                  | touched_copies(s, ("4",)) | {0})
        out = [SyncPair(("1",), ("2", "1", "1"))]
        for k in range(1, top + 2):
            i = str(k)
            out.append(SyncPair(("2", i, "2", "1"), ("2", str(k + 1), "1")))
            out.append(SyncPair(("2", i, "2", "2"), ("3", i, "1", "2")))
            out.append(SyncPair(("3", i, "2"), ("4", i)))
        return out


# ---------------------------------------------------------------- staged strategy K

@dataclass(frozen=True)
class KLine:
    left: str               # thread u of the left ?-component
    right: tuple[str, ...]  # threads v^1..v^k of the right ?-component
    bang: str               # thread w of the !-component


@dataclass(frozen=True)
class KLayout:
    lines: tuple[KLine, ...]
    reserve: str

    @property
    def n(self) -> int:
        return len(self.lines)

    def pairs(self) -> list[SyncPair]:
        out = []
        prev = ("1",)
        for line in self.lines:
            out.append(SyncPair(prev, ("2", line.left, "1")))
            prev = ("2", line.left, "2", "1")
            out.append(SyncPair(("2", line.left, "2", "2"), ("3", line.right[0], "1", "2")))
            for a, b in zip(line.right, line.right[1:]):
                out.append(SyncPair(("3", a, "2"), ("3", b, "1", "1")))
            out.append(SyncPair(("3", line.right[-1], "2"), ("4", line.bang)))
        return out

    def wasted(self) -> list[Site]:
        return [("3", v, "1", "2") for line in self.lines for v in line.right[1:]]

    def check(self) -> None:
        z = self.reserve
        assert z == "1" * self.n, z
        for i, line in enumerate(self.lines, 1):
            assert line.left == "1" * (i - 1) + "0", (i, line.left)
        rights = [v for line in self.lines for v in line.right] + [z]
        assert len(set(rights)) == len(rights)

    def dump(self) -> str:
        """Text diagram: one row per line, reserve row last, then the links."""
        def left(u):
            return f"P_{u}&(~P_{u}|~Q_{u})"

        def right(v, wasted):
            return f"(R_{v}|Q_{v}{'x' if wasted else ''})&~R_{v}"

        rows = [f"stage {self.n}", "~P"]
        for i, line in enumerate(self.lines, 1):
            parts = [left(line.left)]
            parts += [right(v, e > 0) for e, v in enumerate(line.right)]
            parts.append(f"R_{line.bang or 'e'}")
            rows.append(f"line {i}: " + "  ".join(parts))
        z = self.reserve
        rows.append(f"reserve: {left(z)}  {right(z, False)}")
        rows.append("links: " + " ".join(_pair_name(p) for p in self.pairs()))
        return "\n".join(rows) + "\n"


def _site_name(site: Site) -> str:
    comp, rest = site[0], site[1:]
    if comp == "1":
        return "~P"
    if comp == "4":
        return f"R_{rest[0] or 'e'}"
    v = rest[0] or "e"
    name = {("2", "1"): "P", ("2", "2", "1"): "~P", ("2", "2", "2"): "~Q",
            ("3", "1", "1"): "R", ("3", "1", "2"): "Q", ("3", "2"): "~R"}[(comp,) + rest[1:]]
    return f"{name}_{v}"


def _pair_name(p: SyncPair) -> str:
    return f"{_site_name(p.left)}={_site_name(p.right)}"


STAGE_ONE = KLayout((KLine("0", ("0",), ""),), "1")


def k_expected_layout(splits: Sequence[str]) -> KLayout:
    """Layout after the environment has split the given bang threads in order.

    Each line remembers the strings it was born with; a later split of the
    line's bang thread appends ``0`` to its right and bang threads, and opens
    a new bottom line from the reserve and the ``1``-children.
    """
    born: list[tuple[str, list[str], str]] = [("0", ["0"], "")]
    pads: list[int] = [0]
    for n, w in enumerate(splits, 1):
        current = [b + "0" * p for (_, _, b), p in zip(born, pads)]
        if w not in current:
            raise ValueError(f"{w or 'ε'} is not a current bang leaf")
        i = current.index(w)
        rights = [v + "0" * pads[i] for v in born[i][1]]
        z = "1" * n
        born.append((z + "0", [z + "0"] + [v + "1" for v in rights], w + "1"))
        pads.append(0)
        pads[i] += 1
    lines = tuple(KLine(u, tuple(v + "0" * p for v in vs), b + "0" * p)
                  for (u, vs, b), p in zip(born, pads))
    return KLayout(lines, "1" * (len(splits) + 1))


def k_transition(layout: KLayout, w: str) -> tuple[list[str], KLayout]:
    """Replications K makes when bang thread ``w`` splits, and the next layout."""
    idx = [line.bang for line in layout.lines].index(w)
    line = layout.lines[idx]
    z = layout.reserve
    moves = [f"T 3.{v}:" for v in line.right] + [f"T 3.{z}:", f"T 2.{z}:"]
    lines = list(layout.lines)
    lines[idx] = KLine(line.left, tuple(v + "0" for v in line.right), w + "0")
    lines.append(KLine(z + "0", (z + "0",) + tuple(v + "1" for v in line.right), w + "1"))
    return moves, KLayout(tuple(lines), z + "1")


class KStrategy(Machine):
    """Staged copycat strategy for long production under countable branching
    recurrence (formula shape ``~P | ?(P & (~P | ~Q)) | ?((R | Q) & ~R) | !R``)."""

    name = "k"

    def start(self, f: Formula) -> None:
        super().start(f)
        self.init = ["T 2.:", "T 3.:"]
        self.layout = STAGE_ONE
        self.seen = 0              # history prefix already scanned for splits
        self.events: list[str] = []  # bang splits not yet handled
        self.todo: list[str] = []    # replications of the running transition
        self.next_layout: KLayout | None = None
        self.handled: list[str] = []
        self.layouts: list[KLayout] = [STAGE_ONE]

    def _scan(self, s: GameState) -> None:
        for m in s.history[self.seen:]:
            if m.player is B and len(m.path) == 2 and m.path[0] == "4" and m.path[1].endswith(":"):
                self.events.append(m.path[1][:-1])
        self.seen = len(s.history)

    def step(self, s: GameState, rnd: int) -> LabeledMove | None:
        if self.init:
            return LabeledMove.parse(self.init.pop(0))
        self._scan(s)
        if not self.todo and self.events:
            w = self.events.pop(0)
            self.todo, self.next_layout = k_transition(self.layout, w)
            self.handled.append(w)
        if self.todo:
            m = LabeledMove.parse(self.todo.pop(0))
            if not self.todo:
                self.layout = self.next_layout
                self.layouts.append(self.layout)
            return m
        return copycat_step(self.layout.pairs(), s)

    def in_transition(self) -> bool:
        return bool(self.todo or self.events)

    def settled(self, s: GameState) -> bool:
        self._scan(s)
        if self.init or self.todo or self.events:
            return False
        return copycat_step(self.layout.pairs(), s) is None

    def describe(self) -> list[str]:
        return self.layout.dump().splitlines()


class StaticK(KStrategy):
    """K's first-stage links only.  It never reacts to splits of the bang
    thread and keeps copying into its all-zeros leaf."""

    name = "static"

    def _scan(self, s: GameState) -> None:
        self.seen = len(s.history)

    def step(self, s: GameState, rnd: int) -> LabeledMove | None:
        if self.init:
            return LabeledMove.parse(self.init.pop(0))
        _, bang = state_at(s, ("4",))
        zero = bang.tree.leaf_of("")
        pairs = [SyncPair(p.left, ("4", zero)) if p.right[0] == "4" else p
                 for p in self.layout.pairs()]
        return copycat_step(pairs, s)

    def settled(self, s: GameState) -> bool:
        return not self.init and self.step(s, 0) is None


# ---------------------------------------------------------------- suite machines

class RandomMachine(Machine):
    """Plays a uniformly random legal move with some probability each step.

    Payloads are drawn from a few small constants and the largest ones seen.
    """

    name = "random"

    def __init__(self, seed: int = 0, rate: float = 0.7, extra: int = 3):
        self.seed = seed
        self.rate = rate
        self.extra = extra

    def start(self, f: Formula) -> None:
        super().start(f)
        self.rng = random.Random(self.seed)

    def step(self, s: GameState, rnd: int) -> LabeledMove | None:
        if self.rng.random() >= self.rate:
            return None
        recent = sorted(constants_in(s.history))[-self.extra:]
        universe = sorted(set(recent) | set(range(1, self.extra + 1)))
        options = legal_moves(s, universe, depth=2, player=T)
        if not options:
            return None
        return self.rng.choice(options)


def _collect(f: Formula, st, addr: Site, out: list) -> None:
    f, st = resolve(f, st)
    out.append((addr, f, st))
    if isinstance(f, (And, Or)):
        for i, (cf, cs) in enumerate(zip(f.children, st.children), 1):
            _collect(cf, cs, addr + (str(i),), out)
    elif isinstance(f, (BRec, BCorec)):
        for w, cs in st.leaves:
            _collect(f.child, cs, addr + (w,), out)


def positions(s: GameState) -> list[tuple[Site, Formula, object]]:
    """Every (address, current subformula, state) reachable through leaves."""
    out: list = []
    _collect(s.formula, s.root, (), out)
    return out


def _open_negative(f: Formula) -> int | None:
    """``b`` if ``f`` is an unresolved ``E y. ~p(b,y)`` with ``b`` fixed."""
    if isinstance(f, ChoiceExists) and isinstance(f.child, Neg):
        b = f.child.child.args[0]
        return b if isinstance(b, int) else None
    return None


class NaiveProver(Machine):
    """Eagerly resolves every open machine choice, leftmost first, with the
    most recently introduced constant (or 1)."""

    name = "naive"

    def step(self, s: GameState, rnd: int) -> LabeledMove | None:
        consts = constants_in(s.history)
        c = max(consts) if consts else 1
        for addr, f, st in positions(s):
            if isinstance(f, ChoiceExists) and st.chosen is None:
                return LabeledMove(T, addr + (str(c),))
        return None


class MatchingProver(Machine):
    """A copycat-minded prover for the elementary short-production instance.

    It copies the environment's choice for the first disjunct into the
    ?-threads, feeds constants the environment picked in a ?-thread into the
    !-component, answers ``~p(b,y)`` with ``c`` whenever ``p(b,c)`` is on the
    board, and splits a ?-thread when one ``b`` has two candidate answers.
    """

    name = "copycat"
    max_threads = 8

    def step(self, s: GameState, rnd: int) -> LabeledMove | None:
        pos = positions(s)
        positives: dict[int, list[int]] = {}
        for addr, f, st in pos:
            if isinstance(f, Atom) and f.args and addr[0] in ("2", "3"):
                positives.setdefault(f.args[0], []).append(f.args[1])
        f1, st1 = state_at(s, ("1",))
        x_env = st1.chosen if isinstance(f1, ChoiceAll) else None
        open_x = [(a, f) for a, f, st in pos
                  if isinstance(f, ChoiceExists) and isinstance(f.child, ChoiceAll)]
        if x_env is not None:
            for addr, f in open_x:
                if addr[0] == "2":
                    return LabeledMove(T, addr + (str(x_env),))
        negs = [(a, _open_negative(f)) for a, f, st in pos if _open_negative(f) is not None]
        qs = [b for a, b in negs if a[0] == "2"]
        for addr, f in open_x:
            if addr[0] == "3" and qs:
                return LabeledMove(T, addr + (str(qs[0]),))
        threads = sum(1 for a, f, st in pos if len(a) == 2 and a[0] == "2")
        for addr, b in negs:
            if addr[0] == "2" and len(set(positives.get(b, []))) >= 2 and threads < self.max_threads:
                return LabeledMove(T, ("2", addr[1] + ":"))
        for addr, b in negs:
            if positives.get(b):
                taken = _answers_elsewhere(pos, addr)
                options = [c for c in positives[b] if c not in taken] or positives[b]
                return LabeledMove(T, addr + (str(options[0]),))
        return None


def _answers_elsewhere(pos, addr: Site) -> set[int]:
    """Constants already chosen at the same place in other ?-threads."""
    if addr[0] != "2" or len(addr) < 4:
        return set()
    out = set()
    for a, f, st in pos:
        if len(a) == len(addr) and a[0] == "2" and a[2:] == addr[2:] and a[1] != addr[1]:
            if isinstance(f, Neg) and f.child.args:
                out.add(f.child.args[1])
    return out


MACHINES = {
    "silent": Machine,
    "sp": SPParallel,
    "lp": LPParallel,
    "k": KStrategy,
    "static": StaticK,
    "random": RandomMachine,
    "naive": NaiveProver,
    "copycat": MatchingProver,
}


def make_machine(name: str, seed: int = 0) -> Machine:
    try:
        cls = MACHINES[name]
    except KeyError:
        raise ValueError(f"unknown machine {name!r}") from None
    return cls(seed) if cls is RandomMachine else cls()
