"""Environment-side strategies: counterstrategies C and D, and fuzzing adversaries.

An environment is called once per round with the current state and the
machine move of the previous round (already applied) and returns a batch of
moves.  ``respond_only`` is set while the harness drains the machine after
the last round: reactive environments still answer, proactive ones stay
silent.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .arena import (B, GameState, IllegalMove, LabeledMove, check_and_apply, constants_in,
                    legal_moves, move_kind, resolve, state_at)
from .formula import Atom, ChoiceAll, Formula, Neg


class Environment:
    name = "silent"

    def start(self, f: Formula) -> None:
        self.formula = f

    def step(self, s: GameState, rnd: int, last: LabeledMove | None,
             respond_only: bool = False) -> list[LabeledMove]:
        return []

    def closing(self, s: GameState) -> list[LabeledMove]:
        """Batch played once after the last round (no machine reply follows)."""
        return []

    def ledger(self) -> dict:
        return {}


@dataclass
class FreshAllocator:
    """Monotone counter handing out constants never seen in the play."""

    next: int = 1

    def observe(self, constants) -> None:
        for c in constants:
            if c >= self.next:
                self.next = c + 1

    def fresh(self) -> int:
        c = self.next
        self.next += 1
        return c


# ---------------------------------------------------------------- counterstrategy C

def _positive_activated(s: GameState) -> set[tuple[int, int]]:
    """Atoms p(a,b) present positively in a ?-thread or a !-thread."""
    out = set()
    for comp in ("2", "3"):
        f, st = state_at(s, (comp,))
        for w, leaf in st.leaves:
            g, gs = resolve(f.child, leaf)
            if comp == "2":
                g, gs = resolve(g.children[0], gs.children[0])
            if isinstance(g, Atom):
                out.add(tuple(g.args))
    return out


@dataclass
class CState:
    fired_iii: bool = False
    m: int | None = None
    n1: int | None = None
    n2: int | None = None
    recurring: list[str] = field(default_factory=list)


class CStrategy(Environment):
    """Counterstrategy against the elementary short-production instance
    ``A x. E y. ~p(x,y) | ?(E x. A y. p(x,y) & (...|...)) | ! E x. A y. p(x,y)``.

    Round 1 picks 1 for ``x`` in the first disjunct.  Afterwards it only
    reacts to the machine's last move:

    * machine picks ``x`` in a ?-thread: two fresh constants for the two
      ``A x`` of that thread;
    * machine picks ``x`` in the single !-thread: split it and pick fresh,
      distinct ``y`` in both halves;
    * machine picks ``y`` for ``~p(b,y)`` in a ?-thread and ``p(b,y)`` is
      already on the board: a fresh ``y`` for ``A y. p(a,y)`` of that thread.
    """

    name = "c"

    def start(self, f: Formula) -> None:
        super().start(f)
        self.state = CState()
        self.alloc = FreshAllocator()

    def step(self, s, rnd, last, respond_only=False):
        self.alloc.observe(constants_in(s.history))
        batch: list[LabeledMove] = []
        if rnd == 1:
            batch.append(LabeledMove(B, ("1", "1")))
            self.alloc.observe([1])
        if last is not None:
            batch += self._respond(s, last)
        return batch

    def _respond(self, s: GameState, mv: LabeledMove) -> list[LabeledMove]:
        path = mv.path
        comp = path[0]
        if comp == "2" and len(path) == 4 and path[2] == "1":
            w = path[1]
            b1, b2 = self.alloc.fresh(), self.alloc.fresh()
            return [LabeledMove(B, ("2", w, "2", "1", str(b1))),
                    LabeledMove(B, ("2", w, "2", "2", str(b2)))]
        if comp == "3" and len(path) == 3 and not self.state.fired_iii:
            w = path[1]
            n1, n2 = self.alloc.fresh(), self.alloc.fresh()
            self.state = CState(True, int(path[2]), n1, n2)
            return [LabeledMove(B, ("3", w + ":")),
                    LabeledMove(B, ("3", w + "0", str(n1))),
                    LabeledMove(B, ("3", w + "1", str(n2)))]
        if comp == "2" and len(path) == 5 and path[2] == "2":
            return self._prescription_iv(s, path)
        return []

    def _prescription_iv(self, s: GameState, path) -> list[LabeledMove]:
        w, k, c = path[1], path[3], int(path[4])
        f, st = state_at(s, ("2",))
        leaves = [(x, leaf) for x, leaf in st.leaves if x.startswith(w)]
        # the b of ~p(b,c) in the thread where the machine just moved
        g, gs = resolve(f.child, leaves[0][1])
        part, _ = resolve(g.children[1].children[int(k) - 1], gs.children[1].children[int(k) - 1])
        b = part.child.args[0] if isinstance(part, Neg) else None
        if b is None or (b, c) not in _positive_activated(s):
            return []
        # maximal nodes below w whose A y. p(a,y) is still open
        open_leaves = set()
        for x, leaf in leaves:
            g, gs = resolve(f.child, leaf)
            first, fs = resolve(g.children[0], gs.children[0])
            if isinstance(first, ChoiceAll) and fs.chosen is None:
                open_leaves.add(x)
        if not open_leaves:
            self.state.recurring.append(".".join(path))
            return []
        all_leaves = {x for x, _ in st.leaves}
        nodes = _maximal_covers(w, open_leaves, all_leaves)
        return [LabeledMove(B, ("2", u, "1", str(self.alloc.fresh()))) for u in nodes]

    def ledger(self) -> dict:
        st = self.state
        return {"fired_iii": st.fired_iii, "m": st.m, "n1": st.n1, "n2": st.n2,
                "recurring_iv": list(st.recurring)}


def _maximal_covers(w: str, wanted: set[str], leaves: set[str]) -> list[str]:
    """Maximal nodes below ``w`` all of whose leaves are in ``wanted``."""
    below = [x for x in leaves if x.startswith(w)]
    if all(x in wanted for x in below):
        return [w]
    if w in leaves:
        return []
    return _maximal_covers(w + "0", wanted, leaves) + _maximal_covers(w + "1", wanted, leaves)


# ---------------------------------------------------------------- counterstrategy D

class DStrategy(Environment):
    """Counterstrategy against ``~P | ?(P & (~P | ~P)) | ?((P | P) & ~P) | !P``.

    Every round: split every !-thread, then play a fresh constant in the
    first disjunct, in the three atoms of every thread of both ?-disjuncts
    and in every !-thread.  Machine moves are ignored.
    """

    name = "d"

    def start(self, f: Formula) -> None:
        super().start(f)
        self.alloc = FreshAllocator()

    def _fresh_moves(self, s: GameState, bang: Sequence[str]) -> list[LabeledMove]:
        self.alloc.observe(constants_in(s.history))
        out = [LabeledMove(B, ("1", str(self.alloc.fresh())))]
        _, left = state_at(s, ("2",))
        for w, _ in left.leaves:
            for site in (("1",), ("2", "1"), ("2", "2")):
                out.append(LabeledMove(B, ("2", w) + site + (str(self.alloc.fresh()),)))
        _, right = state_at(s, ("3",))
        for w, _ in right.leaves:
            for site in (("1", "1"), ("1", "2"), ("2",)):
                out.append(LabeledMove(B, ("3", w) + site + (str(self.alloc.fresh()),)))
        for w in bang:
            out.append(LabeledMove(B, ("4", w, str(self.alloc.fresh()))))
        return out

    def step(self, s, rnd, last, respond_only=False):
        if respond_only:
            return []
        _, bang = state_at(s, ("4",))
        leaves = [w for w, _ in bang.leaves]
        splits = [LabeledMove(B, ("4", w + ":")) for w in leaves]
        children = [w + b for w in leaves for b in "01"]
        return splits + self._fresh_moves(s, children)

    def closing(self, s: GameState) -> list[LabeledMove]:
        _, bang = state_at(s, ("4",))
        return self._fresh_moves(s, [w for w, _ in bang.leaves])


# ---------------------------------------------------------------- fuzzing adversaries

def random_env_step(rng: random.Random | int, budget: int, s: GameState,
                    universe: Sequence[int] = (1, 2, 3), depth: int = 3,
                    allow_split: bool = True) -> list[LabeledMove]:
    """A legal batch of at most ``budget`` environment moves.

    Moves are sampled from the legal moves of ``s``, with replications and
    choice resolutions weighted up; each sampled move is re-validated against
    the moves already in the batch.
    """
    if isinstance(rng, int):
        rng = random.Random(rng)
    if budget <= 0:
        return []
    options = legal_moves(s, universe, depth, player=B)
    if not allow_split:
        options = [m for m in options if not m.path[-1].endswith(":")]
    if not options:
        return []
    k = rng.randint(0, budget)
    if k == 0:
        return []
    weights = [_WEIGHTS[move_kind(s, m)] for m in options]
    batch = []
    cur = s
    for m in rng.choices(options, weights, k=k):
        try:
            cur = check_and_apply(cur, m)
        except IllegalMove:
            continue
        batch.append(m)
    return batch


_WEIGHTS = {"replicate": 3, "choice": 3, "atom": 1}


class RandomEnv(Environment):
    """Seeded fuzzing environment built on :func:`random_env_step`."""

    name = "random"

    def __init__(self, seed: int = 0, budget: int = 3, universe: Sequence[int] = (1, 2, 3),
                 depth: int = 3):
        self.seed = seed
        self.budget = budget
        self.universe = tuple(universe)
        self.depth = depth

    def start(self, f: Formula) -> None:
        super().start(f)
        self.rng = random.Random(self.seed)

    def step(self, s, rnd, last, respond_only=False):
        if respond_only:
            return []
        return random_env_step(self.rng, self.budget, s, self.universe, self.depth)


class SplitScheduleEnv(RandomEnv):
    """Random play plus splits of the !-component at scheduled rounds.

    ``schedule`` maps a round to the bang thread to split; ``None`` means a
    random current leaf.  The fourth top-level disjunct is taken to be the
    !-component, and no other splits are made.
    """

    name = "schedule"

    def __init__(self, seed: int, schedule: dict[int, str | None], budget: int = 3,
                 universe: Sequence[int] = (1, 2, 3)):
        super().__init__(seed, budget, universe, depth=1)
        self.schedule = dict(schedule)
        self.splits: list[str] = []

    def step(self, s, rnd, last, respond_only=False):
        if respond_only:
            return []
        batch = random_env_step(self.rng, self.budget, s, self.universe, 1, allow_split=False)
        if rnd in self.schedule:
            cur = s
            for m in batch:
                cur = check_and_apply(cur, m)
            _, bang = state_at(cur, ("4",))
            leaves = sorted(w for w, _ in bang.leaves)
            w = self.schedule[rnd]
            if w is None or w not in leaves:
                w = self.rng.choice(leaves)
            batch.append(LabeledMove(B, ("4", w + ":")))
            self.splits.append(w)
        return batch


def random_schedule(rng: random.Random, rounds: int, splits: int,
                    prefix: Sequence[str] = ()) -> dict[int, str | None]:
    """Rounds (≥ 3, spaced out) at which to split, with an optional forced prefix."""
    when = sorted(rng.sample(range(3, max(rounds - 5, 4 + splits)), splits))
    return {r: (prefix[i] if i < len(prefix) else None) for i, r in enumerate(when)}


ENVIRONMENTS = {
    "silent": Environment,
    "c": CStrategy,
    "d": DStrategy,
    "random": RandomEnv,
}


def make_environment(name: str, seed: int = 0, **kw) -> Environment:
    try:
        cls = ENVIRONMENTS[name]
    except KeyError:
        raise ValueError(f"unknown environment {name!r}") from None
    return cls(seed, **kw) if cls is RandomEnv else cls()
