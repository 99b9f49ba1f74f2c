"""Winners of finite runs.

Conventions for truncated play: an unresolved ``A x`` is won by the machine,
an unresolved ``E x`` by the environment.  A parallel recurrence is won iff
every touched copy and an untouched copy are won; a branching recurrence is
won iff the thread of every leaf of the final tree is won (both
cardinalities agree on finite runs).  An illegal move loses for its author.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .arena import B, LabeledMove, Player, T, first_illegal, flip_run
from .formula import (And, Atom, BCorec, BRec, ChoiceAll, ChoiceExists, Formula, Implies,
                      Kind, Neg, Or, PCorec, PRec, children, letters, substitute, to_nnf)
from .oracle import leaves_of, thread_run, tree_of

ElementaryPred = Callable[..., bool]
EnumerationPred = Callable[[frozenset, frozenset], bool]


class MissingLetter(KeyError):
    pass


@dataclass
class Interpretation:
    """Meaning of letters: truth predicates (elementary) or win predicates (enumeration).

    An enumeration predicate receives the set of constants moved by the
    machine and the set moved by the environment and returns True iff the
    machine wins.
    """

    elementary: Mapping[str, ElementaryPred] = field(default_factory=dict)
    enumeration: Mapping[str, EnumerationPred] = field(default_factory=dict)
    description: str = ""

    def truth(self, name: str, args: tuple) -> bool:
        try:
            pred = self.elementary[name]
        except KeyError:
            raise MissingLetter(name) from None
        return bool(pred(*args))

    def enum_winner(self, name: str, s_top: frozenset, s_bot: frozenset) -> bool:
        try:
            pred = self.enumeration[name]
        except KeyError:
            raise MissingLetter(name) from None
        return bool(pred(s_top, s_bot))


@dataclass(frozen=True)
class Verdict:
    winner: Player
    label: str = ""
    children: tuple["Verdict", ...] = ()
    illegal: str | None = None

    def lines(self, indent: int = 0) -> list[str]:
        out = ["  " * indent + f"{self.label or 'game'}: {self.winner.value}"
               + (f" (illegal: {self.illegal})" if self.illegal else "")]
        for c in self.children:
            out.extend(c.lines(indent + 1))
        return out

    def find(self, label: str) -> "Verdict | None":
        if self.label == label:
            return self
        for c in self.children:
            hit = c.find(label)
            if hit is not None:
                return hit
        return None


def _win(cond: bool) -> Player:
    return T if cond else B


def _eval(f: Formula, I: Interpretation, run: Sequence[LabeledMove], label: str,
          detail: bool) -> Verdict:
    if isinstance(f, Atom):
        if f.letter.kind is Kind.ELEMENTARY:
            return Verdict(_win(I.truth(f.letter.name, f.args)), label)
        s_top = frozenset(int(m.path[0]) for m in run if m.player is T)
        s_bot = frozenset(int(m.path[0]) for m in run if m.player is B)
        return Verdict(_win(I.enum_winner(f.letter.name, s_top, s_bot)), label)
    if isinstance(f, Neg):
        inner = _eval(f.child, I, flip_run(run), label + "~", detail)
        return Verdict(inner.winner.opposite, label, (inner,) if detail else ())
    if isinstance(f, Implies):
        return _eval(to_nnf(f), I, run, label, detail)
    if isinstance(f, (And, Or)):
        kids = []
        for i, child in enumerate(f.children, 1):
            sub = [LabeledMove(m.player, m.path[1:]) for m in run if m.path[0] == str(i)]
            kids.append(_eval(child, I, sub, f"{label}.{i}" if label else str(i), detail))
        if isinstance(f, And):
            w = _win(all(k.winner is T for k in kids))
        else:
            w = _win(any(k.winner is T for k in kids))
        return Verdict(w, label, tuple(kids))
    if isinstance(f, (ChoiceAll, ChoiceExists)):
        if not run:
            return Verdict(T if isinstance(f, ChoiceAll) else B, label)
        chosen = int(run[0].path[0])
        return _eval(substitute(f.child, f.var, chosen), I, run[1:], label, detail)
    if isinstance(f, (PRec, PCorec)):
        touched = sorted({int(m.path[0]) for m in run}, key=int)
        kids = []
        for i in touched:
            sub = [LabeledMove(m.player, m.path[1:]) for m in run if m.path[0] == str(i)]
            kids.append(_eval(f.child, I, sub, f"{label}#{i}", detail))
        kids.append(_eval(f.child, I, [], f"{label}#fresh", detail))
        if isinstance(f, PRec):
            w = _win(all(k.winner is T for k in kids))
        else:
            w = _win(any(k.winner is T for k in kids))
        return Verdict(w, label, tuple(kids))
    if isinstance(f, (BRec, BCorec)):
        kids = []
        for x in leaves_of(tree_of(run)):
            kids.append(_eval(f.child, I, thread_run(run, x), f"{label}@{x or 'ε'}", detail))
        if isinstance(f, BRec):
            w = _win(all(k.winner is T for k in kids))
        else:
            w = _win(any(k.winner is T for k in kids))
        return Verdict(w, label, tuple(kids))
    raise TypeError(f"cannot adjudicate {f!r}")


def winner_finite(f: Formula, I: Interpretation, run: Iterable[LabeledMove],
                  detail: bool = True) -> Verdict:
    """Verdict for a finite run.  Child labels are addresses: ``2@01.1`` is
    operand 1 in thread 01 of operand 2; ``#k`` marks copy ``k``."""
    run = tuple(run)
    bad = first_illegal(f, run)
    if bad is not None:
        k, exc = bad
        offender = run[k].player
        return Verdict(offender.opposite, "", (), f"move {k}: {exc}")
    return _eval(f, I, run, "", detail)


def winner(f: Formula, I: Interpretation, run: Iterable[LabeledMove]) -> Player:
    return winner_finite(f, I, run, detail=False).winner


# ---------------------------------------------------------------- component report

@dataclass(frozen=True)
class ComponentReport:
    name: str
    address: str
    winner: Player
    parts: tuple[tuple[str, Player], ...]  # (thread or copy label, winner)

    def line(self) -> str:
        parts = " ".join(f"{k}={w.value}" for k, w in self.parts)
        return f"{self.name} [{self.address}]: {self.winner.value}" + (f" {parts}" if parts else "")


@dataclass(frozen=True)
class Report:
    winner: Player
    components: tuple[ComponentReport, ...]
    illegal: str | None = None

    def lines(self) -> list[str]:
        head = f"overall: {self.winner.value}" + (f" (illegal: {self.illegal})" if self.illegal else "")
        return [head] + [c.line() for c in self.components]

    def component(self, name: str) -> ComponentReport:
        for c in self.components:
            if c.name == name:
                return c
        raise KeyError(name)


def _has_recurrence(f: Formula) -> bool:
    if isinstance(f, (PRec, PCorec, BRec, BCorec)):
        return True
    if isinstance(f, Atom):
        return False
    return any(_has_recurrence(c) for c in children(f))


def component_names(f: Formula) -> list[str]:
    """Names for the top-level disjuncts of a production-style formula."""
    if not isinstance(f, Or):
        return ["game"]
    names = []
    for c in f.children:
        if not _has_recurrence(c):
            names.append("recurrence-free")
        elif isinstance(c, (PCorec, BCorec)):
            names.append("?")
        elif isinstance(c, (PRec, BRec)):
            names.append("!")
        else:
            names.append("other")
    qs = [i for i, n in enumerate(names) if n == "?"]
    for k, i in enumerate(qs):
        names[i] = "?-component" if len(qs) == 1 else ("left ?-component" if k == 0 else
                                                        "right ?-component" if k == 1 else
                                                        f"?-component {k + 1}")
    names = [("!-component" if n == "!" else n) for n in names]
    seen: dict[str, int] = {}
    out = []
    for n in names:
        seen[n] = seen.get(n, 0) + 1
        out.append(n if seen[n] == 1 else f"{n} {seen[n]}")
    return out


def decompose_verdict(f: Formula, I: Interpretation, run: Iterable[LabeledMove]) -> Report:
    """Per-component winners, with per-thread (or per-copy) winners inside
    recurrence components."""
    v = winner_finite(f, I, run)
    if v.illegal:
        return Report(v.winner, (), v.illegal)
    if not isinstance(f, Or):
        return Report(v.winner, (ComponentReport("game", "", v.winner, ()),))
    comps = []
    for name, kid in zip(component_names(f), v.children):
        parts = ()
        if kid.children and name != "recurrence-free":
            parts = tuple((c.label.split("@")[-1] if "@" in c.label else c.label.split("#")[-1],
                           c.winner) for c in kid.children)
        comps.append(ComponentReport(name, kid.label, kid.winner, parts))
    return Report(v.winner, tuple(comps))


# ---------------------------------------------------------------- stock interpretations

def constant_interpretation(f: Formula, value: bool) -> Interpretation:
    """Every elementary atom has truth ``value``; every enumeration game is won
    by the machine iff ``value``."""
    el, en = {}, {}
    for name, letter in letters(f).items():
        if letter.kind is Kind.ELEMENTARY:
            el[name] = lambda *a, _v=value: _v
        else:
            en[name] = lambda s, t, _v=value: _v
    return Interpretation(el, en, f"constant {value}")
