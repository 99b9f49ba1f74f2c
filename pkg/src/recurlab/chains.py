"""Literal inventories, chains and the falsifying interpretations.

Two analyses are provided:

``s4``
    For the elementary short-production instance played against C.  A
    literal is a signed atom ``p(a,b)``/``~p(a,b)`` that the play has brought
    some component down to.  Chains alternate a positive literal, its
    opposite, and a positive threadmate of that opposite.

``s6``
    For the enumeration long-production instance played against D.  A
    literal is an occurrence/thread pair carrying a content (machine moves,
    environment moves).  Chains start at the first disjunct and alternate
    matching and threadmate steps; the type of a chain is its sequence of
    occurrence numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .adjudicator import Interpretation
from .arena import B, GameState, LabeledMove, T, check_and_apply, new_game, resolve, state_at
from .formula import Atom, Formula, Neg


class AnalysisError(RuntimeError):
    """Raised when an argument step fails on a concrete trace."""


# ================================================================ s4

@dataclass(frozen=True)
class S4Literal:
    positive: bool
    a: int
    b: int
    sites: tuple[str, ...] = field(compare=False, default=())
    at: int = field(compare=False, default=0)

    @property
    def key(self) -> tuple[bool, int, int]:
        return (self.positive, self.a, self.b)

    def __str__(self) -> str:
        return f"{'' if self.positive else '~'}p({self.a},{self.b})"


@dataclass(frozen=True)
class S4Chain:
    literals: tuple[tuple[bool, int, int], ...]

    @property
    def is_chain(self) -> bool:
        return len(self.literals) % 2 == 0

    @property
    def head(self) -> tuple[int, int]:
        return self.literals[0][1:]

    @property
    def a_seq(self) -> tuple[int, ...]:
        return tuple(a for pos, a, _ in self.literals if pos)

    @property
    def b_seq(self) -> tuple[int, ...]:
        return tuple(b for pos, _, b in self.literals if pos)

    def complete(self) -> bool:
        last = self.literals[-1]
        return self.is_chain and not last[0] and last[1] == 1

    def __str__(self) -> str:
        return ", ".join(f"{'' if p else '~'}p({a},{b})" for p, a, b in self.literals)


@dataclass
class S4Inventory:
    literals: dict[tuple[bool, int, int], S4Literal]
    threadmates: dict[tuple[int, int], set[tuple[int, int]]]  # ~p(b,c) -> {p(a,d)}
    activation: dict[int, int]                                 # constant -> round
    heads: tuple[tuple[int, int], ...]                          # p(m,n1), p(m,n2)

    def positive(self) -> list[S4Literal]:
        return [l for l in self.literals.values() if l.positive]

    def table(self) -> list[str]:
        rows = []
        for key in sorted(self.literals):
            lit = self.literals[key]
            rows.append(f"{lit} at={lit.at} sites={','.join(lit.sites)}")
        return rows


def _s4_snapshot(s: GameState) -> tuple[dict, set]:
    """Literals (key -> sites) and threadmate pairs present in ``s``."""
    lits: dict[tuple[bool, int, int], set[str]] = {}
    mates = set()

    def add(f, site):
        if isinstance(f, Atom):
            lits.setdefault((True,) + tuple(f.args), set()).add(site)
            return (True,) + tuple(f.args)
        if isinstance(f, Neg):
            lits.setdefault((False,) + tuple(f.child.args), set()).add(site)
            return (False,) + tuple(f.child.args)
        return None

    f, st = resolve(*state_at(s, ("1",)))
    add(f, "1")
    qf, qs = state_at(s, ("2",))
    for w, leaf in qs.leaves:
        g, gs = resolve(qf.child, leaf)
        first = add(resolve(g.children[0], gs.children[0])[0], f"2@{w}.1")
        disj_f, disj_s = g.children[1], gs.children[1]
        for k in (0, 1):
            neg = add(resolve(disj_f.children[k], disj_s.children[k])[0], f"2@{w}.2.{k + 1}")
            if first is not None and neg is not None:
                mates.add((first[1:], neg[1:]))
    bf, bs = state_at(s, ("3",))
    for w, leaf in bs.leaves:
        add(resolve(bf.child, leaf)[0], f"3@{w}")
    return lits, mates


def extract_s4(f: Formula, run: Sequence[LabeledMove], rounds: Sequence[int] | None = None,
               heads: Sequence[tuple[int, int]] = ()) -> S4Inventory:
    """Replay ``run`` and record each literal with the round it first appeared."""
    if rounds is None:
        rounds = list(range(1, len(run) + 1))
    s = new_game(f)
    first_seen: dict[tuple, int] = {}
    sites: dict[tuple, set[str]] = {}
    mates: set = set()
    activation: dict[int, int] = {}
    for m, r in zip(run, rounds):
        s = check_and_apply(s, m)
        c = int(m.path[-1]) if m.path[-1].isdigit() else None
        if c is not None:
            activation.setdefault(c, r)
        lits, new_mates = _s4_snapshot(s)
        for key, where in lits.items():
            first_seen.setdefault(key, r)
            sites.setdefault(key, set()).update(where)
        mates |= new_mates
    literals = {key: S4Literal(key[0], key[1], key[2], tuple(sorted(sites[key])), first_seen[key])
                for key in first_seen}
    tm: dict[tuple[int, int], set[tuple[int, int]]] = {}
    for pos, neg in mates:
        tm.setdefault(neg, set()).add(pos)
    return S4Inventory(literals, tm, activation, tuple(heads))


def build_s4_chains(inv: S4Inventory) -> list[S4Chain]:
    """Every headed chain and semichain, by depth-first search from the heads."""
    out: list[S4Chain] = []
    for head in inv.heads:
        if (True,) + head not in inv.literals:
            continue
        stack = [((True,) + head,)]
        while stack:
            seq = stack.pop()
            out.append(S4Chain(seq))
            last = seq[-1]
            if last[0]:
                opp = (False, last[1], last[2])
                if opp in inv.literals:
                    stack.append(seq + (opp,))
            else:
                for pos in sorted(inv.threadmates.get(last[1:], ())):
                    nxt = (True,) + pos
                    if nxt in seq:
                        raise AnalysisError(f"threadmate cycle through {nxt}")
                    if nxt in inv.literals:
                        stack.append(seq + (nxt,))
    return sorted(out, key=lambda c: (len(c.literals), c.literals))


S4_CHECKS = ("activation-order", "reachability", "distinct-activation", "head-separation",
             "one-complete-head")
S6_CHECKS = ("distinct-contents", "unique-types", "finite-count")


@dataclass
class LemmaResult:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"{self.name}: {'pass' if self.ok else 'FAIL'}" + (f" ({self.detail})" if self.detail else "")


def check_s4_lemmas(inv: S4Inventory, chains: Sequence[S4Chain]) -> list[LemmaResult]:
    at = inv.activation
    semis = [c for c in chains if not c.is_chain]
    full = [c for c in chains if c.is_chain]
    res = []

    bad = ""
    for c in semis:
        seq = [at[a] for a in c.a_seq]
        if any(x <= y for x, y in zip(seq, seq[1:])):
            bad = f"activation times not decreasing along {c}"
            break
    if not bad:
        for c in semis:
            for d in semis:
                if len(c.literals) == len(d.literals) and c.a_seq != d.a_seq:
                    bad = f"{c} vs {d}"
                    break
            if bad:
                break
    res.append(LemmaResult("activation-order", not bad, bad))

    reachable = {c.literals[-1] for c in semis}
    if inv.heads:
        missing = [str(l) for l in inv.positive() if l.key not in reachable]
        res.append(LemmaResult("reachability", not missing, " ".join(missing)))
    else:
        stray = [str(l) for l in inv.positive()]
        res.append(LemmaResult("reachability", not stray, "positive literals without a split: " + " ".join(stray)
                               if stray else "vacuous"))

    consts = sorted({key[1] for key in reachable})
    clash = [(a, b) for i, a in enumerate(consts) for b in consts[i + 1:] if at[a] == at[b]]
    res.append(LemmaResult("distinct-activation", not clash, str(clash) if clash else ""))

    bad = ""
    if len(inv.heads) == 2:
        one = [c for c in full if c.head == inv.heads[0]]
        two = [c for c in full if c.head == inv.heads[1]]
        for c in one:
            for d in two:
                if len(c.literals) == len(d.literals) and c.a_seq == d.a_seq:
                    if any(x == y for x, y in zip(c.b_seq, d.b_seq)):
                        bad = f"{c} vs {d}"
    res.append(LemmaResult("head-separation", not bad, bad))

    complete = {h for h in inv.heads if any(c.complete() and c.head == h for c in full)}
    res.append(LemmaResult("one-complete-head", len(complete) < 2 or len(inv.heads) < 2,
                           "both heads complete" if len(complete) == 2 else ""))
    return res


def induce_s4(inv: S4Inventory, chains: Sequence[S4Chain]) -> tuple[Interpretation, dict]:
    """All-true if the !-component was never split; otherwise make the atoms of
    the semichains of a head without a complete chain false."""
    if not inv.heads:
        interp = Interpretation({"p": lambda a, b: True}, {}, "every atom true")
        return interp, {"mode": "all-true"}
    complete = [any(c.complete() and c.head == h for c in chains if c.is_chain) for h in inv.heads]
    if all(complete):
        raise AnalysisError("both heads admit complete chains")
    i = complete.index(False)
    head = inv.heads[i]
    false_atoms = frozenset((a, b) for c in chains if c.head == head and not c.is_chain
                            for _, a, b in c.literals)
    interp = Interpretation({"p": lambda a, b, _f=false_atoms: (a, b) not in _f}, {},
                            f"atoms reachable from head {i + 1} false, others true")
    return interp, {"mode": "reachable-false", "head": i + 1,
                    "false_atoms": sorted(list(x) for x in false_atoms)}


# ================================================================ s6

S6Key = tuple[int, str]  # (occurrence, thread); thread "" for the first disjunct


@dataclass(frozen=True)
class S6Literal:
    occ: int
    thread: str | None
    positive: bool
    top: frozenset[int]  # moves by the machine
    bot: frozenset[int]  # moves by the environment

    @property
    def key(self) -> tuple[int, str]:
        return (self.occ, self.thread or "")

    @property
    def content(self) -> tuple[frozenset, frozenset]:
        return (self.top, self.bot)

    def __str__(self) -> str:
        sign = "" if self.positive else "~"
        return f"{sign}P{self.occ}" + (f"_{self.thread or 'e'}" if self.thread is not None else "")


_S6_SITES = {
    2: ("2", ("1",)), 3: ("2", ("2", "1")), 4: ("2", ("2", "2")),
    5: ("3", ("1", "1")), 6: ("3", ("1", "2")), 7: ("3", ("2",)),
}


def _content(s: GameState, site: tuple[str, ...]) -> tuple[bool, frozenset, frozenset]:
    f, st = state_at(s, site)
    if isinstance(f, Neg):
        log = [(p.opposite, c) for p, c, _ in st.child.log]
        positive = False
    else:
        log = [(p, c) for p, c, _ in st.log]
        positive = True
    return (positive, frozenset(c for p, c in log if p is T), frozenset(c for p, c in log if p is B))


def extract_s6(s: GameState) -> list[S6Literal]:
    out = []
    pos, top, bot = _content(s, ("1",))
    out.append(S6Literal(1, None, pos, top, bot))
    for occ, (comp, rest) in _S6_SITES.items():
        _, tree = state_at(s, (comp,))
        for w, _ in tree.leaves:
            pos, top, bot = _content(s, (comp, w) + rest)
            out.append(S6Literal(occ, w, pos, top, bot))
    _, bang = state_at(s, ("4",))
    for w, _ in bang.leaves:
        pos, top, bot = _content(s, ("4", w))
        out.append(S6Literal(8, w, pos, top, bot))
    return out


def _triple(lit: S6Literal) -> tuple[str, str] | None:
    if lit.occ in (2, 3, 4):
        return ("left", lit.thread)
    if lit.occ in (5, 6, 7):
        return ("right", lit.thread)
    return None


@dataclass(frozen=True)
class S6Chain:
    literals: tuple[S6Literal, ...]

    @property
    def type(self) -> tuple[int, ...]:
        return tuple(l.occ for l in self.literals)

    def __str__(self) -> str:
        return ", ".join(str(l) for l in self.literals)


def build_s6_chains(literals: Sequence[S6Literal]) -> list[S6Chain]:
    """All chains, by depth-first search over simple (literal, parity) paths."""
    by_content: dict[tuple, list[S6Literal]] = {}
    for l in literals:
        by_content.setdefault(l.content, []).append(l)
    triples: dict[tuple, list[S6Literal]] = {}
    for l in literals:
        t = _triple(l)
        if t is not None:
            triples.setdefault(t, []).append(l)
    start = [l for l in literals if l.occ == 1]
    out = []
    stack = [(l,) for l in start]
    while stack:
        seq = stack.pop()
        out.append(S6Chain(seq))
        last = seq[-1]
        seen = {(l.key, i % 2) for i, l in enumerate(seq)}
        if len(seq) % 2 == 1:
            nxt = [m for m in by_content.get((last.bot, last.top), []) if m.occ != 1]
        else:
            t = _triple(last)
            nxt = [m for m in triples.get(t, []) if m.key != last.key] if t else []
        for m in sorted(nxt, key=lambda l: l.key):
            if (m.key, len(seq) % 2) in seen:
                raise AnalysisError(f"chain search revisits {m}")
            stack.append(seq + (m,))
    return sorted(out, key=lambda c: (len(c.literals), c.type, [l.key for l in c.literals]))


def check_s6_lemmas(literals: Sequence[S6Literal], chains: Sequence[S6Chain],
                    leaves: int | None = None) -> list[LemmaResult]:
    res = []
    seen: dict[tuple, S6Literal] = {}
    clash = ""
    for l in literals:
        if l.content in seen:
            clash = f"{seen[l.content]} and {l}"
            break
        seen[l.content] = l
    res.append(LemmaResult("distinct-contents", not clash, clash))
    types: dict[tuple, S6Chain] = {}
    dup = ""
    for c in chains:
        if c.type in types and types[c.type].literals != c.literals:
            dup = f"{types[c.type]} / {c}"
            break
        types[c.type] = c
    res.append(LemmaResult("unique-types", not dup, dup))
    reach = {c.literals[-1].key for c in chains}
    ok = len(reach) <= len(types)
    detail = f"reachable={len(reach)} types={len(types)}"
    bang_reach = sum(1 for k in reach if k[0] == 8)
    if leaves is not None:
        ok = ok and bang_reach < leaves
        detail += f" reachable !-literals={bang_reach} leaves={leaves}"
    res.append(LemmaResult("finite-count", ok, detail))
    return res


def induce_s6(chains: Sequence[S6Chain], letter: str = "P") -> tuple[Interpretation, dict]:
    pos = frozenset(c.literals[-1].content for c in chains if c.literals[-1].positive)
    neg = frozenset(c.literals[-1].content for c in chains if not c.literals[-1].positive)

    def pred(s_top, s_bot, _pos=pos, _neg=neg):
        return (frozenset(s_top), frozenset(s_bot)) in _pos or (frozenset(s_bot), frozenset(s_top)) in _neg

    interp = Interpretation({}, {letter: pred}, "machine wins P iff the play matches a reachable literal")
    reach = sorted({str(c.literals[-1]) for c in chains})
    return interp, {"mode": "reachable-content", "reachable": reach}


# ================================================================ facade

@dataclass
class Analysis:
    mode: str
    literals: list[str]
    chains: list[str]
    lemmas: list[LemmaResult]
    interpretation: Interpretation
    details: dict
    inventory: object = None
    chain_objects: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(l.ok for l in self.lemmas)

    def record(self) -> dict:
        return {"mode": self.mode, "literals": self.literals, "chains": self.chains,
                "lemmas": [l.line() for l in self.lemmas],
                "interpretation": self.interpretation.description, "details": self.details}


def extract_literals(trace, mode: str):
    """Literal inventory of a finished trace (see :mod:`recurlab.harness`)."""
    if mode == "s4":
        led = trace.env_ledger
        heads = ((led["m"], led["n1"]), (led["m"], led["n2"])) if led.get("fired_iii") else ()
        return extract_s4(trace.formula, trace.run, trace.move_rounds, heads)
    if mode == "s6":
        return extract_s6(trace.state)
    raise ValueError(f"unknown analysis mode {mode!r}")


def build_chains(literals, mode: str):
    if mode == "s4":
        return build_s4_chains(literals)
    if mode == "s6":
        return build_s6_chains(literals)
    raise ValueError(f"unknown analysis mode {mode!r}")


def check_lemma_suite(trace, mode: str) -> list[LemmaResult]:
    lits = extract_literals(trace, mode)
    chains = build_chains(lits, mode)
    if mode == "s4":
        return check_s4_lemmas(lits, chains)
    _, bang = state_at(trace.state, ("4",))
    return check_s6_lemmas(lits, chains, len(bang.leaves))


def induce_interpretation(trace, mode: str) -> Interpretation:
    lits = extract_literals(trace, mode)
    chains = build_chains(lits, mode)
    return (induce_s4(lits, chains) if mode == "s4" else induce_s6(chains))[0]


def analyse(trace, mode: str) -> Analysis:
    lits = extract_literals(trace, mode)
    chains = build_chains(lits, mode)
    if mode == "s4":
        lemmas = check_s4_lemmas(lits, chains)
        interp, details = induce_s4(lits, chains)
        table = lits.table()
    else:
        _, bang = state_at(trace.state, ("4",))
        lemmas = check_s6_lemmas(lits, chains, len(bang.leaves))
        interp, details = induce_s6(chains)
        table = [f"{l} top={sorted(l.top)} bot={sorted(l.bot)}" for l in lits]
        details["types"] = [list(c.type) for c in chains]
    return Analysis(mode, table, [str(c) for c in chains], lemmas, interp, details, lits, list(chains))
