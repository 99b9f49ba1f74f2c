"""Formula language for recurrence games.

Formulas are immutable trees.  Letters are either elementary (a truth
predicate over constants, no legal moves) or enumeration letters (any
constant is a legal move for either player).  Constants are positive ints.

Concrete syntax (ASCII)::

    ~A          negation
    A & B       parallel conjunction
    A | B       parallel disjunction
    A -> B      implication, right associative
    A x. F      choice universal (the environment picks x)
    E x. F      choice existential (the machine picks x)
    !p F  ?p F  parallel recurrence / corecurrence
    !c F  ?c F  countable branching recurrence / corecurrence
    !u F  ?u F  uncountable branching recurrence / corecurrence
    ! F   ? F   recurrence given by the ``bang`` binding of the parser

Precedence is ``~`` (and every prefix operator) > ``&`` > ``|`` > ``->``.
A prefix operator applies to the following unary expression only, so
``E x. A y. p(x,y) & Q`` is ``(E x. A y. p(x,y)) & Q``.  An atom may carry an
occurrence tag, written ``P^3``.

Because ``!p``/``!u``/``!c`` are read greedily, a letter named ``p``, ``u``
or ``c`` directly after a bare ``!`` needs a space: ``! p(x,y)``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Union


class Kind(enum.Enum):
    ELEMENTARY = "elementary"
    ENUMERATION = "enumeration"


class Card(enum.Enum):
    UNCOUNTABLE = "uncountable"
    ALEPH0 = "aleph0"


@dataclass(frozen=True)
class Letter:
    name: str
    kind: Kind
    arity: int = 0


Term = Union[str, int]  # variable name or constant


@dataclass(frozen=True)
class Atom:
    letter: Letter
    args: tuple[Term, ...] = ()
    occ: str | None = field(default=None, compare=True)


@dataclass(frozen=True)
class Neg:
    child: "Formula"


@dataclass(frozen=True)
class And:
    children: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["Formula", ...]


@dataclass(frozen=True)
class ChoiceAll:
    var: str
    child: "Formula"


@dataclass(frozen=True)
class ChoiceExists:
    var: str
    child: "Formula"


@dataclass(frozen=True)
class PRec:
    child: "Formula"


@dataclass(frozen=True)
class PCorec:
    child: "Formula"


@dataclass(frozen=True)
class BRec:
    card: Card
    child: "Formula"


@dataclass(frozen=True)
class BCorec:
    card: Card
    child: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


Formula = Union[Atom, Neg, And, Or, ChoiceAll, ChoiceExists, PRec, PCorec,
                BRec, BCorec, Implies]

UNARY = (Neg, ChoiceAll, ChoiceExists, PRec, PCorec, BRec, BCorec)


def _memo_hash(cls):
    # formulas are immutable trees used as cache keys; hash each node once
    field_hash = cls.__hash__

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = field_hash(self)
            object.__setattr__(self, "_hash", h)
            return h

    cls.__hash__ = __hash__
    return cls


for _cls in (Atom, Neg, And, Or, ChoiceAll, ChoiceExists, PRec, PCorec, BRec, BCorec, Implies):
    _memo_hash(_cls)


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        where = f" at position {pos}" if pos is not None else ""
        super().__init__(f"{message}{where}")


class FormulaError(ValueError):
    """Well-formedness violation (unbound variable, letter kind clash, ...)."""


# ---------------------------------------------------------------- recurrence selectors

# "prec" -> parallel, otherwise a branching cardinality
_SELECTORS = {
    "p": "prec", "prec": "prec", "parallel": "prec",
    "c": Card.ALEPH0, "aleph0": Card.ALEPH0, "countable": Card.ALEPH0,
    "u": Card.UNCOUNTABLE, "uncountable": Card.UNCOUNTABLE,
}


def selector(name: str | Card) -> str | Card:
    """Normalise a recurrence selector name to ``"prec"`` or a :class:`Card`."""
    if isinstance(name, Card):
        return name
    try:
        return _SELECTORS[name]
    except KeyError:
        raise ValueError(f"unknown recurrence selector {name!r}") from None


def make_rec(sel: str | Card, child: Formula, dual: bool = False) -> Formula:
    sel = selector(sel)
    if sel == "prec":
        return PCorec(child) if dual else PRec(child)
    return BCorec(sel, child) if dual else BRec(sel, child)


# ---------------------------------------------------------------- lexer / parser

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<rec>[!?](?:[puc](?![A-Za-z0-9_]))?)
  | (?P<num>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>[~&|().,^])
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, bang):
        self.toks = _tokenize(text)
        self.i = 0
        self.bang = bang

    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self, value: str | None = None, kind: str | None = None):
        tok = self.peek()
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = value if value is not None else kind
            got = tok[1] or "end of input"
            raise FormulaSyntaxError(f"expected {want!r}, got {got!r}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.impl()
        if self.peek()[0] != "eof":
            raise FormulaSyntaxError(f"unexpected {self.peek()[1]!r}", self.peek()[2])
        return f

    def impl(self) -> Formula:
        left = self.disj()
        if self.peek()[0] == "arrow":
            self.take()
            return Implies(left, self.impl())
        return left

    def disj(self) -> Formula:
        items = [self.conj()]
        while self.peek()[1] == "|":
            self.take()
            items.append(self.conj())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conj(self) -> Formula:
        items = [self.unary()]
        while self.peek()[1] == "&":
            self.take()
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self) -> Formula:
        kind, val, pos = self.peek()
        if val == "~":
            self.take()
            return Neg(self.unary())
        if kind == "rec":
            self.take()
            dual = val[0] == "?"
            if len(val) == 2:
                sel = selector(val[1])
            elif self.bang is None:
                raise FormulaSyntaxError(f"bare {val!r} without a recurrence binding", pos)
            else:
                sel = self.bang
            return make_rec(sel, self.unary(), dual)
        if (kind == "ident" and val in ("A", "E") and self.peek(1)[0] == "ident"
                and self.peek(2)[1] == "."):
            self.take()
            var = self.take(kind="ident")[1]
            self.take(".")
            body = self.unary()
            return ChoiceAll(var, body) if val == "A" else ChoiceExists(var, body)
        return self.primary()

    def primary(self) -> Formula:
        kind, val, pos = self.peek()
        if val == "(":
            self.take()
            f = self.impl()
            self.take(")")
            return f
        if kind != "ident":
            raise FormulaSyntaxError(f"expected a formula, got {val or 'end of input'!r}", pos)
        self.take()
        args: list[Term] = []
        if self.peek()[1] == "(":
            self.take()
            while True:
                k, v, p = self.peek()
                if k == "num":
                    args.append(_constant(v, p))
                elif k == "ident":
                    args.append(v)
                else:
                    raise FormulaSyntaxError("expected a variable or constant", p)
                self.take()
                if self.peek()[1] == ",":
                    self.take()
                    continue
                self.take(")")
                break
        occ = None
        if self.peek()[1] == "^":
            self.take()
            k, v, p = self.peek()
            if k not in ("num", "ident"):
                raise FormulaSyntaxError("expected an occurrence tag", p)
            self.take()
            occ = v
        # kind is provisional here, fixed up by _assign_kinds
        return Atom(Letter(val, Kind.ENUMERATION, len(args)), tuple(args), occ)


def _constant(text: str, pos: int | None = None) -> int:
    if not re.fullmatch(r"[1-9][0-9]*", text):
        raise FormulaSyntaxError(f"constant {text!r} is not a canonical positive numeral", pos)
    return int(text)


def parse_formula(text: str, bang: str | Card | None = None,
                  kinds: Mapping[str, Kind] | None = None) -> Formula:
    """Parse ``text`` into a formula.

    ``bang`` binds the bare ``!``/``?`` operators to a recurrence.  Letters
    with arguments are elementary; argument-free letters are enumeration
    letters unless ``kinds`` says otherwise.
    """
    sel = selector(bang) if bang is not None else None
    f = _Parser(text, sel).parse()
    f = _assign_kinds(f, dict(kinds or {}))
    check_bound(f)
    return f


def _assign_kinds(f: Formula, kinds: dict[str, Kind]) -> Formula:
    seen: dict[str, Letter] = {}

    def fix(atom: Atom) -> Atom:
        name, arity = atom.letter.name, len(atom.args)
        kind = kinds.get(name, Kind.ELEMENTARY if arity else Kind.ENUMERATION)
        if kind is Kind.ENUMERATION and arity:
            raise FormulaError(f"enumeration letter {name} cannot take arguments")
        letter = Letter(name, kind, arity)
        prev = seen.setdefault(name, letter)
        if prev != letter:
            raise FormulaError(f"letter {name} used with conflicting kinds/arities")
        return replace(atom, letter=letter)

    return map_atoms(f, fix)


def check_bound(f: Formula, bound: frozenset[str] = frozenset()) -> None:
    """Raise :class:`FormulaError` if an atom mentions an unbound variable."""
    if isinstance(f, Atom):
        for a in f.args:
            if isinstance(a, str) and a not in bound:
                raise FormulaError(f"unbound variable {a} in {render(f)}")
    elif isinstance(f, (ChoiceAll, ChoiceExists)):
        check_bound(f.child, bound | {f.var})
    else:
        for c in children(f):
            check_bound(c, bound)


# ---------------------------------------------------------------- generic traversal

def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, Atom):
        return ()
    if isinstance(f, (And, Or)):
        return f.children
    if isinstance(f, Implies):
        return (f.left, f.right)
    return (f.child,)


def rebuild(f: Formula, kids: tuple[Formula, ...]) -> Formula:
    if isinstance(f, Atom):
        return f
    if isinstance(f, (And, Or)):
        return type(f)(tuple(kids))
    if isinstance(f, Implies):
        return Implies(*kids)
    return replace(f, child=kids[0])


def map_atoms(f: Formula, fn) -> Formula:
    if isinstance(f, Atom):
        return fn(f)
    return rebuild(f, tuple(map_atoms(c, fn) for c in children(f)))


def atoms(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    for c in children(f):
        yield from atoms(c)


def letters(f: Formula) -> dict[str, Letter]:
    return {a.letter.name: a.letter for a in atoms(f)}


def substitute(f: Formula, var: str, value: int) -> Formula:
    """Replace free occurrences of ``var`` by the constant ``value``."""
    if isinstance(f, Atom):
        if var not in f.args:
            return f
        return replace(f, args=tuple(value if a == var else a for a in f.args))
    if isinstance(f, (ChoiceAll, ChoiceExists)) and f.var == var:
        return f
    return rebuild(f, tuple(substitute(c, var, value) for c in children(f)))


def is_nnf(f: Formula) -> bool:
    if isinstance(f, Implies):
        return False
    if isinstance(f, Neg):
        return isinstance(f.child, Atom)
    return all(is_nnf(c) for c in children(f))


# ---------------------------------------------------------------- rewriting

def to_nnf(f: Formula) -> Formula:
    """Negation normal form: eliminate ``->``, push ``~`` down to atoms.

    Nested conjunctions (disjunctions) are flattened, so the result of
    rewriting ``A & B -> C`` is a single three-way disjunction.
    """
    return _nnf(f, False)


def _flat(cls, items) -> Formula:
    out: list[Formula] = []
    for it in items:
        if isinstance(it, cls):
            out.extend(it.children)
        else:
            out.append(it)
    return cls(tuple(out))


def _nnf(f: Formula, neg: bool) -> Formula:
    if isinstance(f, Atom):
        return Neg(f) if neg else f
    if isinstance(f, Neg):
        return _nnf(f.child, not neg)
    if isinstance(f, Implies):
        return _nnf(Or((Neg(f.left), f.right)), neg)
    if isinstance(f, (And, Or)):
        cls = type(f) if not neg else (Or if isinstance(f, And) else And)
        return _flat(cls, [_nnf(c, neg) for c in f.children])
    if isinstance(f, ChoiceAll):
        return (ChoiceExists if neg else ChoiceAll)(f.var, _nnf(f.child, neg))
    if isinstance(f, ChoiceExists):
        return (ChoiceAll if neg else ChoiceExists)(f.var, _nnf(f.child, neg))
    if isinstance(f, PRec):
        return (PCorec if neg else PRec)(_nnf(f.child, neg))
    if isinstance(f, PCorec):
        return (PRec if neg else PCorec)(_nnf(f.child, neg))
    if isinstance(f, BRec):
        return (BCorec if neg else BRec)(f.card, _nnf(f.child, neg))
    if isinstance(f, BCorec):
        return (BRec if neg else BCorec)(f.card, _nnf(f.child, neg))
    raise TypeError(f"not a formula: {f!r}")


def number_occurrences(f: Formula) -> Formula:
    """Tag atom occurrences 1, 2, ... in left-to-right order."""
    counter = iter(range(1, 1 << 30))
    return map_atoms(f, lambda a: replace(a, occ=str(next(counter))))


# ---------------------------------------------------------------- rendering

def render(f: Formula) -> str:
    if isinstance(f, Atom):
        s = f.letter.name
        if f.args:
            s += "(" + ",".join(str(a) for a in f.args) + ")"
        if f.occ is not None:
            s += "^" + f.occ
        return s
    if isinstance(f, Neg):
        return "~" + _unary_arg(f.child)
    if isinstance(f, ChoiceAll):
        return f"A {f.var}. " + _unary_arg(f.child)
    if isinstance(f, ChoiceExists):
        return f"E {f.var}. " + _unary_arg(f.child)
    if isinstance(f, (PRec, PCorec, BRec, BCorec)):
        return _rec_symbol(f) + " " + _unary_arg(f.child)
    if isinstance(f, And):
        return " & ".join(_paren(c, (And, Or, Implies)) for c in f.children)
    if isinstance(f, Or):
        return " | ".join(_paren(c, (Or, Implies)) for c in f.children)
    if isinstance(f, Implies):
        return _paren(f.left, (Implies,)) + " -> " + render(f.right)
    raise TypeError(f"not a formula: {f!r}")


def _rec_symbol(f) -> str:
    if isinstance(f, PRec):
        return "!p"
    if isinstance(f, PCorec):
        return "?p"
    suffix = "u" if f.card is Card.UNCOUNTABLE else "c"
    return ("!" if isinstance(f, BRec) else "?") + suffix


def _paren(f: Formula, kinds) -> str:
    s = render(f)
    return f"({s})" if isinstance(f, kinds) else s


def _unary_arg(f: Formula) -> str:
    return _paren(f, (And, Or, Implies))


# ---------------------------------------------------------------- schemes

SCHEME_TEXT = {
    # P & !(P -> P & Q) -> !Q
    "short-prod": "P & !(P -> P & Q) -> !Q",
    # P & !(P -> P & Q) & !(R | Q -> R) -> !R
    "long-prod": "P & !(P -> P & Q) & !(R | Q -> R) -> !R",
    "s4-instance": ("E x. A y. p(x,y) & !(E x. A y. p(x,y) -> E x. A y. p(x,y) & E x. A y. p(x,y))"
                    " -> ! E x. A y. p(x,y)"),
    "s6-instance": "P & !(P -> P & P) & !(P | P -> P) -> !P",
}

SCHEMES = tuple(SCHEME_TEXT)


def instantiate_scheme(scheme: str, bang: str | Card,
                       letters: Mapping[str, Letter | str] | None = None) -> Formula:
    """Build the negation-normal-form game formula for a named scheme.

    ``letters`` renames/retypes the scheme letters, e.g. ``{"Q": "P"}`` plays
    short production with both letters identified, and
    ``{"P": Letter("P", Kind.ELEMENTARY)}`` makes ``P`` elementary.  Atom
    occurrences are tagged 1, 2, ... left to right.
    """
    if scheme not in SCHEME_TEXT:
        raise ValueError(f"unknown scheme {scheme!r}")
    sel = selector(bang)
    if scheme in ("s4-instance", "s6-instance") and sel == "prec":
        raise ValueError(f"{scheme} is only defined for branching recurrences")
    base = parse_formula(SCHEME_TEXT[scheme], bang=sel)
    mapping: dict[str, Letter] = {}
    for name, letter in (letters or {}).items():
        if isinstance(letter, str):
            letter = Letter(letter, Kind.ENUMERATION, 0)
        mapping[name] = letter
    for name, letter in mapping.items():
        if scheme == "s4-instance" and (letter.kind is not Kind.ELEMENTARY or letter.arity != 2):
            raise FormulaError("s4-instance needs a binary elementary letter")
        if scheme == "s6-instance" and letter.kind is not Kind.ENUMERATION:
            raise FormulaError("s6-instance needs an enumeration letter")
    out = map_atoms(base, lambda a: replace(a, letter=mapping.get(a.letter.name, a.letter)))
    by_name: dict[str, Letter] = {}
    for a in atoms(out):
        if by_name.setdefault(a.letter.name, a.letter) != a.letter:
            raise FormulaError(f"letter {a.letter.name} bound to conflicting kinds")
    return number_occurrences(to_nnf(out))
