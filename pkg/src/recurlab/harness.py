"""Round scheduler, traces, and the desk-scale validity experiments.

A match alternates an environment batch and at most one machine move per
round for ``rounds`` rounds, then drains: the environment only responds and
the machine keeps stepping until it has nothing left to do (bounded by
``drain_cap``).  Environments with a closing batch play it last.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .adjudicator import Interpretation, Report, decompose_verdict
from .arena import B, GameState, IllegalMove, LabeledMove, T, check_and_apply, new_game
from .chains import Analysis, analyse
from .environments import (Environment, RandomEnv, SplitScheduleEnv, make_environment,
                           random_schedule)
from .formula import Formula, Kind, Letter, instantiate_scheme, letters, render
from .machines import KLayout, Machine, make_machine

SCHEME_ALIASES = {
    "s4": "s4-instance", "s6": "s6-instance",
    "short": "short-prod", "long": "long-prod",
}

FAMILIES = ("enumeration", "elementary", "mixed")


def scheme_formula(scheme: str, bang: str, family: str = "enumeration") -> Formula:
    """The game formula of a scheme, with letters typed by ``family``."""
    scheme = SCHEME_ALIASES.get(scheme, scheme)
    retype: dict[str, Letter | str] = {}
    if scheme in ("short-prod", "long-prod") and family != "enumeration":
        if family not in FAMILIES:
            raise ValueError(f"unknown letter family {family!r}")
        names = ("P", "Q", "R") if scheme == "long-prod" else ("P", "Q")
        for i, name in enumerate(names):
            if family == "elementary" or i % 2 == 1:
                retype[name] = Letter(name, Kind.ELEMENTARY, 0)
    return instantiate_scheme(scheme, bang, retype)


# ---------------------------------------------------------------- interpretations

def _salted(salt: str, *parts) -> bool:
    h = hashlib.sha256(repr((salt,) + parts).encode()).digest()
    return bool(h[0] & 1)


def interpretation_family(f: Formula, count: int = 6) -> list[Interpretation]:
    """A deterministic family of test interpretations for the letters of ``f``.

    Enumeration letters get a few structural predicates plus hashed tables;
    elementary letters get all-true, all-false and hashed truth tables.
    """
    enum_preds = [
        ("machine covers env", lambda t, b: b <= t),
        ("equal sets", lambda t, b: t == b),
        ("machine nonempty", lambda t, b: bool(t)),
        ("env empty", lambda t, b: not b),
    ]
    out = []
    lets = letters(f)
    for k in range(count):
        el, en = {}, {}
        for name, letter in sorted(lets.items()):
            salt = f"{k}:{name}"
            if letter.kind is Kind.ELEMENTARY:
                if k == 0:
                    el[name] = lambda *a: True
                elif k == 1:
                    el[name] = lambda *a: False
                else:
                    el[name] = lambda *a, _s=salt: _salted(_s, *a)
            elif k < len(enum_preds):
                en[name] = enum_preds[(k + len(name)) % len(enum_preds)][1]
            else:
                en[name] = lambda t, b, _s=salt: _salted(_s, tuple(sorted(t)), tuple(sorted(b)))
        out.append(Interpretation(el, en, f"family #{k}"))
    return out


# ---------------------------------------------------------------- config and trace

@dataclass
class MatchConfig:
    scheme: str
    bang: str
    machine: str
    env: str
    rounds: int
    seed: int = 0
    universe: int = 3
    out: str | None = None
    family: str = "enumeration"
    budget: int = 3
    drain: bool | None = None      # default: drain unless the environment is D
    drain_cap: int = 5000
    schedule: dict[int, str | None] | None = None
    interpretations: int = 6

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        self.scheme = SCHEME_ALIASES.get(self.scheme, self.scheme)

    @property
    def analysis_mode(self) -> str | None:
        if self.scheme == "s4-instance" and self.env == "c":
            return "s4"
        if self.scheme == "s6-instance" and self.env == "d":
            return "s6"
        return None

    def echo(self) -> dict:
        d = asdict(self)
        if self.schedule is not None:
            d["schedule"] = [[r, w] for r, w in sorted(self.schedule.items())]
        return d


@dataclass
class RoundRecord:
    round: int
    phase: str                       # play | drain | closing
    env: tuple[str, ...]
    machine: str | None
    digest: str


@dataclass
class Trace:
    config: MatchConfig
    formula: Formula
    rounds: list[RoundRecord] = field(default_factory=list)
    run: list[LabeledMove] = field(default_factory=list)
    move_rounds: list[int] = field(default_factory=list)
    state: GameState | None = None
    illegal: dict | None = None
    drain_exceeded: bool = False
    env_ledger: dict = field(default_factory=dict)
    machine_info: list[str] = field(default_factory=list)
    verdicts: list[tuple[str, Report]] = field(default_factory=list)
    analysis: Analysis | None = None
    machine: Machine | None = field(default=None, repr=False)
    environment: Environment | None = field(default=None, repr=False)

    @property
    def machine_won(self) -> bool:
        return bool(self.verdicts) and all(r.winner is T for _, r in self.verdicts)

    def records(self) -> list[dict]:
        out: list[dict] = [{"type": "config", **self.config.echo(), "formula": render(self.formula)}]
        k = 0
        for rec in self.rounds:
            batch = list(rec.env) + ([rec.machine] if rec.machine else [])
            for wire in batch:
                out.append({"type": "move", "index": k, "round": rec.round, "phase": rec.phase,
                            "move": wire})
                k += 1
            out.append({"type": "round", "round": rec.round, "phase": rec.phase,
                        "env": list(rec.env), "machine": rec.machine, "digest": rec.digest})
        if self.illegal:
            out.append({"type": "illegal", **self.illegal})
        if self.drain_exceeded:
            out.append({"type": "drain-exceeded", "cap": self.config.drain_cap})
        for name, rep in self.verdicts:
            out.append({"type": "verdict", "interpretation": name, "winner": rep.winner.value,
                        "report": rep.lines()})
        if self.analysis is not None:
            out.append({"type": "analysis", **self.analysis.record()})
        out.append({"type": "summary", "moves": len(self.run), "rounds": len(self.rounds),
                    "env_ledger": self.env_ledger, "machine": self.machine_info,
                    "machine_won": self.machine_won})
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records())

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())


Observer = Callable[[GameState, int, str, Machine, Environment], None]


def _build_env(cfg: MatchConfig) -> Environment:
    universe = tuple(range(1, cfg.universe + 1))
    if cfg.env == "random":
        return RandomEnv(cfg.seed, cfg.budget, universe)
    if cfg.env == "schedule":
        schedule = cfg.schedule
        if schedule is None:
            rng = random.Random(cfg.seed)
            schedule = random_schedule(rng, cfg.rounds, rng.randint(1, 6))
            cfg.schedule = schedule
        return SplitScheduleEnv(cfg.seed, schedule, cfg.budget, universe)
    return make_environment(cfg.env, cfg.seed)


def run_match(cfg: MatchConfig, observer: Observer | None = None) -> Trace:
    """Play one match and adjudicate it.

    ``observer`` is called after every round with the state, the round
    number, the phase, the machine and the environment.
    """
    f = scheme_formula(cfg.scheme, cfg.bang, cfg.family)
    machine = make_machine(cfg.machine, cfg.seed + 1)
    env = _build_env(cfg)
    machine.start(f)
    env.start(f)
    trace = Trace(cfg, f, machine=machine, environment=env)
    s = new_game(f)

    def play(batch: Sequence[LabeledMove], rnd: int) -> bool:
        nonlocal s
        for m in batch:
            try:
                s = check_and_apply(s, m)
            except IllegalMove as exc:
                trace.illegal = {"round": rnd, "player": m.player.value, "move": m.wire(),
                                 "reason": str(exc)}
                trace.run.append(m)
                trace.move_rounds.append(rnd)
                return False
            trace.run.append(m)
            trace.move_rounds.append(rnd)
        return True

    def one_round(rnd: int, phase: str, last: LabeledMove | None) -> tuple[bool, LabeledMove | None, bool]:
        batch = env.step(s, rnd, last, respond_only=(phase == "drain"))
        ok = play(batch, rnd)
        mv = machine.step(s, rnd) if ok else None
        if mv is not None:
            ok = play([mv], rnd)
        active = bool(batch) or mv is not None
        if phase == "play" or active:
            trace.rounds.append(RoundRecord(rnd, phase, tuple(m.wire() for m in batch),
                                            mv.wire() if mv else None, s.digest()))
            if observer is not None and ok:
                observer(s, rnd, phase, machine, env)
        return ok, mv, active

    ok, last = True, None
    rnd = 0
    for rnd in range(1, cfg.rounds + 1):
        ok, last, _ = one_round(rnd, "play", last)
        if not ok:
            break
    drain = cfg.drain if cfg.drain is not None else cfg.env != "d"
    if ok and drain:
        for _ in range(cfg.drain_cap):
            rnd += 1
            ok, last, active = one_round(rnd, "drain", last)
            if not ok or (not active and machine.settled(s)):
                break
        else:
            trace.drain_exceeded = True
    if ok:
        closing = env.closing(s)
        if closing:
            rnd += 1
            ok = play(closing, rnd)
            trace.rounds.append(RoundRecord(rnd, "closing", tuple(m.wire() for m in closing),
                                            None, s.digest()))
    trace.state = s
    trace.env_ledger = env.ledger()
    trace.machine_info = machine.describe()
    _adjudicate(trace)
    if cfg.out:
        trace.write(cfg.out)
    return trace


def _adjudicate(trace: Trace) -> None:
    cfg = trace.config
    mode = cfg.analysis_mode
    if mode is not None and trace.illegal is None:
        trace.analysis = analyse(trace, mode)
        interps = [trace.analysis.interpretation]
    else:
        interps = interpretation_family(trace.formula, cfg.interpretations)
    for interp in interps:
        trace.verdicts.append((interp.description,
                               decompose_verdict(trace.formula, interp, trace.run)))


# ---------------------------------------------------------------- replay

class ReplayMismatch(AssertionError):
    pass


def check_replay(trace: Trace) -> None:
    """Re-apply the recorded moves and compare every round digest."""
    s = new_game(trace.formula)
    k = 0
    for rec in trace.rounds:
        batch = list(rec.env) + ([rec.machine] if rec.machine else [])
        for wire in batch:
            m = LabeledMove.parse(wire)
            if m != trace.run[k]:
                raise ReplayMismatch(f"move {k}: recorded {wire}, run has {trace.run[k].wire()}")
            if trace.illegal and k == len(trace.run) - 1:
                return
            s = check_and_apply(s, m)
            k += 1
        if s.digest() != rec.digest:
            raise ReplayMismatch(f"round {rec.round}: digest {s.digest()} != {rec.digest}")


def replay_file(path: str | Path) -> int:
    """Replay a JSONL trace file; returns the number of rounds checked."""
    lines = [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
    cfg = lines[0]
    f = scheme_formula(cfg["scheme"], cfg["bang"], cfg["family"])
    s = new_game(f)
    illegal = any(r["type"] == "illegal" for r in lines)
    moves = [r for r in lines if r["type"] == "move"]
    count = 0
    k = 0
    for rec in lines:
        if rec["type"] == "move":
            if illegal and k == len(moves) - 1:
                break
            s = check_and_apply(s, LabeledMove.parse(rec["move"]))
            k += 1
        elif rec["type"] == "round":
            if s.digest() != rec["digest"]:
                raise ReplayMismatch(f"round {rec['round']}: digest mismatch")
            count += 1
    return count


# ---------------------------------------------------------------- K claim

def k_claim_violations(layout: KLayout, verdict) -> list[str]:
    """Lines of ``layout`` whose bang thread is lost while the recurrence-free
    component and every ?-thread of lines 1..m are lost as well."""
    def won(label: str) -> bool:
        v = verdict.find(label)
        if v is None:
            raise KeyError(label)
        return v.winner is T

    bad = []
    rescued = won("1")
    for m, line in enumerate(layout.lines, 1):
        rescued = rescued or won(f"2@{line.left or 'ε'}") or any(
            won(f"3@{v or 'ε'}") for v in line.right)
        if not won(f"4@{line.bang or 'ε'}") and not rescued:
            bad.append(f"line {m}")
    return bad


# ---------------------------------------------------------------- validity table

@dataclass
class TableConfig:
    matches: int = 20
    rounds: int = 40
    seed: int = 1
    d_rounds: int = 8
    out: str | None = None
    families: tuple[str, ...] = FAMILIES

    @classmethod
    def from_text(cls, text: str) -> "TableConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        cp.read_string(text if "[" in text else "[table]\n" + text)
        sec = cp["table"] if cp.has_section("table") else cp[cp.default_section]
        cfg = cls()
        for key in ("matches", "rounds", "seed", "d_rounds"):
            if key in sec:
                setattr(cfg, key, sec.getint(key))
        if "out" in sec:
            cfg.out = sec.get("out")
        if "families" in sec:
            cfg.families = tuple(x.strip() for x in sec.get("families").split(",") if x.strip())
        return cfg


@dataclass
class Cell:
    row: str
    column: str
    expected: str
    status: str           # VALID | INVALID | FAILED
    evidence: str
    runs: int
    passed: int
    traces: list[str] = field(default_factory=list)
    note: str = ""
    failures: list[str] = field(default_factory=list)


@dataclass
class TableReport:
    cells: list[Cell]

    @property
    def ok(self) -> bool:
        return all(c.status == c.expected for c in self.cells)

    def cell(self, row: str, column: str) -> Cell:
        for c in self.cells:
            if c.row == row and c.column == column:
                return c
        raise KeyError((row, column))

    def render(self) -> str:
        cols = ("prec", "aleph0", "uncountable")
        head = f"{'':18}" + "".join(f"{c:>14}" for c in cols)
        rows = [head]
        for row in ("short production", "long production"):
            rows.append(f"{row:18}" + "".join(f"{self.cell(row, c).status:>14}" for c in cols))
        rows.append("")
        for c in self.cells:
            rows.append(f"{c.row} / {c.column}: {c.status} ({c.passed}/{c.runs}) {c.evidence}"
                        + (f"; {c.note}" if c.note else ""))
            rows.extend(f"  failure: {x}" for x in c.failures[:5])
        return "\n".join(rows)


SUITE_C = ("naive", "random", "copycat")
SUITE_D = ("silent", "random", "static", "k")


def _trace_path(tc: TableConfig, name: str) -> str | None:
    if tc.out is None:
        return None
    Path(tc.out).mkdir(parents=True, exist_ok=True)
    return str(Path(tc.out) / f"{name}.jsonl")


def _fuzz_cell(tc: TableConfig, row: str, column: str, scheme: str, machine: str,
               env: str) -> Cell:
    cell = Cell(row, column, "VALID", "VALID", "machine strategy won every fuzzed match", 0, 0)
    for i in range(tc.matches):
        family = tc.families[i % len(tc.families)] if env != "schedule" else "enumeration"
        name = f"{scheme}-{column}-{machine}-{env}-{i}"
        cfg = MatchConfig(scheme, column, machine, env, tc.rounds, seed=tc.seed * 1000 + i,
                          family=family, out=_trace_path(tc, name))
        tr = run_match(cfg)
        cell.runs += 1
        ok = tr.machine_won and not tr.drain_exceeded and tr.illegal is None
        if ok:
            cell.passed += 1
        else:
            cell.failures.append(name)
        cell.traces.append(cfg.out or name)
    if cell.passed != cell.runs:
        cell.status = "FAILED"
    return cell


def _counter_cell(tc: TableConfig, row: str, column: str, scheme: str, env: str,
                  suite: Sequence[str], rounds: int, note: str = "") -> Cell:
    cell = Cell(row, column, "INVALID", "INVALID",
                "counterstrategy defeated every machine in the suite under its induced interpretation",
                0, 0, note=note)
    for machine in suite:
        name = f"{scheme}-{column}-{machine}-{env}"
        cfg = MatchConfig(scheme, column, machine, env, rounds, seed=tc.seed,
                          out=_trace_path(tc, name))
        tr = run_match(cfg)
        cell.runs += 1
        ok = (tr.analysis is not None and tr.analysis.ok and tr.verdicts
              and all(r.winner is B for _, r in tr.verdicts))
        if ok:
            cell.passed += 1
        else:
            cell.failures.append(name)
        cell.traces.append(cfg.out or name)
    if cell.passed != cell.runs:
        cell.status = "FAILED"
    return cell


def experiment_validity_table(config: TableConfig | str | None = None) -> TableReport:
    """Desk-scale evidence for the 2x3 validity pattern of the two production
    principles under the three recurrences."""
    if config is None:
        tc = TableConfig()
    elif isinstance(config, str):
        tc = TableConfig.from_text(config)
    else:
        tc = config
    short, long_ = "short production", "long production"
    cells = [
        _fuzz_cell(tc, short, "prec", "short-prod", "sp", "random"),
        _counter_cell(tc, short, "aleph0", "s4-instance", "c", SUITE_C, tc.rounds),
        _counter_cell(tc, short, "uncountable", "s4-instance", "c", SUITE_C, tc.rounds),
        _fuzz_cell(tc, long_, "prec", "long-prod", "lp", "random"),
        _fuzz_cell(tc, long_, "aleph0", "long-prod", "k", "schedule"),
        _counter_cell(tc, long_, "uncountable", "s6-instance", "d", SUITE_D, tc.d_rounds,
                      note="finite-shadow evidence; the infinitary step is not machine-checkable"),
    ]
    return TableReport(cells)
