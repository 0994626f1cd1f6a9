"""Linear temporal logic over action events, and a safety checker.

Formulas are interpreted over infinite action sequences: an atom holds at
step i iff it names the action taken at step i (an unprefixed atom also
matches that action under any declared agent prefix).  Checking works by
formula progression: each observed action rewrites the outstanding
obligation, and a violation is exactly a finite path whose obligation
collapses to false.  That makes the checker complete for the syntactic
safety fragment (literals, and/or, X, W, R, G after negation normal form),
which is the only fragment it accepts.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .lts import END_ACTION, Lts, Mlts, OccupancyAutomaton, ParseError, \
    complete_deadlocks, default_occupancy, to_lts, weaken

if TYPE_CHECKING:  # pragma: no cover
    from .requirements import Requirement


# ---------------------------------------------------------------------------
# syntax tree

@dataclass(frozen=True)
class Formula:
    def __str__(self):
        return fmt(self)


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula


@dataclass(frozen=True)
class Finally_(Formula):
    arg: Formula


@dataclass(frozen=True)
class Globally(Formula):
    arg: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class WeakUntil(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class StrongRelease(Formula):
    left: Formula
    right: Formula


TRUE = TrueF()
FALSE = FalseF()

_UNARY = {Not: "!", Next: "X", Finally_: "F", Globally: "G"}
_BINARY = {Until: "U", WeakUntil: "W", Release: "R", StrongRelease: "M",
           Implies: "->", Iff: "<->"}


def fmt(f: Formula) -> str:
    """Deterministic, re-parseable rendering; doubles as the sort key."""
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        inner = fmt(f.arg)
        return f"!{inner}" if isinstance(f.arg, Atom) else f"!({inner})"
    if isinstance(f, (Next, Finally_, Globally)):
        # composite arguments arrive pre-parenthesized from the clauses below
        return f"{_UNARY[type(f)]} {fmt(f.arg)}"
    if isinstance(f, And):
        return "(" + " && ".join(fmt(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(" + " || ".join(fmt(a) for a in f.args) + ")"
    op = _BINARY[type(f)]
    return f"({fmt(f.left)} {op} {fmt(f.right)})"


def conj(items) -> Formula:
    """Canonical conjunction: flattened, deduplicated, sorted, absorbed."""
    flat: list[Formula] = []
    for it in items:
        if isinstance(it, FalseF):
            return FALSE
        if isinstance(it, TrueF):
            continue
        if isinstance(it, And):
            flat.extend(it.args)
        else:
            flat.append(it)
    uniq = sorted(set(flat), key=fmt)
    if not uniq:
        return TRUE
    if len(uniq) == 1:
        return uniq[0]
    return And(tuple(uniq))


def disj(items) -> Formula:
    """Canonical disjunction, dual of conj."""
    flat: list[Formula] = []
    for it in items:
        if isinstance(it, TrueF):
            return TRUE
        if isinstance(it, FalseF):
            continue
        if isinstance(it, Or):
            flat.extend(it.args)
        else:
            flat.append(it)
    uniq = sorted(set(flat), key=fmt)
    if not uniq:
        return FALSE
    if len(uniq) == 1:
        return uniq[0]
    return Or(tuple(uniq))


def subformulas(f: Formula) -> set[Formula]:
    out = {f}
    if isinstance(f, (Not, Next, Finally_, Globally)):
        out |= subformulas(f.arg)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            out |= subformulas(a)
    elif isinstance(f, (Implies, Iff, Until, WeakUntil, Release, StrongRelease)):
        out |= subformulas(f.left) | subformulas(f.right)
    return out


def atoms_of(f: Formula) -> set[str]:
    return {g.name for g in subformulas(f) if isinstance(g, Atom)}


def to_dnf(f: Formula) -> Formula:
    """Canonical disjunctive normal form over non-boolean leaves.

    Clauses are sets of leaves, subsumed clauses dropped, everything
    sorted.  Flattening alone does not bound progression (alternating
    and/or towers can keep growing); this form does, since there are
    finitely many clause sets over a formula's closure.
    """
    clauses = _dnf_clauses(f)
    minimal = [c for c in clauses if not any(o < c for o in clauses)]
    return disj(conj(sorted(c, key=fmt)) for c in minimal)


def _dnf_clauses(f: Formula) -> set[frozenset[Formula]]:
    if isinstance(f, TrueF):
        return {frozenset()}
    if isinstance(f, FalseF):
        return set()
    if isinstance(f, Or):
        out: set[frozenset[Formula]] = set()
        for arg in f.args:
            out |= _dnf_clauses(arg)
        return out
    if isinstance(f, And):
        acc: set[frozenset[Formula]] = {frozenset()}
        for arg in f.args:
            arg_clauses = _dnf_clauses(arg)
            acc = {a | b for a in acc for b in arg_clauses}
        return acc
    return {frozenset({f})}


# ---------------------------------------------------------------------------
# parsing

_KEYWORDS = {"X", "U", "W", "R", "F", "G", "M", "true", "false"}
_ALIASES = {"□": " G ", "◯": " X ", "○": " X ", "●": " X ",
            "¬": " ! ", "∧": " && ", "∨": " || ",
            "→": " -> ", "↔": " <-> "}


def _tokenize(source: str):
    text = source
    for alias, plain in _ALIASES.items():
        text = text.replace(alias, plain)
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if text.startswith("<->", i):
            tokens.append(("<->", i))
            i += 3
        elif text.startswith("->", i):
            tokens.append(("->", i))
            i += 2
        elif text.startswith("&&", i):
            tokens.append(("&&", i))
            i += 2
        elif text.startswith("||", i):
            tokens.append(("||", i))
            i += 2
        elif c in "!()":
            tokens.append((c, i))
            i += 1
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_."):
                j += 1
            word = text[i:j]
            if word.count(".") > 1 or word.startswith(".") or word.endswith("."):
                raise ParseError(f"bad atom {word!r}", 1, i + 1)
            tokens.append((word, i))
            i = j
        else:
            raise ParseError(f"unexpected character {c!r}", 1, i + 1)
    return tokens


class _LtlParser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, tok):
        got, at = self.take() if self.pos < len(self.tokens) else (None, -1)
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}", 1, at + 1)

    def parse(self) -> Formula:
        f = self.iff()
        if self.pos != len(self.tokens):
            tok, at = self.tokens[self.pos]
            raise ParseError(f"unexpected trailing {tok!r}", 1, at + 1)
        return f

    def iff(self):
        left = self.impl()
        if self.peek() == "<->":
            self.take()
            return Iff(left, self.iff())
        return left

    def impl(self):
        left = self.or_()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.impl())
        return left

    def or_(self):
        items = [self.and_()]
        while self.peek() == "||":
            self.take()
            items.append(self.and_())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def and_(self):
        items = [self.until()]
        while self.peek() == "&&":
            self.take()
            items.append(self.until())
        return items[0] if len(items) == 1 else And(tuple(items))

    def until(self):
        left = self.unary()
        op = self.peek()
        if op in ("U", "W", "R", "M"):
            self.take()
            right = self.until()
            cls = {"U": Until, "W": WeakUntil, "R": Release, "M": StrongRelease}[op]
            return cls(left, right)
        return left

    def unary(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of formula", 1,
                             self.tokens[-1][1] + 1 if self.tokens else 1)
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok in ("X", "F", "G"):
            self.take()
            cls = {"X": Next, "F": Finally_, "G": Globally}[tok]
            return cls(self.unary())
        if tok == "(":
            self.take()
            f = self.iff()
            self.expect(")")
            return f
        if tok == "true":
            self.take()
            return TRUE
        if tok == "false":
            self.take()
            return FALSE
        word, at = self.take()
        if word in _KEYWORDS or word in ("&&", "||", "->", "<->", ")"):
            raise ParseError(f"unexpected {word!r}", 1, at + 1)
        return Atom(word)


def parse_ltl(source: str) -> Formula:
    """Parse a formula.

    Precedence, tightest first: ``!``/``X``/``F``/``G``, then ``U``/``W``/
    ``R``/``M`` (right-associative), then ``&&``, ``||``, ``->`` (right-
    associative), ``<->``.  Unicode aliases for the common operators are
    accepted on input.
    """
    tokens = _tokenize(source)
    if not tokens:
        raise ParseError("empty formula", 1, 1)
    return _LtlParser(tokens).parse()


# ---------------------------------------------------------------------------
# negation normal form and the safety fragment

def nnf(f: Formula, negated: bool = False) -> Formula:
    """Push negations to the atoms; result uses only literals and
    And/Or/X/U/W/R/M/F/G with canonicalized boolean connectives."""
    if isinstance(f, TrueF):
        return FALSE if negated else TRUE
    if isinstance(f, FalseF):
        return TRUE if negated else FALSE
    if isinstance(f, Atom):
        return Not(f) if negated else f
    if isinstance(f, Not):
        return nnf(f.arg, not negated)
    if isinstance(f, And):
        parts = [nnf(a, negated) for a in f.args]
        return disj(parts) if negated else conj(parts)
    if isinstance(f, Or):
        parts = [nnf(a, negated) for a in f.args]
        return conj(parts) if negated else disj(parts)
    if isinstance(f, Implies):
        return nnf(Or((Not(f.left), f.right)), negated)
    if isinstance(f, Iff):
        both = And((Implies(f.left, f.right), Implies(f.right, f.left)))
        return nnf(both, negated)
    if isinstance(f, Next):
        return Next(nnf(f.arg, negated))
    if isinstance(f, Finally_):
        inner = nnf(f.arg, negated)
        return Globally(inner) if negated else Finally_(inner)
    if isinstance(f, Globally):
        inner = nnf(f.arg, negated)
        return Finally_(inner) if negated else Globally(inner)
    left, right = nnf(f.left, negated), nnf(f.right, negated)
    if isinstance(f, Until):
        return Release(left, right) if negated else Until(left, right)
    if isinstance(f, Release):
        return Until(left, right) if negated else Release(left, right)
    if isinstance(f, WeakUntil):
        return StrongRelease(left, right) if negated else WeakUntil(left, right)
    if isinstance(f, StrongRelease):
        return WeakUntil(left, right) if negated else StrongRelease(left, right)
    raise TypeError(f"unknown formula node {f!r}")


def is_safety(f: Formula) -> bool:
    """Syntactic safety: the NNF avoids every strong eventuality (U, F, M)."""
    return not any(isinstance(g, (Until, Finally_, StrongRelease))
                   for g in subformulas(nnf(f)))


# ---------------------------------------------------------------------------
# progression

def matches(action: str, atom: str, agents: tuple[str, ...]) -> bool:
    """Event semantics: prefixed atoms match exactly, unprefixed atoms also
    match under any declared agent prefix; the completion action never
    matches anything."""
    if action == END_ACTION:
        return False
    if action == atom:
        return True
    if "." not in atom:
        head, dot, tail = action.partition(".")
        return dot == "." and tail == atom and head in agents
    return False


def progress(f: Formula, action: str, agents: tuple[str, ...]) -> Formula:
    """Obligation on the remaining trace after observing one action.

    Only defined on the safety fragment in NNF.
    """
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, Atom):
        return TRUE if matches(action, f.name, agents) else FALSE
    if isinstance(f, Not):  # literal in NNF
        return FALSE if matches(action, f.arg.name, agents) else TRUE
    if isinstance(f, And):
        return conj(progress(a, action, agents) for a in f.args)
    if isinstance(f, Or):
        return disj(progress(a, action, agents) for a in f.args)
    if isinstance(f, Next):
        return f.arg
    if isinstance(f, Globally):
        return conj((progress(f.arg, action, agents), f))
    if isinstance(f, WeakUntil):
        hold = conj((progress(f.left, action, agents), f))
        return disj((progress(f.right, action, agents), hold))
    if isinstance(f, Release):
        release = disj((progress(f.left, action, agents), f))
        return conj((progress(f.right, action, agents), release))
    raise ValueError(f"progression undefined outside the safety fragment: {f}")


@dataclass(frozen=True)
class Verdict:
    """Outcome of one check; a bad prefix is attached iff it failed."""

    satisfied: bool
    counterexample: tuple[str, ...] | None = None


class Monitor:
    """Lazily built deterministic automaton of progressed formulas.

    Formula states are interned to integers so that checking many models
    against the same requirement reuses every progression already computed.
    """

    def __init__(self, formula: Formula, agents: tuple[str, ...] = ("u", "mu")):
        start = nnf(formula)
        bad = [g for g in subformulas(start)
               if isinstance(g, (Until, Finally_, StrongRelease))]
        if bad:
            raise ValueError(f"not a safety formula (NNF contains {fmt(bad[0])})")
        self.agents = tuple(agents)
        self.atoms = sorted(atoms_of(start))
        self.closure_size = len(subformulas(start))
        self._formulas: list[Formula] = []
        self._ids: dict[Formula, int] = {}
        self._steps: dict[tuple[int, str], int] = {}
        self.false_id = self._intern(FALSE)
        self.true_id = self._intern(TRUE)
        self.start_id = self._intern(to_dnf(start))

    def _intern(self, f: Formula) -> int:
        fid = self._ids.get(f)
        if fid is None:
            fid = len(self._formulas)
            self._ids[f] = fid
            self._formulas.append(f)
        return fid

    def formula(self, fid: int) -> Formula:
        return self._formulas[fid]

    @property
    def n_formula_states(self) -> int:
        return len(self._formulas)

    def step(self, fid: int, action: str) -> int:
        key = (fid, action)
        nxt = self._steps.get(key)
        if nxt is None:
            raw = progress(self._formulas[fid], action, self.agents)
            nxt = self._intern(to_dnf(raw))
            self._steps[key] = nxt
        return nxt

    def replay(self, actions) -> Formula:
        """Progress the start obligation through a finite action sequence."""
        fid = self.start_id
        for a in actions:
            fid = self.step(fid, a)
        return self._formulas[fid]


def check(model: Lts, f: Formula | Monitor,
          agents: tuple[str, ...] = ("u", "mu")) -> Verdict:
    """Breadth-first search for a reachable false obligation.

    Satisfied iff no path of the model progresses the formula to false.
    On failure the counterexample is a minimum-length bad prefix, ties
    broken by ascending action name at each step.  Atoms that can match no
    action of the model are allowed but reported with a warning.
    """
    monitor = f if isinstance(f, Monitor) else Monitor(f, agents)
    alphabet = model.actions
    for atom in monitor.atoms:
        if not any(matches(a, atom, monitor.agents) for a in alphabet):
            warnings.warn(f"atom {atom!r} matches no action of {model.name!r}",
                          stacklevel=2)

    adj = model.adjacency()
    start = (model.initial, monitor.start_id)
    if monitor.start_id == monitor.false_id:
        return Verdict(False, ())
    seen = {start}
    parent: dict[tuple[int, int], tuple[tuple[int, int], str]] = {}
    queue = deque([start])
    # sanity bound on distinct obligations; canonical progression keeps the
    # reachable set tiny, and blowing past this means a normalization bug
    formula_cap = 2 ** (2 ** min(monitor.closure_size, 5)) + monitor.closure_size
    while queue:
        pair = queue.popleft()
        state, fid = pair
        for action, target in adj[state]:
            nfid = monitor.step(fid, action)
            if nfid == monitor.false_id:
                prefix = [action]
                cur = pair
                while cur in parent:
                    cur, act = parent[cur]
                    prefix.append(act)
                return Verdict(False, tuple(reversed(prefix)))
            nxt = (target, nfid)
            if nxt not in seen:
                seen.add(nxt)
                parent[nxt] = (pair, action)
                queue.append(nxt)
        if monitor.n_formula_states > formula_cap:
            raise RuntimeError("progression state space exceeded its closure bound")
    return Verdict(True, None)


def check_requirement(rev: Mlts, r: "Requirement",
                      occ: OccupancyAutomaton | None = None) -> Verdict:
    """Check one requirement against one revision.

    Security requirements run against the weakened machine (chain composed
    with the occupancy automaton); functional requirements run against the
    bare chain, where unprefixed atoms match the raw actions.
    """
    if occ is None:
        occ = default_occupancy(rev.agents)
    chain = to_lts(rev)
    if r.kind == "security":
        model = complete_deadlocks(weaken(chain, occ))
    else:
        model = complete_deadlocks(chain)
    return check(model, r.formula, agents=rev.agents)


class RevisionChecker:
    """Checks a stream of revisions against a fixed requirement set.

    Monitors are shared across revisions, so each distinct (obligation,
    action) progression is computed once for the whole run.
    """

    def __init__(self, reqs, occ: OccupancyAutomaton | None,
                 agents: tuple[str, str] = ("u", "mu")):
        self.reqs = list(reqs)
        self.agents = agents
        self.occ = occ if occ is not None else default_occupancy(agents)
        self.monitors = {r.id: Monitor(r.formula, agents) for r in self.reqs}

    def check_revision(self, rev: Mlts) -> dict[str, bool]:
        chain = to_lts(rev)
        functional_model = None
        security_model = None
        out = {}
        for r in self.reqs:
            if r.kind == "security":
                if security_model is None:
                    security_model = complete_deadlocks(weaken(chain, self.occ))
                model = security_model
            else:
                if functional_model is None:
                    functional_model = complete_deadlocks(chain)
                model = functional_model
            out[r.id] = check(model, self.monitors[r.id]).satisfied
        return out

    def check_one(self, rev: Mlts, req_id: str) -> bool:
        r = next(r for r in self.reqs if r.id == req_id)
        chain = to_lts(rev)
        if r.kind == "security":
            model = complete_deadlocks(weaken(chain, self.occ))
        else:
            model = complete_deadlocks(chain)
        return check(model, self.monitors[req_id]).satisfied
