"""Labelled transition systems and chain-structured modular specifications.

An interaction specification is modelled as a chain of modules: module i
owns the actions available at state s_i.  Every action carries a direction
(forward, backward, jump to a fixed state, or jump to another module) and
the chain expands into a plain LTS.  Composing that LTS with an occupancy
automaton yields the weakened machine in which a second agent may act
whenever the first one has walked away.
"""

from __future__ import annotations

import re
from collections import Counter, deque
from dataclasses import dataclass, field

ACTION_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
END_ACTION = "_end"  # reserved: completes deadlock states, matched by no atom

FORWARD = "forward"
BACKWARD = "backward"
STATE_TARGETED = "state"
MODULE_TARGETED = "module"


class ParseError(ValueError):
    """Input rejected, with a 1-based source position when known."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


def valid_action_name(name: str) -> bool:
    """Bare identifier, or identifier with a single agent-prefix dot."""
    parts = name.split(".")
    if len(parts) > 2:
        return False
    return all(ACTION_RE.match(p) for p in parts)


@dataclass(frozen=True)
class Lts:
    """Finite labelled transition system over dense integer states 0..n-1."""

    n_states: int
    initial: int
    actions: frozenset[str]
    transitions: tuple[tuple[int, str, int], ...]
    name: str = "lts"

    def __post_init__(self):
        if not 0 <= self.initial < self.n_states:
            raise ValueError(f"initial state {self.initial} outside 0..{self.n_states - 1}")
        for a in self.actions:
            if not valid_action_name(a):
                raise ValueError(f"bad action name {a!r}")
        for (src, act, dst) in self.transitions:
            if not (0 <= src < self.n_states and 0 <= dst < self.n_states):
                raise ValueError(f"transition ({src},{act},{dst}) leaves state range")
            if act not in self.actions:
                raise ValueError(f"transition uses undeclared action {act!r}")

    @property
    def states(self) -> range:
        return range(self.n_states)

    def successors(self, state: int) -> list[tuple[str, int]]:
        """Outgoing (action, target) pairs, sorted for deterministic walks."""
        out = [(a, t) for (s, a, t) in self.transitions if s == state]
        out.sort()
        return out

    def adjacency(self) -> list[list[tuple[str, int]]]:
        adj: list[list[tuple[str, int]]] = [[] for _ in range(self.n_states)]
        for (s, a, t) in self.transitions:
            adj[s].append((a, t))
        for lst in adj:
            lst.sort()
        return adj


@dataclass(frozen=True)
class DirectedAction:
    """An action plus how it moves the chain.

    kind is one of FORWARD / BACKWARD / STATE_TARGETED / MODULE_TARGETED;
    target holds the state index (state-targeted) or the forward-action
    name of the destination module (module-targeted), else None.
    """

    name: str
    kind: str
    target: int | str | None = None

    def __post_init__(self):
        if not valid_action_name(self.name) or "." in self.name:
            raise ValueError(f"bad module action name {self.name!r}")
        if self.name == END_ACTION:
            raise ValueError(f"{END_ACTION!r} is reserved")
        if self.kind in (FORWARD, BACKWARD):
            if self.target is not None:
                raise ValueError(f"{self.kind} action takes no target")
        elif self.kind == STATE_TARGETED:
            if not isinstance(self.target, int) or self.target < 0:
                raise ValueError("state-targeted action needs a non-negative state index")
        elif self.kind == MODULE_TARGETED:
            if not isinstance(self.target, str):
                raise ValueError("module-targeted action needs a forward-action name")
        else:
            raise ValueError(f"unknown direction {self.kind!r}")


@dataclass(frozen=True)
class Module:
    """The set of directed actions offered at one chain position."""

    id: str
    actions: tuple[DirectedAction, ...]

    def __post_init__(self):
        names = [a.name for a in self.actions]
        if len(set(names)) != len(names):
            raise ValueError(f"module {self.id}: duplicate action names")
        if sum(1 for a in self.actions if a.kind == FORWARD) != 1:
            raise ValueError(f"module {self.id}: needs exactly one forward action")

    @property
    def forward(self) -> DirectedAction:
        return next(a for a in self.actions if a.kind == FORWARD)

    def key(self) -> frozenset[DirectedAction]:
        """Identity used for consistency checks: the action set, id ignored."""
        return frozenset(self.actions)


@dataclass(frozen=True)
class Mlts:
    """Chain-ordered module list; module i sits at state s_i."""

    name: str
    modules: tuple[Module, ...]
    agents: tuple[str, str] = ("u", "mu")

    def __post_init__(self):
        if not self.modules:
            raise ValueError("need at least one module")
        forwards = [m.forward.name for m in self.modules]
        dupes = [n for n, c in Counter(forwards).items() if c > 1]
        if dupes:
            raise ValueError(f"forward action names must be unique across modules: {dupes}")
        n = len(self.modules)
        for m in self.modules:
            for a in m.actions:
                if a.kind == STATE_TARGETED and a.target > n:
                    raise ValueError(
                        f"module {m.id}: state target {a.target} exceeds chain length {n}")
                if a.kind == MODULE_TARGETED and a.target not in forwards:
                    raise ValueError(
                        f"module {m.id}: action {a.name} targets unknown module {a.target!r}")
        if len(set(self.agents)) != 2 or not all(ACTION_RE.match(g) for g in self.agents):
            raise ValueError("agents must be two distinct identifiers")

    @property
    def n_modules(self) -> int:
        return len(self.modules)

    def module_key_multiset(self) -> Counter:
        return Counter(m.key() for m in self.modules)


@dataclass(frozen=True)
class OccupancyAutomaton:
    """Who is at the machine.  States tagged with the agent allowed to act.

    tags[w] is an agent name or None; enter/exit moves are the automaton's
    own transitions and interleave freely with machine steps.
    """

    lts: Lts
    tags: tuple[str | None, ...]

    def __post_init__(self):
        if len(self.tags) != self.lts.n_states:
            raise ValueError("one tag per occupancy state required")
        agents = {g for g in self.tags if g is not None}
        for a in self.lts.actions:
            parts = a.split(".")
            if len(parts) != 2 or parts[1] not in ("enter", "exit"):
                raise ValueError(f"occupancy action {a!r} is not <agent>.enter/<agent>.exit")
            agents.add(parts[0])
        for g in agents:
            if not ACTION_RE.match(g):
                raise ValueError(f"bad agent name {g!r}")


def default_occupancy(agents: tuple[str, str] = ("u", "mu")) -> OccupancyAutomaton:
    """Three states: first agent present, nobody present, second agent present."""
    u, mu = agents
    lts = Lts(
        n_states=3,
        initial=0,
        actions=frozenset({f"{u}.enter", f"{u}.exit", f"{mu}.enter", f"{mu}.exit"}),
        transitions=(
            (0, f"{u}.exit", 1),
            (1, f"{u}.enter", 0),
            (1, f"{mu}.enter", 2),
            (2, f"{mu}.exit", 1),
        ),
        name="occupancy",
    )
    return OccupancyAutomaton(lts=lts, tags=(u, None, mu))


# ---------------------------------------------------------------------------
# chain expansion and composition

def to_lts(m: Mlts) -> Lts:
    """Expand a module chain into its LTS over states s_0..s_N.

    Module i contributes transitions from s_i: forward to s_{i+1}, backward
    to s_{i-1} (a self-loop when i = 0), state-targeted to the fixed index,
    module-targeted to wherever the named module currently sits.  The
    terminal state s_N has no outgoing transitions.
    """
    n = m.n_modules
    position_of_forward = {mod.forward.name: i for i, mod in enumerate(m.modules)}
    transitions = []
    for i, mod in enumerate(m.modules):
        for a in mod.actions:
            if a.kind == FORWARD:
                dst = i + 1
            elif a.kind == BACKWARD:
                dst = i - 1 if i >= 1 else 0
            elif a.kind == STATE_TARGETED:
                dst = a.target
            else:
                dst = position_of_forward[a.target]
            transitions.append((i, a.name, dst))
    actions = frozenset(t[1] for t in transitions)
    return Lts(n_states=n + 1, initial=0, actions=actions,
               transitions=tuple(sorted(transitions)), name=m.name)


def complete_deadlocks(l: Lts) -> Lts:
    """Give every deadlock state a self-loop on the reserved _end action."""
    has_out = {s for (s, _, _) in l.transitions}
    dead = [s for s in l.states if s not in has_out]
    if not dead:
        return l
    extra = tuple((s, END_ACTION, s) for s in dead)
    return Lts(n_states=l.n_states, initial=l.initial,
               actions=l.actions | {END_ACTION},
               transitions=tuple(sorted(l.transitions + extra)), name=l.name)


def _renumber(initial, edges_of) -> Lts:
    """BFS renumbering from `initial`; neighbour order: action, then target.

    `edges_of(state) -> sorted list of (action, target)` over arbitrary
    hashable state objects; the result uses dense integers in BFS order.
    """
    index = {initial: 0}
    order = [initial]
    queue = deque([initial])
    edges = {}
    while queue:
        s = queue.popleft()
        out = edges_of(s)
        edges[s] = out
        for (_, t) in out:
            if t not in index:
                index[t] = len(order)
                order.append(t)
                queue.append(t)
    transitions = tuple(sorted(
        (index[s], a, index[t]) for s in order for (a, t) in edges[s]))
    actions = frozenset(a for (_, a, _) in transitions)
    return Lts(n_states=len(order), initial=0, actions=actions,
               transitions=transitions)


def reachable(l: Lts) -> Lts:
    """Restrict to states reachable from the initial one, BFS-renumbered."""
    adj = l.adjacency()
    out = _renumber(l.initial, lambda s: adj[s])
    # keep the declared alphabet and name; only states/transitions shrink
    return Lts(n_states=out.n_states, initial=0, actions=l.actions,
               transitions=out.transitions, name=l.name)


def weaken(machine: Lts, occ: OccupancyAutomaton) -> Lts:
    """Compose a machine with an occupancy automaton.

    In every occupancy state tagged with agent g, each machine step a is
    available as g.a; enter/exit steps move the occupancy component alone.
    The result is restricted to its reachable part.
    """
    for a in machine.actions:
        if "." in a:
            raise ValueError(f"machine action {a!r} is already agent-prefixed")
    madj = machine.adjacency()
    oadj = occ.lts.adjacency()
    tags = occ.tags

    def edges_of(pair):
        p, w = pair
        out = []
        g = tags[w]
        if g is not None:
            out.extend((f"{g}.{a}", (q, w)) for (a, q) in madj[p])
        out.extend((e, (p, w2)) for (e, w2) in oadj[w])
        out.sort()
        return out

    product = _renumber((machine.initial, occ.lts.initial), edges_of)
    agents = sorted({g for g in tags if g is not None})
    alphabet = frozenset(f"{g}.{a}" for g in agents for a in machine.actions) | occ.lts.actions
    return Lts(n_states=product.n_states, initial=0, actions=alphabet,
               transitions=product.transitions,
               name=f"{machine.name}_weakened")


def module_consistent(a: Mlts, b: Mlts) -> bool:
    """True iff the two chains offer the same multiset of modules."""
    return a.module_key_multiset() == b.module_key_multiset()


# ---------------------------------------------------------------------------
# the chain-specification text format

def parse_mlts(source: str) -> Mlts:
    """Parse the line-oriented module-chain format.

    ::

        system <Name>
        agents <name> <name>        # optional, defaults to u mu
        module <id>:
          forward <action>
          backward <action>
          state <action> -> <index>
          module <action> -> <forward-action-name>

    '#' starts a comment.  Module bodies are indented; a line at column 0
    starts the next module.
    """
    name = None
    agents = ("u", "mu")
    saw_agents = False
    modules: list[tuple[str, int, list]] = []  # (id, line_no, raw actions)

    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indented = line[0] in " \t"
        tokens = line.split()

        if name is None:
            if indented or tokens[0] != "system" or len(tokens) != 2:
                raise ParseError("expected 'system <Name>'", lineno, 1)
            if not ACTION_RE.match(tokens[1]):
                raise ParseError(f"bad system name {tokens[1]!r}", lineno, len("system ") + 1)
            name = tokens[1]
            continue

        if not indented:
            if tokens[0] == "agents":
                if saw_agents or modules:
                    raise ParseError("'agents' must appear once, before any module", lineno, 1)
                if len(tokens) != 3:
                    raise ParseError("expected 'agents <name> <name>'", lineno, 1)
                agents = (tokens[1], tokens[2])
                saw_agents = True
                continue
            if tokens[0] == "module" and line.endswith(":") and len(tokens) == 2:
                mid = tokens[1][:-1]
                if not ACTION_RE.match(mid):
                    raise ParseError(f"bad module id {mid!r}", lineno, len("module ") + 1)
                modules.append((mid, lineno, []))
                continue
            raise ParseError(f"expected 'module <id>:', got {line.strip()!r}", lineno, 1)

        if not modules:
            raise ParseError("action line outside of any module", lineno, 1)
        col = len(line) - len(line.lstrip()) + 1
        kind, rest = tokens[0], tokens[1:]
        if kind in (FORWARD, BACKWARD):
            if len(rest) != 1:
                raise ParseError(f"expected '{kind} <action>'", lineno, col)
            action = DirectedAction(_checked_name(rest[0], lineno, col), kind)
        elif kind == STATE_TARGETED:
            if len(rest) != 3 or rest[1] != "->" or not rest[2].isdigit():
                raise ParseError("expected 'state <action> -> <index>'", lineno, col)
            action = DirectedAction(_checked_name(rest[0], lineno, col),
                                    STATE_TARGETED, int(rest[2]))
        elif kind == MODULE_TARGETED:
            if len(rest) != 3 or rest[1] != "->":
                raise ParseError("expected 'module <action> -> <forward-action>'", lineno, col)
            action = DirectedAction(_checked_name(rest[0], lineno, col),
                                    MODULE_TARGETED, rest[2])
        else:
            raise ParseError(f"unknown direction {kind!r}", lineno, col)
        modules[-1][2].append((action, lineno, col))

    if name is None:
        raise ParseError("empty input: missing 'system' line", 1, 1)
    if not modules:
        raise ParseError("no modules declared", 1, 1)

    built = []
    for mid, mline, actions in modules:
        try:
            built.append(Module(id=mid, actions=tuple(a for (a, _, _) in actions)))
        except ValueError as exc:
            raise ParseError(str(exc), mline, 1) from None
    try:
        return Mlts(name=name, modules=tuple(built), agents=agents)
    except ValueError as exc:
        raise ParseError(str(exc), modules[0][1], 1) from None


def _checked_name(token: str, lineno: int, col: int) -> str:
    if token == END_ACTION:
        raise ParseError(f"{END_ACTION!r} is reserved", lineno, col)
    if not valid_action_name(token) or "." in token:
        raise ParseError(f"bad action name {token!r}", lineno, col)
    return token


def render_mlts(m: Mlts) -> str:
    """Canonical serialization; parse_mlts(render_mlts(m)) == m."""
    lines = [f"system {m.name}", f"agents {m.agents[0]} {m.agents[1]}"]
    for mod in m.modules:
        lines.append(f"module {mod.id}:")
        for a in mod.actions:
            if a.kind in (FORWARD, BACKWARD):
                lines.append(f"  {a.kind} {a.name}")
            else:
                lines.append(f"  {a.kind} {a.name} -> {a.target}")
    return "\n".join(lines) + "\n"


def parse_lts(source: str) -> Lts:
    """Parse the flat LTS format: lts/states/initial header, then trans lines."""
    name = None
    n_states = None
    initial = None
    transitions = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "lts" and len(tokens) == 2 and name is None:
            name = tokens[1]
        elif tokens[0] == "states" and len(tokens) == 2 and tokens[1].isdigit():
            n_states = int(tokens[1])
        elif tokens[0] == "initial" and len(tokens) == 2 and tokens[1].isdigit():
            initial = int(tokens[1])
        elif tokens[0] == "trans" and len(tokens) == 4:
            src, act, dst = tokens[1], tokens[2], tokens[3]
            if not (src.isdigit() and dst.isdigit() and valid_action_name(act)):
                raise ParseError(f"bad transition {line!r}", lineno, 1)
            transitions.append((int(src), act, int(dst)))
        else:
            raise ParseError(f"unrecognized line {line!r}", lineno, 1)
    if name is None or n_states is None or initial is None:
        raise ParseError("missing lts/states/initial header", 1, 1)
    try:
        return Lts(n_states=n_states, initial=initial,
                   actions=frozenset(t[1] for t in transitions),
                   transitions=tuple(sorted(transitions)), name=name)
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1) from None


def render_lts(l: Lts) -> str:
    lines = [f"lts {l.name}", f"states {l.n_states}", f"initial {l.initial}"]
    lines.extend(f"trans {s} {a} {t}" for (s, a, t) in sorted(l.transitions))
    return "\n".join(lines) + "\n"
