"""Weighted requirements and their one-per-line text format."""

from __future__ import annotations

from dataclasses import dataclass

from .lts import ParseError
from .ltl import Formula, fmt, is_safety, parse_ltl

KINDS = ("security", "functional")


@dataclass(frozen=True)
class Requirement:
    """A named, weighted safety property of one of the two kinds."""

    id: str
    kind: str
    weight: int
    formula: Formula

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.weight <= 0:
            raise ValueError("weight must be a positive integer")


def parse_requirements(source: str, require_safety: bool = True) -> list[Requirement]:
    """Parse ``req <id> kind=<security|functional> weight=<int>: <LTL>`` lines."""
    out: list[Requirement] = []
    seen = set()
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, formula_src = line.partition(":")
        tokens = head.split()
        if not sep or len(tokens) != 4 or tokens[0] != "req":
            raise ParseError(
                "expected 'req <id> kind=<security|functional> weight=<int>: <LTL>'",
                lineno, 1)
        rid = tokens[1]
        if rid in seen:
            raise ParseError(f"duplicate requirement id {rid!r}", lineno, 1)
        seen.add(rid)
        if not tokens[2].startswith("kind=") or not tokens[3].startswith("weight="):
            raise ParseError("expected kind=... weight=...", lineno, 1)
        kind = tokens[2][len("kind="):]
        try:
            weight = int(tokens[3][len("weight="):])
        except ValueError:
            raise ParseError("weight must be an integer", lineno, 1) from None
        formula = parse_ltl(formula_src)
        if require_safety and not is_safety(formula):
            raise ParseError(f"non-safety formula for requirement {rid!r}", lineno, 1)
        try:
            out.append(Requirement(id=rid, kind=kind, weight=weight, formula=formula))
        except ValueError as exc:
            raise ParseError(str(exc), lineno, 1) from None
    if not out:
        raise ParseError("no requirements found", 1, 1)
    return out


def render_requirements(reqs) -> str:
    return "".join(
        f"req {r.id} kind={r.kind} weight={r.weight}: {fmt(r.formula)}\n" for r in reqs)


def total_weight(reqs) -> int:
    return sum(r.weight for r in reqs)
