"""Selecting revisions from a verdict table, with requirement degradation.

Degradation waives low-weight requirements: a revision stays selectable as
long as the weights of the requirements it does satisfy reach a payoff
threshold, every unsatisfied requirement is waivable, and not too many are
waived.  Everything is answered from the cached verdict table; the only
checking ever done here is on-demand confirmation of predicted entries a
selected row relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

from .lts import Lts, Mlts, render_mlts, render_lts, to_lts
from .pipeline import PREDICTED_TAGS, PREDICTED_TRUE, RevisionVerdicts, \
    VERIFIED_FALSE, VERIFIED_TRUE, TRUE_TAGS
from .recompose import Permutation, apply_permutation, perm_to_string
from .requirements import Requirement, total_weight


class PredictedVerdictError(RuntimeError):
    """A selection relied on an unverified prediction; rerun with
    verification, pass a checker for on-demand confirmation, or opt in to
    trusting predictions."""


@dataclass(frozen=True)
class DegradationQuery:
    payoff_threshold: int
    waivable: frozenset[str] | None = None  # None: every requirement is waivable
    max_waived: int | None = None

    def __post_init__(self):
        if self.payoff_threshold < 0:
            raise ValueError("payoff threshold must be non-negative")


def _columns(verdicts: RevisionVerdicts, reqs) -> dict[str, int]:
    cols = {}
    for r in reqs:
        if r.id not in verdicts.req_ids:
            raise ValueError(f"verdict table has no column for requirement {r.id!r}")
        cols[r.id] = verdicts.req_ids.index(r.id)
    return cols


def eligible(verdicts: RevisionVerdicts, reqs,
             allow_predicted: bool = False) -> list[Permutation]:
    """Revisions whose verdicts are true for every requirement, in
    enumeration order.  Rows that qualify only via unverified predictions
    are refused unless allow_predicted is set."""
    cols = _columns(verdicts, reqs)
    out = []
    for i in range(len(verdicts.perms)):
        row = [verdicts.tags[i][cols[r.id]] for r in reqs]
        if all(t in TRUE_TAGS for t in row):
            out.append(verdicts.perms[i])
        elif all(t in TRUE_TAGS or t == PREDICTED_TRUE for t in row):
            if not allow_predicted:
                raise PredictedVerdictError(
                    f"revision {perm_to_string(verdicts.perms[i])} qualifies only "
                    "via unverified predictions")
            out.append(verdicts.perms[i])
    return out


@dataclass(frozen=True)
class DegradedRow:
    permutation: Permutation
    satisfied: tuple[str, ...]
    waived: tuple[str, ...]
    payoff: int


def degrade(verdicts: RevisionVerdicts, reqs, q: DegradationQuery,
            check_fn=None, allow_predicted: bool = False) -> list[DegradedRow]:
    """Every revision whose satisfied-weight sum reaches the threshold.

    Unsatisfied requirements must all be waivable and at most max_waived
    many.  Sorted by payoff descending, then fewest waived, then
    enumeration index.  Rows that qualify via predicted entries get those
    entries confirmed through check_fn(permutation, requirement) when one
    is supplied (upgrading the table in place); otherwise predictions are
    refused unless allow_predicted is set.
    """
    reqs = list(reqs)
    cols = _columns(verdicts, reqs)
    if q.payoff_threshold > total_weight(reqs):
        raise ValueError("payoff threshold exceeds the total requirement weight")
    waivable = q.waivable if q.waivable is not None else frozenset(r.id for r in reqs)
    unknown = waivable - {r.id for r in reqs}
    if unknown:
        raise ValueError(f"waivable names unknown requirements: {sorted(unknown)}")

    out = []
    for i in range(len(verdicts.perms)):
        decided = False
        while not decided:
            satisfied = [r for r in reqs
                         if verdicts.tags[i][cols[r.id]] in TRUE_TAGS
                         or verdicts.tags[i][cols[r.id]] == PREDICTED_TRUE]
            unsatisfied = [r for r in reqs if r not in satisfied]
            payoff = sum(r.weight for r in satisfied)
            qualifies = (payoff >= q.payoff_threshold
                         and all(r.id in waivable for r in unsatisfied)
                         and (q.max_waived is None or len(unsatisfied) <= q.max_waived))
            if not qualifies:
                decided = True
                break
            pending = [r for r in reqs
                       if verdicts.tags[i][cols[r.id]] in PREDICTED_TAGS]
            if not pending:
                out.append(DegradedRow(
                    permutation=verdicts.perms[i],
                    satisfied=tuple(r.id for r in satisfied),
                    waived=tuple(r.id for r in unsatisfied),
                    payoff=payoff))
                decided = True
            elif check_fn is not None:
                for r in pending:
                    ok = check_fn(verdicts.perms[i], r)
                    verdicts.tags[i][cols[r.id]] = VERIFIED_TRUE if ok else VERIFIED_FALSE
                # loop once more with the confirmed entries
            elif allow_predicted:
                out.append(DegradedRow(
                    permutation=verdicts.perms[i],
                    satisfied=tuple(r.id for r in satisfied),
                    waived=tuple(r.id for r in unsatisfied),
                    payoff=payoff))
                decided = True
            else:
                raise PredictedVerdictError(
                    f"revision {perm_to_string(verdicts.perms[i])} relies on "
                    "unverified predictions; supply check_fn or allow_predicted")
    index = {p: i for i, p in enumerate(verdicts.perms)}
    out.sort(key=lambda row: (-row.payoff, len(row.waived), index[row.permutation]))
    return out


def make_check_fn(base: Mlts, occ=None):
    """On-demand verifier for degrade(): checks one requirement on one
    revision of the given base."""
    from .ltl import check_requirement

    def check_fn(perm: Permutation, r: Requirement) -> bool:
        return check_requirement(apply_permutation(base, perm), r, occ).satisfied

    return check_fn


# ---------------------------------------------------------------------------
# reporting

@dataclass(frozen=True)
class OrderLint:
    """Fires when `action` sits after `after` in a revision's chain order.

    Both name forward actions; the lint is data, not built-in judgement.
    """

    name: str
    action: str
    after: str


def parse_lints(source: str) -> list[OrderLint]:
    """One lint per line: ``lint <name>: <action> after <action>``."""
    out = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, sep, body = line.partition(":")
        tokens = head.split()
        parts = body.split()
        if (not sep or len(tokens) != 2 or tokens[0] != "lint"
                or len(parts) != 3 or parts[1] != "after"):
            raise ValueError(
                f"line {lineno}: expected 'lint <name>: <action> after <action>'")
        out.append(OrderLint(name=tokens[1], action=parts[0], after=parts[2]))
    return out


def lint_revision(rev: Mlts, lints) -> list[str]:
    position = {m.forward.name: i for i, m in enumerate(rev.modules)}
    fired = []
    for lint in lints:
        a, b = position.get(lint.action), position.get(lint.after)
        if a is not None and b is not None and a > b:
            fired.append(lint.name)
    return fired


def revision_flags(rev: Mlts) -> list[str]:
    """Structural oddities worth a reviewer's eye."""
    flags = []
    first = rev.modules[0]
    if any(a.kind == "backward" for a in first.actions):
        flags.append("backward-self-loop-at-start")
    return flags


def report(revisions, base: Mlts, lints=(), occ=None) -> dict:
    """Render selected revisions (permutations or degraded rows) as a
    JSON-able document with chains, expansions, lints and flags."""
    rows = []
    for item in revisions:
        if isinstance(item, DegradedRow):
            perm, payoff = item.permutation, item.payoff
            satisfied, waived = list(item.satisfied), list(item.waived)
        else:
            perm, payoff, satisfied, waived = item, None, None, None
        rev = apply_permutation(base, perm)
        rows.append({
            "permutation": perm_to_string(perm),
            "payoff": payoff,
            "satisfied": satisfied,
            "waived": waived,
            "lints": lint_revision(rev, lints),
            "flags": revision_flags(rev),
            "chain": render_mlts(rev),
            "lts": render_lts(to_lts(rev)),
        })
    return {"system": base.name, "n_revisions": len(rows), "revisions": rows}


def report_text(doc: dict) -> str:
    lines = [f"system {doc['system']}: {doc['n_revisions']} selected revision(s)", ""]
    for row in doc["revisions"]:
        lines.append(f"revision {row['permutation']}")
        if row["payoff"] is not None:
            lines.append(f"  payoff {row['payoff']}"
                         f"  satisfied: {', '.join(row['satisfied']) or '-'}"
                         f"  waived: {', '.join(row['waived']) or '-'}")
        if row["lints"]:
            lines.append(f"  lints: {', '.join(row['lints'])}")
        if row["flags"]:
            lines.append(f"  flags: {', '.join(row['flags'])}")
        for chain_line in row["chain"].splitlines():
            lines.append("  | " + chain_line)
        lines.append("")
    return "\n".join(lines)
