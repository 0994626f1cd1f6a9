"""Accelerated checking: shuffle, check a slice, learn, predict, verify.

The coverage (all permutations, or the non-redundant abstraction coverage)
is shuffled with a seeded generator; the first tau fraction is labeled by
model checking; one classifier per requirement is trained on those labels
and predicts the remainder; optionally every all-positive prediction is
confirmed by model checking, which makes the learned step a pruning
heuristic instead of an oracle.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .coverage import oasis_stream
from .lts import Mlts, OccupancyAutomaton, default_occupancy
from .ltl import RevisionChecker
from .ml import FeatureRow, GbtModel, GbtParams, predict_proba_batch, train_gbt
from .recompose import Permutation, apply_permutation, perm_to_string, permutation_stream
from .rng import SplitMix64

log = logging.getLogger(__name__)

CHECKED_TRUE = "checked-true"
CHECKED_FALSE = "checked-false"
PREDICTED_TRUE = "predicted-true"
PREDICTED_FALSE = "predicted-false"
VERIFIED_TRUE = "verified-true"
VERIFIED_FALSE = "verified-false"
TRUE_TAGS = {CHECKED_TRUE, VERIFIED_TRUE}
PREDICTED_TAGS = {PREDICTED_TRUE, PREDICTED_FALSE}


@dataclass(frozen=True)
class PipelineConfig:
    tau: float = 0.3
    seed: int = 0
    verify: bool = True
    verify_margin: float = 0.1
    coverage: str = "full"  # "full" (n! permutations) or "common" (non-redundant abstraction coverage)
    gbt: GbtParams = GbtParams()
    jobs: int = 1

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ValueError("tau must be in (0, 1]")
        if not 0 <= self.verify_margin <= 0.5:
            raise ValueError("verify_margin must be in [0, 0.5]")
        if self.coverage not in ("full", "common"):
            raise ValueError(f"unknown coverage {self.coverage!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass
class RevisionVerdicts:
    """Per-revision, per-requirement verdict tags with provenance.

    perms is the coverage in enumeration order; shuffled holds indices into
    perms in processing order; tags[i][j] is the verdict of perms[i] on
    req_ids[j]; probs mirrors tags with the predicted probability where one
    exists.
    """

    base: Mlts
    req_ids: tuple[str, ...]
    perms: tuple[Permutation, ...]
    shuffled: tuple[int, ...]
    n_checked: int
    tags: list[list[str]]
    probs: list[list[float | None]]
    config: PipelineConfig
    t_mc: float = 0.0
    t_ml: float = 0.0
    degenerate_reqs: tuple[str, ...] = ()

    def is_true(self, i: int, j: int, allow_predicted: bool = False) -> bool:
        tag = self.tags[i][j]
        return tag in TRUE_TAGS or (allow_predicted and tag == PREDICTED_TRUE)

    def row_all_positive(self, i: int) -> bool:
        """Positive in every column, counting optimistic predicted entries."""
        return all(t in TRUE_TAGS or t == PREDICTED_TRUE for t in self.tags[i])

    def row_verification_candidate(self, i: int, margin: float) -> bool:
        """Worth confirming by checking: no definite false entry, and every
        predicted probability at least `margin`.

        All predicted-positive rows qualify (their probabilities exceed
        0.5); a positive margin additionally sweeps rows the classifier was
        lukewarm about, which is what rescues borderline misclassified
        revisions without rechecking everything.
        """
        for j, tag in enumerate(self.tags[i]):
            if tag in (CHECKED_FALSE, VERIFIED_FALSE):
                return False
            if tag == PREDICTED_FALSE and not (margin > 0
                                               and self.probs[i][j] >= margin):
                return False
        return any(t in PREDICTED_TAGS for t in self.tags[i])

    def to_csv(self) -> str:
        lines = ["permutation," + ",".join(self.req_ids)]
        for i, perm in enumerate(self.perms):
            lines.append('"' + perm_to_string(perm) + '",' + ",".join(self.tags[i]))
        return "\n".join(lines) + "\n"


def coverage_perms(n_modules: int, coverage: str) -> list[Permutation]:
    """The coverage in enumeration order."""
    if coverage == "full":
        return list(permutation_stream(n_modules, "lex"))
    if not 2 <= n_modules <= 9:
        raise ValueError("common coverage supported for 2..9 modules")
    return [perm for perm, fresh in oasis_stream(n_modules) if fresh]


def _check_chunk(args):
    base, reqs, occ, perms = args
    checker = RevisionChecker(reqs, occ, base.agents)
    return [checker.check_revision(apply_permutation(base, p)) for p in perms]


def _check_many(base: Mlts, reqs, occ, perms: list[Permutation], jobs: int,
                checker: RevisionChecker) -> list[dict[str, bool]]:
    """Check several revisions; with jobs > 1 fan out over processes.

    Results come back in input order either way, so the worker count never
    changes any output.
    """
    if jobs <= 1 or len(perms) < 4 * jobs:
        return [checker.check_revision(apply_permutation(base, p)) for p in perms]
    chunk = math.ceil(len(perms) / (jobs * 4))
    batches = [perms[i:i + chunk] for i in range(0, len(perms), chunk)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = pool.map(_check_chunk, [(base, reqs, occ, b) for b in batches])
    out: list[dict[str, bool]] = []
    for part in parts:
        out.extend(part)
    return out


def run_pipeline(base: Mlts, reqs, occ: OccupancyAutomaton | None = None,
                 cfg: PipelineConfig = PipelineConfig()) -> RevisionVerdicts:
    """Label a shuffled slice by checking, learn it, predict the rest, and
    (by default) confirm every all-positive prediction by checking."""
    reqs = list(reqs)
    if occ is None:
        occ = default_occupancy(base.agents)
    perms = coverage_perms(base.n_modules, cfg.coverage)
    order = list(range(len(perms)))
    SplitMix64(cfg.seed).shuffle(order)
    n_checked = math.ceil(cfg.tau * len(perms))
    req_ids = tuple(r.id for r in reqs)
    checker = RevisionChecker(reqs, occ, base.agents)

    tags = [[PREDICTED_FALSE] * len(reqs) for _ in perms]
    probs: list[list[float | None]] = [[None] * len(reqs) for _ in perms]

    t0 = time.perf_counter()
    slice_idx = order[:n_checked]
    slice_results = _check_many(base, reqs, occ, [perms[i] for i in slice_idx],
                                cfg.jobs, checker)
    for i, result in zip(slice_idx, slice_results):
        tags[i] = [CHECKED_TRUE if result[r.id] else CHECKED_FALSE for r in reqs]
    t_mc = time.perf_counter() - t0

    rest_idx = order[n_checked:]
    degenerate: list[str] = []
    t_ml = 0.0
    if rest_idx:
        X_rest = np.array([[m + 1 for m in perms[i]] for i in rest_idx],
                          dtype=np.int64)
        for j, r in enumerate(reqs):
            rows = [FeatureRow(tuple(m + 1 for m in perms[i]),
                               tags[i][j] == CHECKED_TRUE) for i in slice_idx]
            labels = {row.label for row in rows}
            if len(labels) < 2:
                degenerate.append(r.id)
                log.warning("requirement %s: single-class training slice; "
                            "falling back to exhaustive checking", r.id)
                t0 = time.perf_counter()
                for i in rest_idx:
                    ok = checker.check_one(apply_permutation(base, perms[i]), r.id)
                    tags[i][j] = CHECKED_TRUE if ok else CHECKED_FALSE
                t_mc += time.perf_counter() - t0
                continue
            t0 = time.perf_counter()
            model = train_gbt(rows, cfg.gbt)
            scores = predict_proba_batch(model, X_rest)
            t_ml += time.perf_counter() - t0
            for i, p in zip(rest_idx, scores):
                tags[i][j] = PREDICTED_TRUE if p > 0.5 else PREDICTED_FALSE
                probs[i][j] = float(p)

    verdicts = RevisionVerdicts(
        base=base, req_ids=req_ids, perms=tuple(perms), shuffled=tuple(order),
        n_checked=n_checked, tags=tags, probs=probs, config=cfg,
        t_mc=t_mc, t_ml=t_ml, degenerate_reqs=tuple(degenerate))

    if cfg.verify:
        t0 = time.perf_counter()
        candidates = [i for i in range(len(perms))
                      if verdicts.row_verification_candidate(i, cfg.verify_margin)]
        results = _check_many(base, reqs, occ, [perms[i] for i in candidates],
                              cfg.jobs, checker)
        for i, result in zip(candidates, results):
            for j, r in enumerate(reqs):
                if tags[i][j] in PREDICTED_TAGS:
                    tags[i][j] = VERIFIED_TRUE if result[r.id] else VERIFIED_FALSE
        verdicts.t_mc += time.perf_counter() - t0
    return verdicts


@dataclass(frozen=True)
class EarlySearchResult:
    found: Permutation | None
    elapsed: float
    phase: str  # "checking" or "ml"
    checks: int


def early_exit_search(base: Mlts, reqs, occ: OccupancyAutomaton | None = None,
                      cfg: PipelineConfig = PipelineConfig()) -> EarlySearchResult:
    """Stop at the first satisfier in the checked slice; otherwise rank the
    remainder by joint predicted probability and verify in that order."""
    reqs = list(reqs)
    if occ is None:
        occ = default_occupancy(base.agents)
    perms = coverage_perms(base.n_modules, cfg.coverage)
    order = list(range(len(perms)))
    SplitMix64(cfg.seed).shuffle(order)
    n_checked = math.ceil(cfg.tau * len(perms))
    checker = RevisionChecker(reqs, occ, base.agents)

    t0 = time.perf_counter()
    checks = 0
    labeled: list[tuple[int, dict[str, bool]]] = []
    for i in order[:n_checked]:
        result = checker.check_revision(apply_permutation(base, perms[i]))
        checks += 1
        labeled.append((i, result))
        if all(result.values()):
            return EarlySearchResult(perms[i], time.perf_counter() - t0,
                                     "checking", checks)

    rest = order[n_checked:]
    if not rest:
        return EarlySearchResult(None, time.perf_counter() - t0, "checking", checks)

    X_rest = np.array([[m + 1 for m in perms[i]] for i in rest], dtype=np.int64)
    joint = np.ones(len(rest))
    for r in reqs:
        rows = [FeatureRow(tuple(m + 1 for m in perms[i]), result[r.id])
                for i, result in labeled]
        model = train_gbt(rows, cfg.gbt)
        joint *= predict_proba_batch(model, X_rest)
    # stable rank: probability descending, earlier shuffled position first
    ranked = sorted(range(len(rest)), key=lambda k: (-joint[k], k))
    for k in ranked:
        i = rest[k]
        result = checker.check_revision(apply_permutation(base, perms[i]))
        checks += 1
        if all(result.values()):
            return EarlySearchResult(perms[i], time.perf_counter() - t0, "ml", checks)
    return EarlySearchResult(None, time.perf_counter() - t0, "ml", checks)


def exhaustive_verdicts(base: Mlts, reqs, occ: OccupancyAutomaton | None = None,
                        coverage: str = "full", jobs: int = 1) -> RevisionVerdicts:
    """Plain model checking of the whole coverage (the tau = 1 pipeline)."""
    cfg = PipelineConfig(tau=1.0, seed=0, verify=False, coverage=coverage, jobs=jobs)
    return run_pipeline(base, reqs, occ, cfg)


ALL_TAGS = {CHECKED_TRUE, CHECKED_FALSE, PREDICTED_TRUE, PREDICTED_FALSE,
            VERIFIED_TRUE, VERIFIED_FALSE}


def verdicts_from_csv(text: str, base: Mlts) -> RevisionVerdicts:
    """Rebuild a verdict table from its CSV export.

    Shuffle order and slice size are not part of the export; the loaded
    table answers selection queries only.
    """
    import csv
    import io

    from .recompose import perm_from_string

    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:1] != ["permutation"]:
        raise ValueError("not a verdict table: missing permutation header")
    req_ids = tuple(rows[0][1:])
    perms = []
    tags = []
    for cells in rows[1:]:
        if not cells:
            continue
        perm = perm_from_string(cells[0])
        row = cells[1:]
        if len(row) != len(req_ids):
            raise ValueError(f"row for {cells[0]!r} has {len(row)} verdicts, "
                             f"expected {len(req_ids)}")
        bad = [t for t in row if t not in ALL_TAGS]
        if bad:
            raise ValueError(f"unknown verdict tag {bad[0]!r}")
        if len(perm) != base.n_modules:
            raise ValueError("permutation length does not match the base system")
        perms.append(perm)
        tags.append(row)
    return RevisionVerdicts(
        base=base, req_ids=req_ids, perms=tuple(perms), shuffled=(),
        n_checked=0, tags=tags, probs=[[None] * len(req_ids) for _ in perms],
        config=PipelineConfig())
