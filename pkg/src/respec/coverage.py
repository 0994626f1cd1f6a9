"""Abstraction-based revision coverage and its redundancy accounting.

The baseline approach reaches a revision by splitting the module chain
into two subsequences and interleaving them order-preservingly.  This
module enumerates that coverage in a pinned order (subset size ascending,
subsets lexicographic, merges left-first), tracks which emissions are
first appearances, aggregates the redundancy table, and runs the
sequential baseline search over the redundant stream.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from itertools import combinations
from statistics import median
from typing import Iterable, Iterator

from .lts import Mlts, OccupancyAutomaton
from .ltl import RevisionChecker
from .recompose import Permutation, apply_permutation

# Published redundancy distribution: {n: {subset_size: (non_redundant, generated)}}.
# Used by the --assert-paper gate and by the cost model's coverage sizes.
TABLE1_PUBLISHED = {
    4: {1: (10, 16), 2: (4, 18)},
    5: {1: (17, 25), 2: (25, 100)},
    6: {1: (26, 36), 2: (79, 225), 3: (27, 200)},
    7: {1: (37, 49), 2: (188, 441), 3: (204, 1225)},
    8: {1: (50, 64), 2: (380, 784), 3: (766, 3136), 4: (234, 2450)},
    9: {1: (65, 81), 2: (689, 1296), 3: (2158, 7056), 4: (1950, 15876)},
}
TABLE1_SUMS = {n: (sum(v[0] for v in row.values()), sum(v[1] for v in row.values()))
               for n, row in TABLE1_PUBLISHED.items()}


def interleavings(left, right) -> Iterator[Permutation]:
    """All order-preserving merges of two disjoint ascending sequences.

    Lexicographic merge order: at every step, continuing with the left
    sequence precedes continuing with the right one.
    """
    left, right = tuple(left), tuple(right)
    n = len(left) + len(right)
    if sorted(left + right) != list(range(n)):
        raise ValueError("left and right must partition 0..n-1")
    if list(left) != sorted(left) or list(right) != sorted(right):
        raise ValueError("left and right must each be in ascending order")

    def merge(i: int, j: int, acc: list[int]) -> Iterator[Permutation]:
        if i == len(left) and j == len(right):
            yield tuple(acc)
            return
        if i < len(left):
            acc.append(left[i])
            yield from merge(i + 1, j, acc)
            acc.pop()
        if j < len(right):
            acc.append(right[j])
            yield from merge(i, j + 1, acc)
            acc.pop()

    return merge(0, 0, [])


def subset_stream(n: int) -> Iterator[tuple[int, ...]]:
    """Abstraction subsets in visit order: size 1..n//2, lexicographic.

    Splitting on L or on its complement yields the same merges, so only
    half the sizes are visited; at the symmetric middle size (even n) only
    subsets containing module 0 appear, which halves that block too.
    """
    if n < 2:
        return
    for size in range(1, n // 2 + 1):
        if n % 2 == 0 and size == n // 2:
            for rest in combinations(range(1, n), size - 1):
                yield (0,) + rest
        else:
            yield from combinations(range(n), size)


def oasis_stream(n: int) -> Iterator[tuple[Permutation, bool]]:
    """The full redundant emission stream with first-appearance flags."""
    if n < 1:
        raise ValueError("need at least one module")
    if n == 1:
        yield (0,), True
        return
    seen: set[Permutation] = set()
    for subset in subset_stream(n):
        complement = tuple(i for i in range(n) if i not in subset)
        for perm in interleavings(subset, complement):
            fresh = perm not in seen
            if fresh:
                seen.add(perm)
            yield perm, fresh


@dataclass(frozen=True)
class CoverageStats:
    """Redundancy accounting for one module count."""

    n_modules: int
    cells: tuple[tuple[int, int, int], ...]  # (subset_size, generated, non_redundant)
    generated_total: int
    non_redundant_total: int
    median_first_appearance: float  # 1-based position in the redundant stream
    last_first_appearance: int
    ols_slope: float
    ols_intercept: float
    bin_width: int


def _ols(xs, ys) -> tuple[float, float]:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        return 0.0, my
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    return slope, my - slope * mx


def coverage_stats(n: int, bin_width: int | None = None) -> CoverageStats:
    """Replay the emission stream for one module count and aggregate it."""
    per_size: dict[int, list[int]] = {}
    positions: list[int] = []
    pos = 0
    seen: set[Permutation] = set()
    if n == 1:
        per_size[0] = [1, 1]
        positions = [1]
    else:
        for subset in subset_stream(n):
            complement = tuple(i for i in range(n) if i not in subset)
            size = len(subset)
            cell = per_size.setdefault(size, [0, 0])
            for perm in interleavings(subset, complement):
                pos += 1
                cell[0] += 1
                if perm not in seen:
                    seen.add(perm)
                    cell[1] += 1
                    positions.append(pos)
    generated_total = sum(c[0] for c in per_size.values())
    non_redundant_total = sum(c[1] for c in per_size.values())
    width = bin_width if bin_width is not None else max(1, generated_total // 100)
    counts: dict[int, int] = {}
    for p in positions:
        counts[(p - 1) // width] = counts.get((p - 1) // width, 0) + 1
    n_bins = (generated_total + width - 1) // width
    xs = list(range(n_bins))
    ys = [counts.get(b, 0) for b in xs]
    slope, intercept = _ols(xs, ys) if len(xs) >= 2 else (0.0, float(ys[0]))
    return CoverageStats(
        n_modules=n,
        cells=tuple((s, c[0], c[1]) for s, c in sorted(per_size.items())),
        generated_total=generated_total,
        non_redundant_total=non_redundant_total,
        median_first_appearance=float(median(positions)),
        last_first_appearance=positions[-1],
        ols_slope=slope,
        ols_intercept=intercept,
        bin_width=width,
    )


def table1(n_range: Iterable[int], bin_width: int | None = None) -> list[CoverageStats]:
    return [coverage_stats(n, bin_width) for n in n_range]


def table_to_csv(stats: list[CoverageStats]) -> str:
    lines = ["n_modules,subset_size,generated,non_redundant"]
    for st in stats:
        for (size, gen, fresh) in st.cells:
            lines.append(f"{st.n_modules},{size},{gen},{fresh}")
        lines.append(f"{st.n_modules},sum,{st.generated_total},{st.non_redundant_total}")
    return "\n".join(lines) + "\n"


def stats_to_json(stats: list[CoverageStats]) -> dict:
    return {
        str(st.n_modules): {
            "median_first_appearance": st.median_first_appearance,
            "last_first_appearance": st.last_first_appearance,
            "ols_slope": st.ols_slope,
            "ols_intercept": st.ols_intercept,
            "bin_width": st.bin_width,
        }
        for st in stats
    }


def check_against_published(stats: list[CoverageStats]) -> list[str]:
    """Cell-by-cell comparison with the published table; [] means a match."""
    problems = []
    for st in stats:
        row = TABLE1_PUBLISHED.get(st.n_modules)
        if row is None:
            problems.append(f"n={st.n_modules}: no published row to compare")
            continue
        got = {size: (fresh, gen) for (size, gen, fresh) in st.cells}
        for size, (fresh, gen) in sorted(row.items()):
            if got.get(size) != (fresh, gen):
                problems.append(
                    f"n={st.n_modules} |L|={size}: expected {fresh}/{gen}, "
                    f"got {got.get(size, ('-', '-'))[0]}/{got.get(size, ('-', '-'))[1]}")
        want_sum = TABLE1_SUMS[st.n_modules]
        if (st.non_redundant_total, st.generated_total) != want_sum:
            problems.append(
                f"n={st.n_modules} sum: expected {want_sum[0]}/{want_sum[1]}, "
                f"got {st.non_redundant_total}/{st.generated_total}")
    return problems


@dataclass(frozen=True)
class SearchResult:
    found: Permutation | None
    checks_performed: int
    elapsed: float


def oasis_search(base: Mlts, reqs, occ: OccupancyAutomaton | None = None) -> SearchResult:
    """Scan the redundant emission stream, checking every emission.

    Returns the first permutation whose revision satisfies every
    requirement, with the number of emissions checked (redundant
    re-emissions included, as the baseline would pay for them too).
    """
    checker = RevisionChecker(reqs, occ, base.agents)
    t0 = time.perf_counter()
    checks = 0
    for perm, _fresh in oasis_stream(base.n_modules):
        checks += 1
        verdicts = checker.check_revision(apply_permutation(base, perm))
        if all(verdicts.values()):
            return SearchResult(perm, checks, time.perf_counter() - t0)
    return SearchResult(None, checks, time.perf_counter() - t0)
