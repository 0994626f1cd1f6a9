"""Recomposition: every ordering of a chain's modules is a candidate revision.

A permutation is a tuple of original module indices; position i of the
tuple names the module placed at chain position i.  Reordering never edits
a module, so every revision offers the same module multiset as the base.
"""

from __future__ import annotations

import math
from itertools import permutations as _lex_permutations
from typing import Iterator

from .lts import Mlts
from .rng import SplitMix64

Permutation = tuple[int, ...]

MAX_MODULES = 20           # factorial overflow guard for counting
MAX_SHUFFLE_MODULES = 9    # shuffled order materializes the whole set


def revision_count(n_modules: int) -> int:
    """Number of distinct revisions: n!."""
    if not 1 <= n_modules <= MAX_MODULES:
        raise ValueError(f"module count must be in 1..{MAX_MODULES}")
    return math.factorial(n_modules)


def permutation_stream(n: int, order: str = "lex", seed: int = 0) -> Iterator[Permutation]:
    """Yield all n! permutations of 0..n-1 exactly once.

    ``lex`` streams in ascending lexicographic order starting from the
    identity.  ``shuffled`` materializes that list and applies a seeded
    Fisher-Yates shuffle (SplitMix64), so the order depends only on
    (n, seed) and is stable across platforms.
    """
    if n < 1:
        raise ValueError("need at least one module")
    if order == "lex":
        return iter(_lex_permutations(range(n)))
    if order == "shuffled":
        if n > MAX_SHUFFLE_MODULES:
            raise ValueError(
                f"shuffled order materializes n!; capped at n <= {MAX_SHUFFLE_MODULES}")
        items = list(_lex_permutations(range(n)))
        SplitMix64(seed).shuffle(items)
        return iter(items)
    raise ValueError(f"unknown order {order!r}")


def enumerate_revisions(base: Mlts, order: str = "lex", seed: int = 0) -> Iterator[Permutation]:
    return permutation_stream(base.n_modules, order=order, seed=seed)


def apply_permutation(base: Mlts, perm: Permutation) -> Mlts:
    """Reorder the module list by perm; targets travel untouched.

    State-targeted indices stay positional (index k means state s_k of the
    recomposed chain) and module-targeted actions keep naming a forward
    action, so they follow their module wherever it lands.
    """
    if sorted(perm) != list(range(base.n_modules)):
        raise ValueError(f"not a permutation of 0..{base.n_modules - 1}: {perm}")
    modules = tuple(base.modules[i] for i in perm)
    return Mlts(name=base.name, modules=modules, agents=base.agents)


def compose(p: Permutation, q: Permutation) -> Permutation:
    """Composition such that applying p then q equals applying compose(p, q)."""
    return tuple(p[q[i]] for i in range(len(p)))


def perm_to_string(perm: Permutation) -> str:
    """Serialize as comma-separated 1-based module indices, e.g. '3,1,2'."""
    return ",".join(str(i + 1) for i in perm)


def perm_from_string(text: str) -> Permutation:
    try:
        perm = tuple(int(p) - 1 for p in text.split(","))
    except ValueError:
        raise ValueError(f"bad permutation string {text!r}") from None
    if sorted(perm) != list(range(len(perm))):
        raise ValueError(f"bad permutation string {text!r}")
    return perm
