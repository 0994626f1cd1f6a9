"""Search-speed experiment: baseline order vs accelerated search, plus the
analytic cost model that predicts their time ratio.

Requirements are drawn from three safety templates over random
agent-prefixed actions and rejection-sampled so that each one is
satisfiable somewhere in the shared (non-redundant abstraction) coverage.
Both searches then race on the same requirement; logical counters
(positions, check counts) are deterministic per seed, wall-clock numbers
are whatever the machine gives.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .coverage import SearchResult, TABLE1_SUMS, coverage_stats, oasis_search
from .lts import Mlts, OccupancyAutomaton, default_occupancy
from .ltl import Globally, Implies, Next, Not, Atom, WeakUntil, RevisionChecker
from .pipeline import EarlySearchResult, PipelineConfig, coverage_perms, \
    early_exit_search
from .recompose import apply_permutation
from .requirements import Requirement
from .rng import SplitMix64

TEMPLATES = ("once-then-never", "blocked-until", "never-next")


def instantiate_template(template: str, a: str, b: str, c: str | None = None):
    """The three safety schemata over distinct agent-prefixed actions."""
    if template == "once-then-never":
        return Globally(Implies(Atom(a), Globally(Not(Atom(b)))))
    if template == "blocked-until":
        return Globally(Implies(Atom(a), WeakUntil(Not(Atom(b)), Atom(c))))
    if template == "never-next":
        return Globally(Implies(Atom(a), Next(Not(Atom(b)))))
    raise ValueError(f"unknown template {template!r}")


@dataclass(frozen=True)
class RequirementGenerator:
    seed: int = 0
    target_count: int = 1000
    templates: tuple[str, ...] = TEMPLATES
    max_attempts_factor: int = 200  # rejection budget per accepted requirement


def generate_requirements(base: Mlts, gen: RequirementGenerator,
                          occ: OccupancyAutomaton | None = None) -> list[Requirement]:
    """Template-instantiated security requirements, each satisfiable by at
    least one revision of the shared coverage; deterministic per seed."""
    if occ is None:
        occ = default_occupancy(base.agents)
    alphabet = sorted(to_alphabet(base))
    if len({a.split(".", 1)[1] for a in alphabet}) < 3:
        raise ValueError("need at least 3 distinct actions to instantiate templates")
    perms = coverage_perms(base.n_modules, "common")
    rng = SplitMix64(gen.seed)
    out: list[Requirement] = []
    attempts = 0
    budget = gen.max_attempts_factor * gen.target_count
    while len(out) < gen.target_count:
        if attempts >= budget:
            raise RuntimeError(
                f"requirement generation exceeded its budget of {budget} attempts "
                f"({len(out)}/{gen.target_count} accepted)")
        attempts += 1
        template = gen.templates[rng.below(len(gen.templates))]
        needed = 3 if template == "blocked-until" else 2
        picked: list[str] = []
        while len(picked) < needed:
            a = alphabet[rng.below(len(alphabet))]
            if a not in picked:
                picked.append(a)
        formula = instantiate_template(template, *picked, *([None] * (3 - needed)))
        req = Requirement(id=f"gen{len(out)}", kind="security", weight=1,
                          formula=formula)
        checker = RevisionChecker([req], occ, base.agents)
        if any(checker.check_revision(apply_permutation(base, p))[req.id]
               for p in perms):
            out.append(req)
    return out


def to_alphabet(base: Mlts) -> set[str]:
    actions = {a.name for m in base.modules for a in m.actions}
    return {f"{g}.{a}" for g in base.agents for a in actions}


# ---------------------------------------------------------------------------
# benchmark runner

@dataclass(frozen=True)
class Trial:
    requirement_id: str
    oasis: SearchResult
    oacal: EarlySearchResult

    @property
    def agree(self) -> bool:
        return (self.oasis.found is None) == (self.oacal.found is None)


@dataclass
class BenchResult:
    n_modules: int
    trials: list[Trial] = field(default_factory=list)

    def summary(self) -> dict:
        oasis_times = [t.oasis.elapsed for t in self.trials]
        oacal_times = [t.oacal.elapsed for t in self.trials]
        mean = lambda xs: sum(xs) / len(xs)
        return {
            "n_modules": self.n_modules,
            "trials": len(self.trials),
            "all_agree": all(t.agree for t in self.trials),
            "oasis_mean_s": mean(oasis_times),
            "oasis_max_s": max(oasis_times),
            "oacal_mean_s": mean(oacal_times),
            "oacal_max_s": max(oacal_times),
            "ratio_mean": mean(oasis_times) / mean(oacal_times),
            "ratio_max": max(oasis_times) / max(oacal_times),
        }

    def to_csv(self, with_times: bool = True) -> str:
        lines = ["requirement,oasis_position,oasis_time_ms,oacal_phase,"
                 "oacal_checks,oacal_time_ms,agree"]
        for t in self.trials:
            oasis_ms = f"{t.oasis.elapsed * 1000:.3f}" if with_times else "0"
            oacal_ms = f"{t.oacal.elapsed * 1000:.3f}" if with_times else "0"
            lines.append(f"{t.requirement_id},{t.oasis.checks_performed},{oasis_ms},"
                         f"{t.oacal.phase},{t.oacal.checks},{oacal_ms},{t.agree}")
        return "\n".join(lines) + "\n"


def run_benchmark(base: Mlts, gen: RequirementGenerator,
                  occ: OccupancyAutomaton | None = None,
                  cfg: PipelineConfig | None = None) -> BenchResult:
    """Race both searches over the shared coverage, one requirement at a
    time, on requirements guaranteed satisfiable inside that coverage."""
    if occ is None:
        occ = default_occupancy(base.agents)
    if cfg is None:
        cfg = PipelineConfig(coverage="common")
    if cfg.coverage != "common":
        raise ValueError("the benchmark races on the shared (common) coverage")
    reqs = generate_requirements(base, gen, occ)
    result = BenchResult(n_modules=base.n_modules)
    for req in reqs:
        oasis = oasis_search(base, [req], occ)
        oacal = early_exit_search(base, [req], occ, cfg)
        result.trials.append(Trial(requirement_id=req.id, oasis=oasis, oacal=oacal))
    return result


# ---------------------------------------------------------------------------
# analytic cost model

@dataclass(frozen=True)
class CostModelParams:
    """Inputs of the time-ratio formulas.

    Iteration counts are absolute positions in the redundant stream
    (already multiplied by coverage size); the machine constant converts
    trees*depth*features*log2(training size) complexity units into
    milliseconds; check times are in milliseconds.
    """

    n_modules: int
    tau: float = 0.3
    trees: int = 100
    depth: int = 6
    machine_constant: float = 1.12e-2
    t_dcs_ms: float = 50.0
    t_mc_ms: float = 50.0
    avg_iterations: float = 0.0
    max_iterations: float = 0.0
    cov_nr: int | None = None  # defaults from the published coverage table

    def resolved_cov_nr(self) -> int:
        if self.cov_nr is not None:
            return self.cov_nr
        if self.n_modules in TABLE1_SUMS:
            return TABLE1_SUMS[self.n_modules][0]
        return coverage_stats(self.n_modules).non_redundant_total


def params_from_replay(n_modules: int, **overrides) -> CostModelParams:
    """Position statistics taken from replaying the coverage stream: the
    average case uses the median first-appearance position, the worst case
    the last one."""
    st = coverage_stats(n_modules)
    merged = dict(n_modules=n_modules, avg_iterations=st.median_first_appearance,
                  max_iterations=float(st.last_first_appearance),
                  cov_nr=st.non_redundant_total)
    merged.update(overrides)
    return CostModelParams(**merged)


def cost_model(p: CostModelParams) -> dict:
    """Evaluate the ratio formulas.

    Baseline time is iterations times the per-synthesis check cost.  The
    accelerated denominator is the expected checked fraction of the slice
    plus the learning term; in the worst case the whole slice is checked
    before learning.  The complexity logarithm is base 2: the printed
    intermediate constants (230.76 / 329.65 at 7 modules) pin that base,
    and natural or base-10 logs miss them by far.
    """
    cov_nr = p.resolved_cov_nr()
    n_train = p.tau * cov_nr
    if n_train <= 0:
        raise ValueError("log argument tau*cov_nr must be positive")
    ml_units = p.machine_constant * p.trees * p.depth * p.n_modules * math.log2(n_train)
    t_oasis_avg = p.avg_iterations * p.t_dcs_ms
    t_oasis_max = p.max_iterations * p.t_dcs_ms
    t_oacal_avg = (p.tau - p.tau ** 2 / 2) * cov_nr * p.t_mc_ms + (1 - p.tau) * ml_units
    t_oacal_max = p.tau * cov_nr * p.t_mc_ms + ml_units
    return {
        "t_oasis_avg_ms": t_oasis_avg,
        "t_oasis_max_ms": t_oasis_max,
        "t_oacal_avg_ms": t_oacal_avg,
        "t_oacal_max_ms": t_oacal_max,
        "ratio_avg": t_oasis_avg / t_oacal_avg,
        "ratio_max": t_oasis_max / t_oacal_max,
        "ml_term_avg_ms": (1 - p.tau) * ml_units,
        "ml_term_max_ms": ml_units,
        "mc_coefficient_avg": (p.tau - p.tau ** 2 / 2) * cov_nr,
        "mc_coefficient_max": p.tau * cov_nr,
    }


def fit_machine_constant(samples) -> float:
    """Least-squares slope through the origin of (complexity units, time)."""
    samples = list(samples)
    if len(samples) < 3:
        raise ValueError("need at least 3 samples")
    sxx = sum(x * x for x, _ in samples)
    if sxx == 0:
        raise ValueError("degenerate samples: all complexity units are zero")
    return sum(x * y for x, y in samples) / sxx


def measure_machine_constant(train_fn, sizes=(500, 1000, 2000, 4000),
                             trees: int = 20, depth: int = 4,
                             n_features: int = 7, repeats: int = 3) -> float:
    """Fit the constant from live training runs; units follow the
    complexity model trees*depth*features*log2(n)."""
    samples = []
    for n in sizes:
        best = min(_timed(train_fn, n, trees, depth, n_features)
                   for _ in range(repeats))
        units = trees * depth * n_features * math.log2(n)
        samples.append((units, best * 1000))
    return fit_machine_constant(samples)


def _timed(train_fn, n, trees, depth, n_features) -> float:
    t0 = time.perf_counter()
    train_fn(n, trees, depth, n_features)
    return time.perf_counter() - t0
