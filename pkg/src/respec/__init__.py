"""Toolkit for finding module-consistent revisions of interaction
specifications that stay safe when user obligations weaken."""

__version__ = "0.1.0"

from .lts import (DirectedAction, Lts, Mlts, Module, OccupancyAutomaton,
                  ParseError, complete_deadlocks, default_occupancy,
                  module_consistent, parse_lts, parse_mlts, reachable,
                  render_lts, render_mlts, to_lts, weaken)
from .ltl import (Monitor, Verdict, check, check_requirement, fmt, is_safety,
                  nnf, parse_ltl, progress, RevisionChecker)
from .recompose import (apply_permutation, enumerate_revisions,
                        perm_from_string, perm_to_string, permutation_stream,
                        revision_count)
from .coverage import (CoverageStats, coverage_stats, interleavings,
                       oasis_search, oasis_stream, subset_stream, table1)
from .ml import (FeatureRow, GbtModel, GbtParams, LogRegModel, LogRegParams,
                 Metrics, evaluate, model_from_json, model_to_json, predict,
                 train_gbt, train_logreg)
from .pipeline import (EarlySearchResult, PipelineConfig, RevisionVerdicts,
                       early_exit_search, exhaustive_verdicts, run_pipeline)
from .requirements import Requirement, parse_requirements, render_requirements
from .selection import (DegradationQuery, DegradedRow, OrderLint, degrade,
                        eligible, lint_revision, make_check_fn, parse_lints,
                        report, report_text)
from .bench import (CostModelParams, RequirementGenerator, cost_model,
                    fit_machine_constant, generate_requirements,
                    params_from_replay, run_benchmark)
