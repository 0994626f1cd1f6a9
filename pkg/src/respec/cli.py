"""Command-line front end.

One executable, one seed flag per run, and a manifest next to every output
so that re-running a recorded configuration reproduces the logical outputs
byte for byte.  Exit codes: 0 success, 1 input error, 2 search found
nothing, 3 published-table mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .bench import RequirementGenerator, run_benchmark
from .coverage import check_against_published, oasis_search, stats_to_json, \
    table1, table_to_csv
from .lts import Mlts, ParseError, default_occupancy, parse_lts, parse_mlts, \
    render_lts, to_lts, weaken
from .ltl import check_requirement
from .manifest import read_manifest, verify_input_digests, write_manifest
from .ml import GbtParams
from .pipeline import PipelineConfig, RevisionVerdicts, early_exit_search, \
    run_pipeline, verdicts_from_csv
from .recompose import enumerate_revisions, perm_to_string
from .requirements import parse_requirements, total_weight
from .selection import DegradationQuery, PredictedVerdictError, degrade, \
    eligible, make_check_fn, parse_lints, report, report_text

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_FOUND = 2
EXIT_MISMATCH = 3

# flag name -> (type, default); the config file may set any of these and
# explicit flags override it
DEFAULTS = {
    "tau": (float, 0.3),
    "seed": (int, 0),
    "trees": (int, 100),
    "depth": (int, 6),
    "eta": (float, 0.1),
    "verify": (bool, True),
    "coverage": (str, "full"),
    "jobs": (int, 1),
    "out": (str, "out"),
    "threshold": (int, None),
    "waivable": (str, None),
    "max_waived": (int, None),
    "no_timing": (bool, False),
    "order": (str, "lex"),
    "limit": (int, None),
    "count": (int, 20),
    "mode": (str, "oacal"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="respec",
        description="Search for module-consistent specification revisions "
                    "that survive weakened user obligations.")
    parser.add_argument("--config", help="key=value file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *names):
        if "out" in names:
            p.add_argument("--out", help="output directory (default: out)")
        if "seed" in names:
            p.add_argument("--seed", type=int, help="run seed (default: 0)")
        if "no_timing" in names:
            p.add_argument("--no-timing", dest="no_timing", action="store_const",
                           const=True, help="zero timing fields in outputs")
        if "jobs" in names:
            p.add_argument("--jobs", type=int, help="worker processes (default: 1)")

    p = sub.add_parser("validate", help="parse inputs and report diagnostics")
    p.add_argument("paths", nargs="+")

    p = sub.add_parser("weaken", help="compose a machine with the occupancy automaton")
    p.add_argument("model")
    common(p, "out", "no_timing")

    p = sub.add_parser("check", help="check requirements against one model")
    p.add_argument("model")
    p.add_argument("reqs")
    common(p, "out", "no_timing")

    p = sub.add_parser("enumerate", help="stream the revision permutations")
    p.add_argument("model")
    p.add_argument("--order", choices=["lex", "shuffled"],
                   help="enumeration order (default: lex)")
    p.add_argument("--limit", type=int, help="stop after this many")
    common(p, "out", "seed", "no_timing")

    p = sub.add_parser("search", help="search the coverage for eligible revisions")
    p.add_argument("model")
    p.add_argument("reqs")
    p.add_argument("--mode", choices=["exhaustive", "oacal", "oasis"],
                   help="search strategy (default: oacal)")
    p.add_argument("--tau", type=float, help="training fraction (default: 0.3)")
    p.add_argument("--trees", type=int, help="boosting rounds (default: 100)")
    p.add_argument("--depth", type=int, help="max tree depth (default: 6)")
    p.add_argument("--eta", type=float, help="learning rate (default: 0.1)")
    p.add_argument("--verify", dest="verify", action="store_const", const=True,
                   help="confirm predicted positives by checking (default)")
    p.add_argument("--no-verify", dest="verify", action="store_const", const=False,
                   help="trust predictions without confirmation")
    p.add_argument("--coverage", choices=["full", "common"],
                   help="revision coverage (default: full)")
    common(p, "out", "seed", "jobs", "no_timing")

    p = sub.add_parser("table1", help="emit the abstraction-coverage redundancy table")
    p.add_argument("--n-range", dest="n_range", default="4..9",
                   help="module counts, e.g. 4..9 (default: 4..9)")
    p.add_argument("--assert-paper", dest="assert_paper", action="store_true",
                   help="fail unless every cell matches the published table")
    common(p, "out", "no_timing")

    p = sub.add_parser("bench", help="race the baseline search against the "
                                     "accelerated one on generated requirements")
    p.add_argument("model")
    p.add_argument("--count", type=int, help="requirements to generate (default: 20)")
    p.add_argument("--tau", type=float, help="training fraction (default: 0.3)")
    common(p, "out", "seed", "no_timing")

    p = sub.add_parser("degrade", help="requirement degradation over cached verdicts")
    p.add_argument("--verdicts", required=True, help="verdict CSV from a search run")
    p.add_argument("--reqs", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=int, help="payoff threshold (required)")
    p.add_argument("--waivable", help="comma-separated waivable ids (default: all)")
    p.add_argument("--max-waived", dest="max_waived", type=int,
                   help="cap on waived requirements")
    p.add_argument("--allow-predicted", dest="allow_predicted", action="store_true",
                   help="accept unverified predictions instead of refusing")
    common(p, "out", "no_timing")

    p = sub.add_parser("report", help="render selected revisions with lints")
    p.add_argument("--verdicts", required=True)
    p.add_argument("--reqs", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--lints", help="lint rule file")
    p.add_argument("--threshold", type=int,
                   help="degrade to this payoff before rendering")
    p.add_argument("--waivable", help="comma-separated waivable ids (default: all)")
    p.add_argument("--max-waived", dest="max_waived", type=int)
    common(p, "out", "no_timing")
    return parser


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in DEFAULTS:
            raise ParseError(f"unknown config key {key!r}", lineno, 1)
        typ, _ = DEFAULTS[key]
        if typ is bool:
            out[key] = value.strip().lower() in ("1", "true", "yes", "on")
        else:
            out[key] = typ(value.strip())
    return out


def _resolve(args, file_cfg: dict) -> dict:
    """Materialize every known option: flag beats config file beats default."""
    resolved = {}
    for key, (_, default) in DEFAULTS.items():
        value = getattr(args, key, None)
        if value is None:
            value = file_cfg.get(key, default)
        resolved[key] = value
    return resolved


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None


def _load_model(path: str) -> Mlts:
    return parse_mlts(_read(path))


def _pipeline_config(cfg: dict, coverage: str | None = None) -> PipelineConfig:
    return PipelineConfig(
        tau=cfg["tau"], seed=cfg["seed"], verify=cfg["verify"],
        coverage=coverage or cfg["coverage"],
        gbt=GbtParams(trees=cfg["trees"], depth=cfg["depth"], eta=cfg["eta"]),
        jobs=cfg["jobs"])


def _write(out_dir: Path, name: str, text: str) -> str:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)
    return name


def cmd_validate(args, cfg) -> int:
    kinds = {"system": "module chain", "lts": "flat transition system",
             "req": "requirement set", "lint": "lint rules"}
    failures = 0
    for path in args.paths:
        try:
            text = _read(path)
            head = ""
            for line in text.splitlines():
                stripped = line.split("#", 1)[0].strip()
                if stripped:
                    head = stripped.split()[0]
                    break
            if head == "system":
                m = parse_mlts(text)
                detail = f"{m.n_modules} modules, agents {m.agents[0]}/{m.agents[1]}"
            elif head == "lts":
                l = parse_lts(text)
                detail = f"{l.n_states} states, {len(l.transitions)} transitions"
            elif head == "req":
                rs = parse_requirements(text)
                detail = f"{len(rs)} requirements, total weight {total_weight(rs)}"
            elif head == "lint":
                detail = f"{len(parse_lints(text))} lint rules"
            else:
                raise ParseError(f"unrecognized file kind (first word {head!r})", 1, 1)
            print(f"{path}: ok ({kinds.get(head, head)}: {detail})")
        except (ParseError, ValueError) as exc:
            print(f"{path}: error: {exc}")
            failures += 1
    return EXIT_INPUT if failures else EXIT_OK


def cmd_weaken(args, cfg) -> int:
    model = _load_model(args.model)
    weakened = weaken(to_lts(model), default_occupancy(model.agents))
    out_dir = Path(cfg["out"])
    outputs = [_write(out_dir, f"{model.name}_weakened.lts", render_lts(weakened))]
    write_manifest(out_dir, sys.argv[1:], cfg, [args.model], outputs,
                   with_times=not cfg["no_timing"])
    print(f"{weakened.n_states} states, {len(weakened.transitions)} transitions "
          f"-> {out_dir / outputs[0]}")
    return EXIT_OK


def cmd_check(args, cfg) -> int:
    model = _load_model(args.model)
    reqs = parse_requirements(_read(args.reqs))
    occ = default_occupancy(model.agents)
    t0 = time.perf_counter()
    results = {}
    for r in reqs:
        verdict = check_requirement(model, r, occ)
        results[r.id] = {
            "kind": r.kind,
            "satisfied": verdict.satisfied,
            "counterexample": list(verdict.counterexample or []) or None,
        }
        status = "satisfied" if verdict.satisfied else \
            "violated: " + " ".join(verdict.counterexample)
        print(f"{r.id}: {status}")
    out_dir = Path(cfg["out"])
    outputs = [_write(out_dir, "checks.json",
                      json.dumps(results, indent=2, sort_keys=True) + "\n")]
    write_manifest(out_dir, sys.argv[1:], cfg, [args.model, args.reqs], outputs,
                   timings={"wall_s": time.perf_counter() - t0},
                   with_times=not cfg["no_timing"])
    return EXIT_OK


def cmd_enumerate(args, cfg) -> int:
    model = _load_model(args.model)
    stream = enumerate_revisions(model, order=cfg["order"], seed=cfg["seed"])
    lines = []
    for i, perm in enumerate(stream):
        if cfg["limit"] is not None and i >= cfg["limit"]:
            break
        lines.append(perm_to_string(perm))
    out_dir = Path(cfg["out"])
    outputs = [_write(out_dir, "permutations.csv", "\n".join(lines) + "\n")]
    write_manifest(out_dir, sys.argv[1:], cfg, [args.model], outputs,
                   with_times=not cfg["no_timing"])
    print(f"{len(lines)} permutations -> {out_dir / outputs[0]}")
    return EXIT_OK


def cmd_search(args, cfg) -> int:
    model = _load_model(args.model)
    reqs = parse_requirements(_read(args.reqs))
    occ = default_occupancy(model.agents)
    out_dir = Path(cfg["out"])
    outputs = []
    t0 = time.perf_counter()

    if cfg["mode"] == "oasis":
        result = oasis_search(model, reqs, occ)
        doc = {
            "mode": "oasis",
            "found": perm_to_string(result.found) if result.found else None,
            "checks_performed": result.checks_performed,
            "elapsed_s": 0.0 if cfg["no_timing"] else result.elapsed,
        }
        outputs.append(_write(out_dir, "search.json",
                              json.dumps(doc, indent=2, sort_keys=True) + "\n"))
        write_manifest(out_dir, sys.argv[1:], cfg, [args.model, args.reqs], outputs,
                       timings={"wall_s": time.perf_counter() - t0},
                       with_times=not cfg["no_timing"])
        if result.found is None:
            print("no eligible revision in the abstraction coverage")
            return EXIT_NOT_FOUND
        print(f"found {perm_to_string(result.found)} after "
              f"{result.checks_performed} checks")
        return EXIT_OK

    pcfg = _pipeline_config(cfg)
    if cfg["mode"] == "exhaustive":
        pcfg = PipelineConfig(tau=1.0, seed=pcfg.seed, verify=False,
                              coverage=pcfg.coverage, gbt=pcfg.gbt, jobs=pcfg.jobs)
    verdicts = run_pipeline(model, reqs, occ, pcfg)
    chosen = eligible(verdicts, reqs)
    outputs.append(_write(out_dir, "verdicts.csv", verdicts.to_csv()))
    if cfg["mode"] == "oacal":
        for j, r in enumerate(reqs):
            rows = ["pos_" + ",pos_".join(str(i + 1) for i in range(model.n_modules))
                    + ",label"]
            for i in verdicts.shuffled[:verdicts.n_checked]:
                perm = verdicts.perms[i]
                label = verdicts.tags[i][j] == "checked-true"
                rows.append(",".join(str(m + 1) for m in perm) + f",{int(label)}")
            outputs.append(_write(out_dir, f"training_{r.id}.csv",
                                  "\n".join(rows) + "\n"))
    doc = {
        "mode": cfg["mode"],
        "eligible": [perm_to_string(p) for p in chosen],
        "n_eligible": len(chosen),
        "coverage_size": len(verdicts.perms),
        "n_checked": verdicts.n_checked,
        "degenerate_requirements": list(verdicts.degenerate_reqs),
    }
    outputs.append(_write(out_dir, "selection.json",
                          json.dumps(doc, indent=2, sort_keys=True) + "\n"))
    write_manifest(out_dir, sys.argv[1:], cfg, [args.model, args.reqs], outputs,
                   timings={"t_mc_s": verdicts.t_mc, "t_ml_s": verdicts.t_ml,
                            "wall_s": time.perf_counter() - t0},
                   with_times=not cfg["no_timing"])
    print(f"{len(chosen)} eligible of {len(verdicts.perms)} revisions "
          f"-> {out_dir / 'selection.json'}")
    return EXIT_OK if chosen else EXIT_NOT_FOUND


def cmd_table1(args, cfg) -> int:
    try:
        lo, _, hi = args.n_range.partition("..")
        n_range = range(int(lo), int(hi or lo) + 1)
    except ValueError:
        print(f"bad --n-range {args.n_range!r}; expected e.g. 4..9", file=sys.stderr)
        return EXIT_INPUT
    stats = table1(n_range)
    out_dir = Path(cfg["out"])
    outputs = [
        _write(out_dir, "table1.csv", table_to_csv(stats)),
        _write(out_dir, "table1_stats.json",
               json.dumps(stats_to_json(stats), indent=2, sort_keys=True) + "\n"),
    ]
    write_manifest(out_dir, sys.argv[1:], cfg, [], outputs,
                   with_times=not cfg["no_timing"])
    for st in stats:
        print(f"n={st.n_modules}: {st.non_redundant_total}/{st.generated_total} "
              f"non-redundant/generated")
    if args.assert_paper:
        problems = check_against_published(
            [st for st in stats if 4 <= st.n_modules <= 9])
        missing = [n for n in n_range if not 4 <= n <= 9]
        if missing:
            print(f"note: no published cells for n in {missing}")
        if problems:
            for p in problems:
                print("mismatch:", p)
            return EXIT_MISMATCH
        print("published table matched exactly")
    return EXIT_OK


def cmd_bench(args, cfg) -> int:
    model = _load_model(args.model)
    occ = default_occupancy(model.agents)
    gen = RequirementGenerator(seed=cfg["seed"], target_count=cfg["count"])
    pcfg = PipelineConfig(tau=cfg["tau"], seed=cfg["seed"], coverage="common",
                          gbt=GbtParams(trees=cfg["trees"], depth=cfg["depth"],
                                        eta=cfg["eta"]))
    result = run_benchmark(model, gen, occ, pcfg)
    out_dir = Path(cfg["out"])
    summary = result.summary()
    if cfg["no_timing"]:
        summary = {k: (0.0 if isinstance(v, float) else v)
                   for k, v in summary.items()}
    outputs = [
        _write(out_dir, "bench_trials.csv",
               result.to_csv(with_times=not cfg["no_timing"])),
        _write(out_dir, "bench_summary.json",
               json.dumps(summary, indent=2, sort_keys=True) + "\n"),
    ]
    write_manifest(out_dir, sys.argv[1:], cfg, [args.model], outputs,
                   with_times=not cfg["no_timing"])
    print(f"{summary['trials']} trials, all_agree={summary['all_agree']}, "
          f"mean ratio {summary['ratio_mean']:.2f}" if not cfg["no_timing"]
          else f"{summary['trials']} trials, all_agree={summary['all_agree']}")
    return EXIT_OK


def _load_verdicts(args, cfg) -> tuple[Mlts, list, RevisionVerdicts]:
    model = _load_model(args.model)
    reqs = parse_requirements(_read(args.reqs))
    verdict_path = Path(args.verdicts)
    manifest_dir = verdict_path.parent
    try:
        manifest = read_manifest(manifest_dir)
    except FileNotFoundError:
        manifest = None
    if manifest is not None:
        stale = verify_input_digests(manifest)
        if stale:
            raise ParseError(
                f"verdict table is stale: inputs changed since the recorded run: "
                f"{', '.join(stale)}")
    verdicts = verdicts_from_csv(_read(args.verdicts), model)
    return model, reqs, verdicts


def cmd_degrade(args, cfg) -> int:
    model, reqs, verdicts = _load_verdicts(args, cfg)
    if cfg["threshold"] is None:
        print("--threshold is required", file=sys.stderr)
        return EXIT_INPUT
    waivable = None
    if cfg["waivable"]:
        waivable = frozenset(cfg["waivable"].split(","))
    query = DegradationQuery(payoff_threshold=cfg["threshold"], waivable=waivable,
                             max_waived=cfg["max_waived"])
    check_fn = make_check_fn(model, default_occupancy(model.agents))
    rows = degrade(verdicts, reqs, query,
                   check_fn=None if args.allow_predicted else check_fn,
                   allow_predicted=args.allow_predicted)
    doc = {
        "threshold": query.payoff_threshold,
        "waivable": sorted(waivable) if waivable is not None else None,
        "max_waived": query.max_waived,
        "total_weight": total_weight(reqs),
        "rows": [{"permutation": perm_to_string(r.permutation),
                  "payoff": r.payoff,
                  "satisfied": list(r.satisfied),
                  "waived": list(r.waived)} for r in rows],
    }
    out_dir = Path(cfg["out"])
    outputs = [_write(out_dir, "degrade.json",
                      json.dumps(doc, indent=2, sort_keys=True) + "\n")]
    write_manifest(out_dir, sys.argv[1:], cfg,
                   [args.model, args.reqs, args.verdicts], outputs,
                   with_times=not cfg["no_timing"])
    print(f"{len(rows)} revisions at payoff >= {query.payoff_threshold} "
          f"-> {out_dir / 'degrade.json'}")
    return EXIT_OK


def cmd_report(args, cfg) -> int:
    model, reqs, verdicts = _load_verdicts(args, cfg)
    lints = parse_lints(_read(args.lints)) if args.lints else []
    check_fn = make_check_fn(model, default_occupancy(model.agents))
    if cfg["threshold"] is not None:
        waivable = frozenset(cfg["waivable"].split(",")) if cfg["waivable"] else None
        query = DegradationQuery(payoff_threshold=cfg["threshold"],
                                 waivable=waivable, max_waived=cfg["max_waived"])
        selected = degrade(verdicts, reqs, query, check_fn=check_fn)
    else:
        selected = eligible(verdicts, reqs)
    doc = report(selected, model, lints)
    text = report_text(doc)
    out_dir = Path(cfg["out"])
    outputs = [
        _write(out_dir, "report.json", json.dumps(doc, indent=2, sort_keys=True) + "\n"),
        _write(out_dir, "report.txt", text),
    ]
    write_manifest(out_dir, sys.argv[1:], cfg,
                   [args.model, args.reqs, args.verdicts], outputs,
                   with_times=not cfg["no_timing"])
    print(text)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "weaken": cmd_weaken,
    "check": cmd_check,
    "enumerate": cmd_enumerate,
    "search": cmd_search,
    "table1": cmd_table1,
    "bench": cmd_bench,
    "degrade": cmd_degrade,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = _load_config_file(args.config)
        cfg = _resolve(args, file_cfg)
        return COMMANDS[args.command](args, cfg)
    except (ParseError, PredictedVerdictError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
