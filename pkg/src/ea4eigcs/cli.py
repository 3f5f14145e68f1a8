"""Command-line entry point: `run` experiments, `stats` summaries, `trace` export."""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .benchmarks import load_suite, make_suite, plain_function
from .ensemble import EnsembleConfig
from .harness import (VARIANT_PRESETS, read_table_csv, read_traces_csv,
                      run_experiment, write_table_csv, write_traces_csv)
from .stats import floor_errors, friedman_mean_ranks, wilcoxon_rank_sum


def _resolve_suite(name: str, dim: int, suite_seed: int):
    if name == "mini12":
        return make_suite(dim, suite_seed).functions
    if os.path.isdir(name):
        return load_suite(name).functions
    try:
        fn = plain_function(name, dim)
    except KeyError:
        raise SystemExit(f"error: unknown suite {name!r} (builtin: mini12, a base "
                         f"function name, or a manifest directory)")
    fn.id = 1
    return [fn]


def _cmd_run(args) -> int:
    cfg = EnsembleConfig.from_file(args.config) if args.config else EnsembleConfig()
    overrides = {}
    for key in ("NPmax", "NPmin", "T_gen", "R_c", "R_s", "n0", "target_error"):
        v = getattr(args, key, None)
        if v is not None:
            overrides[key] = v
    if args.max_fes is not None:
        overrides["MaxFES"] = args.max_fes
    cfg = cfg.replace(**overrides)

    variant_overrides = dict(VARIANT_PRESETS[args.variant])
    if args.no_crisscross:
        variant_overrides["enable_crisscross"] = False
    if args.no_sparrow:
        variant_overrides["enable_sparrow"] = False
    if args.not_inferior_only:
        variant_overrides["inferior_only"] = False

    functions = _resolve_suite(args.suite, args.dim, args.suite_seed)
    if args.functions:
        wanted = {int(s) for s in args.functions.split(",")}
        functions = [f for f in functions if f.id in wanted]
        if not functions:
            raise SystemExit("error: --functions selected no suite function")

    seeds = [args.seed + i for i in range(args.runs)]
    table, traces = run_experiment(
        functions, {args.variant: variant_overrides}, args.runs, cfg.MaxFES, seeds,
        base_config=cfg, workers=args.workers)

    os.makedirs(args.out_dir, exist_ok=True)
    table_path = os.path.join(args.out_dir, "table.csv")
    traces_path = os.path.join(args.out_dir, "traces.csv")
    write_table_csv(table, table_path)
    write_traces_csv(traces, traces_path)
    for fid in table.function_ids:
        errs = table.cell(fid, args.variant)
        print(f"function {fid:>2}  variant {args.variant:>10}  "
              f"median {np.median(errs):.6g}  best {errs.min():.6g}  worst {errs.max():.6g}")
    print(f"wrote {table_path} and {traces_path}")
    return 0


def _cmd_stats(args) -> int:
    table = read_table_csv(args.tables)
    variants = table.variants
    if args.baseline not in variants:
        raise SystemExit(f"error: baseline {args.baseline!r} not in table "
                         f"(variants: {variants})")

    by_fn = {fid: {v: floor_errors(table.cell(fid, v)) for v in variants}
             for fid in table.function_ids}
    ranks = friedman_mean_ranks(by_fn, variants) if len(variants) >= 2 and \
        len(table.function_ids) >= 2 else {v: 1.0 for v in variants}

    lines = []
    rows = []
    for v in variants:
        if v == args.baseline:
            rows.append((v, "-", "-", "-", ranks[v]))
            continue
        plus = minus = approx = 0
        for fid in table.function_ids:
            res = wilcoxon_rank_sum(by_fn[fid][v], by_fn[fid][args.baseline], args.alpha)
            if res.outcome == "better":
                plus += 1
            elif res.outcome == "worse":
                minus += 1
            else:
                approx += 1
            lines.append((fid, v, res.outcome, res.p_value))
        rows.append((v, plus, minus, approx, ranks[v]))

    os.makedirs(args.out_dir, exist_ok=True)
    wpath = os.path.join(args.out_dir, "wilcoxon.csv")
    with open(wpath, "w") as fh:
        fh.write("function_id,variant,outcome_vs_baseline,p_value\n")
        for fid, v, outcome, p in lines:
            fh.write(f"{fid},{v},{outcome},{p:.17g}\n")
    fpath = os.path.join(args.out_dir, "friedman.csv")
    with open(fpath, "w") as fh:
        fh.write("variant,mean_rank\n")
        for v in variants:
            fh.write(f"{v},{ranks[v]:.17g}\n")

    header = f"{'variant':<14} {'+':>4} {'-':>4} {'~':>4} {'mean rank':>10}"
    print(header)
    print("-" * len(header))
    summary_lines = [header]
    for v, plus, minus, approx, rank in rows:
        line = f"{v:<14} {plus!s:>4} {minus!s:>4} {approx!s:>4} {rank:>10.2f}"
        print(line)
        summary_lines.append(line)
    spath = os.path.join(args.out_dir, "summary.txt")
    with open(spath, "w") as fh:
        fh.write("\n".join(summary_lines) + "\n")
    print(f"wrote {wpath}, {fpath}, {spath}")
    return 0


def _cmd_trace(args) -> int:
    traces = read_traces_csv(args.infile)
    if args.functions:
        wanted = {int(s) for s in args.functions.split(",")}
        traces = [t for t in traces if t.function_id in wanted]
    if args.variants:
        wanted_v = set(args.variants.split(","))
        traces = [t for t in traces if t.variant in wanted_v]
    if not traces:
        raise SystemExit("error: no traces left after filtering")
    write_traces_csv(traces, args.out)
    print(f"wrote {len(traces)} traces to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ea4eigcs",
                                     description="Ensemble optimizer experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run seeded experiments on a suite")
    p_run.add_argument("--suite", default="mini12",
                       help="mini12, a base function name, or a manifest directory")
    p_run.add_argument("--dim", type=int, default=10)
    p_run.add_argument("--suite-seed", type=int, default=7)
    p_run.add_argument("--functions", help="comma-separated function ids to keep")
    p_run.add_argument("--variant", choices=sorted(VARIANT_PRESETS), default="ea4eigcs")
    p_run.add_argument("--no-crisscross", action="store_true")
    p_run.add_argument("--no-sparrow", action="store_true")
    p_run.add_argument("--not-inferior-only", action="store_true")
    p_run.add_argument("--runs", type=int, default=1)
    p_run.add_argument("--max-fes", type=int, default=None)
    p_run.add_argument("--seed", type=int, default=0, help="base seed; run i uses seed+i")
    p_run.add_argument("--out-dir", default="results")
    p_run.add_argument("--config", help="flat key = value config file")
    p_run.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: EA4EIGCS_WORKERS or 1)")
    for key, typ in (("NPmax", int), ("NPmin", int), ("T_gen", int),
                     ("R_c", float), ("R_s", float), ("n0", int), ("target_error", float)):
        p_run.add_argument(f"--{key}", type=typ, default=None, dest=key)
    p_run.set_defaults(func=_cmd_run)

    p_stats = sub.add_parser("stats", help="Wilcoxon/Friedman summary from a table CSV")
    p_stats.add_argument("--tables", required=True, help="table.csv produced by `run`")
    p_stats.add_argument("--alpha", type=float, default=0.05)
    p_stats.add_argument("--baseline", default="ea4eigcs")
    p_stats.add_argument("--out-dir", default="stats")
    p_stats.set_defaults(func=_cmd_stats)

    p_trace = sub.add_parser("trace", help="filter/re-emit a convergence trace CSV")
    p_trace.add_argument("--in", dest="infile", required=True)
    p_trace.add_argument("--out", required=True)
    p_trace.add_argument("--functions", help="comma-separated function ids")
    p_trace.add_argument("--variants", help="comma-separated variant names")
    p_trace.set_defaults(func=_cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, int):
            return exc.code
        print(exc.code, file=sys.stderr)
        return 1
    except Exception as exc:   # surface any failure with a message and code 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
