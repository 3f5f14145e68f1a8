"""Experiment orchestration: seeded runs over a suite, convergence traces at
log-spaced checkpoints, result tables and CSV emission."""
from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .benchmarks import BenchmarkFunction
from .ensemble import EnsembleConfig, checkpoint_grid, run
from .stats import floor_errors

VARIANT_PRESETS = {
    "ea4eigcs": {},
    "ea4eig": {"enable_crisscross": False, "enable_sparrow": False},
}


def variant_config(base: EnsembleConfig, variant: str) -> EnsembleConfig:
    if variant not in VARIANT_PRESETS:
        raise KeyError(f"unknown variant {variant!r}; known: {sorted(VARIANT_PRESETS)}")
    return base.replace(**VARIANT_PRESETS[variant])


@dataclass
class RunTrace:
    function_id: int
    variant: str
    seed: int
    checkpoints: list[tuple[int, float]]

    def __post_init__(self):
        fes = [c[0] for c in self.checkpoints]
        if any(b <= a for a, b in zip(fes, fes[1:])):
            raise ValueError("trace FES values must be strictly increasing")
        errs = [c[1] for c in self.checkpoints]
        if any(b > a for a, b in zip(errs, errs[1:])):
            raise ValueError("trace best-error values must be non-increasing")


@dataclass
class ResultTable:
    function_ids: list[int]
    variants: list[str]
    runs: int
    errors: dict = field(default_factory=dict)   # (function_id, variant) -> array of R errors

    def cell(self, fid: int, variant: str) -> np.ndarray:
        return self.errors[(fid, variant)]

    def by_function(self) -> dict:
        return {fid: {v: self.errors[(fid, v)] for v in self.variants}
                for fid in self.function_ids}


def _run_job(args):
    problem, variant, overrides, seed, grid = args
    cfg = EnsembleConfig(**overrides).replace(seed=seed)
    result = run(cfg, problem, checkpoints=grid)
    return problem.id, variant, seed, result.best_error, result.checkpoints


def default_workers() -> int:
    env = os.environ.get("EA4EIGCS_WORKERS")
    if env:
        return max(1, int(env))
    return 1


def run_experiment(functions: list[BenchmarkFunction], variants: dict[str, dict],
                   R: int, MaxFES: int, seeds: list[int],
                   base_config: EnsembleConfig | None = None,
                   workers: int | None = None) -> tuple[ResultTable, list[RunTrace]]:
    """R independent seeded runs per (function, variant).

    `variants` maps a variant name to EnsembleConfig field overrides. Final
    errors below the reporting floor are recorded as 0; traces keep raw errors.
    """
    if len(seeds) != R:
        raise ValueError("need exactly one seed per run")
    base = base_config if base_config is not None else EnsembleConfig()
    base = base.replace(MaxFES=MaxFES)
    workers = default_workers() if workers is None else max(1, workers)

    jobs = []
    for fn in functions:
        grid = checkpoint_grid(base.NPmax, MaxFES)
        for vname, overrides in variants.items():
            cfg = base.replace(**overrides)
            cfg_dict = {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}
            for seed in seeds:
                jobs.append((fn, vname, cfg_dict, seed, grid))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_job, jobs, chunksize=1))
    else:
        outcomes = [_run_job(j) for j in jobs]

    # commit keyed by (function, variant, seed): ordering never affects outputs
    by_key = {(fid, v, s): (err, ckpts) for fid, v, s, err, ckpts in outcomes}
    table = ResultTable([f.id for f in functions], list(variants), R)
    traces: list[RunTrace] = []
    for fn in functions:
        for vname in variants:
            errs = []
            for seed in seeds:
                err, ckpts = by_key[(fn.id, vname, seed)]
                errs.append(float(floor_errors(err)))
                traces.append(RunTrace(fn.id, vname, seed, ckpts))
            table.errors[(fn.id, vname)] = np.array(errs)
    return table, traces


# ---------------------------------------------------------------------------
# CSV emission / parsing (full precision: 17 significant digits)

def _fmt(v: float) -> str:
    return "%.17g" % float(v)


def write_traces_csv(traces: list[RunTrace], path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["function_id", "variant", "seed", "FES", "best_error"])
        for t in traces:
            for fes, err in t.checkpoints:
                w.writerow([t.function_id, t.variant, t.seed, fes, _fmt(err)])


def read_traces_csv(path: str) -> list[RunTrace]:
    grouped: dict[tuple[int, str, int], list[tuple[int, float]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"function_id", "variant", "seed", "FES", "best_error"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: missing columns {sorted(required)}")
        for row in reader:
            key = (int(row["function_id"]), row["variant"], int(row["seed"]))
            grouped.setdefault(key, []).append((int(row["FES"]), float(row["best_error"])))
    return [RunTrace(fid, variant, seed, ckpts)
            for (fid, variant, seed), ckpts in grouped.items()]


def write_table_csv(table: ResultTable, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["function_id", "variant", "run", "final_error"])
        for fid in table.function_ids:
            for variant in table.variants:
                for run_idx, err in enumerate(table.errors[(fid, variant)]):
                    w.writerow([fid, variant, run_idx, _fmt(err)])


def read_table_csv(path: str) -> ResultTable:
    cells: dict[tuple[int, str], list[float]] = {}
    fids: list[int] = []
    variants: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"function_id", "variant", "run", "final_error"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: missing columns {sorted(required)}")
        for row in reader:
            fid = int(row["function_id"])
            variant = row["variant"]
            if fid not in fids:
                fids.append(fid)
            if variant not in variants:
                variants.append(variant)
            cells.setdefault((fid, variant), []).append(float(row["final_error"]))
    runs = {len(v) for v in cells.values()}
    if len(runs) > 1:
        raise ValueError(f"{path}: unequal run counts across cells: {sorted(runs)}")
    table = ResultTable(fids, variants, runs.pop() if runs else 0)
    table.errors = {k: np.array(v) for k, v in cells.items()}
    return table
