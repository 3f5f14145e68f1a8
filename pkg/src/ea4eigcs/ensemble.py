"""Ensemble controller: success-driven roulette over the four main
constituents, stagnation-triggered crisscross on the worst individuals, a
per-generation sparrow step, linear population size reduction, and budget /
target-error termination.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, asdict

import numpy as np

from .cmaes import CmaesStepper
from .core import Budget, Individual, Population, evaluate_rows, rng_stream
from .devariants import CobideStepper, IdebdStepper, JsoStepper, refresh_eigen_hook
from .secondary import crisscross_subset, sparrow_step_subset

CONSTITUENTS = ("cobide", "idebd", "jso", "cmaes")


@dataclass
class EnsembleConfig:
    """All tunables of the ensemble; defaults follow the published setting."""

    NPmax: int = 100
    NPmin: int = 10
    MaxFES: int = 200_000
    T_gen: int = 3
    R_c: float = 1.0 / 6.0
    R_s: float = 0.5
    n0: int = 2
    enable_crisscross: bool = True
    enable_sparrow: bool = True
    inferior_only: bool = True
    seed: int = 0
    target_error: float = 1e-8
    de_repair: str = "midpoint"
    secondary_repair: str = "clamp"
    ST: float = 0.8
    alpha: float = 1.0
    eigen_prob: float = 0.4
    cumulative_success: bool = False
    strict_fes_accounting: bool = False
    instrument: bool = False

    def __post_init__(self):
        if self.NPmin < 4:
            raise ValueError("NPmin must be at least 4")
        if self.NPmax < self.NPmin:
            raise ValueError("NPmax must be >= NPmin")
        if not (0.0 <= self.R_c <= 1.0 and 0.0 <= self.R_s <= 1.0):
            raise ValueError("R_c and R_s must lie in [0, 1]")
        if self.T_gen < 1:
            raise ValueError("T_gen must be >= 1")
        if self.n0 < 0:
            raise ValueError("n0 must be >= 0")

    def replace(self, **overrides) -> "EnsembleConfig":
        data = asdict(self)
        data.update(overrides)
        return EnsembleConfig(**data)

    # flat key = value persistence ------------------------------------------
    def to_file(self, path: str) -> None:
        with open(path, "w") as fh:
            for f in fields(self):
                fh.write(f"{f.name} = {getattr(self, f.name)!r}\n")

    @classmethod
    def from_file(cls, path: str) -> "EnsembleConfig":
        known = {f.name: f for f in fields(cls)}
        data = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value'")
                key, raw = (s.strip() for s in line.split("=", 1))
                if key not in known:
                    raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
                data[key] = _parse_value(raw)
        return cls(**data)


def _parse_value(raw: str):
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw.strip("'\"")


def roulette_probabilities(n, n0: int) -> np.ndarray:
    """p_h = (n_h + n0) / sum_j (n_j + n0), uniform when the sum degenerates."""
    n = np.asarray(n, dtype=float)
    num = n + float(n0)
    total = num.sum()
    if total <= 0.0:
        return np.full(n.size, 1.0 / n.size)
    return num / total


def choose_constituent(p, rng: np.random.Generator) -> int:
    """Inverse-CDF selection from one uniform draw."""
    cdf = np.cumsum(np.asarray(p, dtype=float))
    u = rng.random()
    return min(int(np.searchsorted(cdf, u, side="right")), len(cdf) - 1)


def lpsr_target(FES: int, MaxFES: int, NPmax: int, NPmin: int) -> int:
    """Linear population size reduction target, rounded half-up and clamped."""
    raw = NPmax + (FES / MaxFES) * (NPmin - NPmax)
    return int(min(NPmax, max(NPmin, math.floor(raw + 0.5))))


def checkpoint_grid(np_max: int, max_fes: int, n: int = 11) -> list[int]:
    """n log-spaced FES checkpoints in [np_max, max_fes); the final FES is
    recorded separately as the (n+1)-th trace point."""
    lo = min(np_max, max_fes)
    pts = np.geomspace(max(1, lo), max(1, max_fes), n + 1)[:n]
    grid = sorted(set(int(round(v)) for v in pts))
    return grid


@dataclass
class GenerationRecord:
    gen: int
    constituent: str
    successes: int
    improved_at_check: bool
    t_after: int
    crisscross_fired: bool
    cc_evals: int
    sparrow_evals: int
    FES: int
    NP: int
    best_error: float


@dataclass
class RunResult:
    best_x: np.ndarray
    best_f: float
    best_error: float
    FES: int
    evaluations: int
    checkpoints: list[tuple[int, float]]
    usage: dict[str, int]
    successes: dict[str, int]
    generations: int
    gen_log: list[GenerationRecord] = field(default_factory=list)


def run(config: EnsembleConfig, problem, checkpoints: list[int] | None = None) -> RunResult:
    """Execute the full ensemble loop on one problem instance."""
    streams = {name: rng_stream(config.seed, name)
               for name in ("init", "roulette", "archive", "crisscross", "sparrow") + CONSTITUENTS}
    steppers = {
        "cobide": CobideStepper(),
        "idebd": IdebdStepper(),
        "jso": JsoStepper(),
        "cmaes": CmaesStepper(),
    }
    budget = Budget(config.MaxFES, config.target_error)
    f_star = getattr(problem, "f_star", 0.0)
    grid = checkpoint_grid(config.NPmax, config.MaxFES) if checkpoints is None else list(checkpoints)
    trace: list[tuple[int, float]] = []
    grid_pos = 0

    X0 = problem.bounds.sample_uniform(streams["init"], config.NPmax)
    values, k = evaluate_rows(problem, X0, budget)
    if k == 0:
        raise ValueError("MaxFES leaves no room to evaluate any individual")
    pop = Population([Individual(X0[i].copy(), float(values[i]), 0) for i in range(k)],
                     archive_cap=config.NPmax)

    def best_error() -> float:
        return pop.best.fitness - f_star

    def record_progress() -> None:
        nonlocal grid_pos
        while grid_pos < len(grid) and budget.FES >= grid[grid_pos]:
            trace.append((grid[grid_pos], best_error()))
            grid_pos += 1

    record_progress()
    usage = {name: 0 for name in CONSTITUENTS}
    success_totals = {name: 0 for name in CONSTITUENTS}
    n_success = np.zeros(len(CONSTITUENTS), dtype=float)
    t = 0
    last_checked_best = pop.best.fitness
    gen_log: list[GenerationRecord] = []
    generations = 0

    while not budget.exhausted and best_error() > budget.target_error:
        pop.generation += 1
        generations += 1
        hook = refresh_eigen_hook(pop, config.eigen_prob)

        p = roulette_probabilities(n_success, config.n0)
        h = choose_constituent(p, streams["roulette"])
        name = CONSTITUENTS[h]
        delta = steppers[name].step(pop, problem, budget, streams[name], hook)
        usage[name] += 1
        success_totals[name] += delta
        n_success[h] = n_success[h] + delta if config.cumulative_success else delta
        record_progress()

        improved = pop.best.fitness < last_checked_best
        if improved:
            t = 0
        else:
            t += 1
        last_checked_best = pop.best.fitness

        fired = False
        cc_evals = 0
        if t >= config.T_gen:
            fired = True
            if config.enable_crisscross and not budget.exhausted:
                count = min(pop.NP, math.ceil(pop.NP * config.R_c))
                if config.inferior_only:
                    idxs = pop.worst_indices(count)
                else:
                    idxs = streams["crisscross"].choice(pop.NP, size=count, replace=False)
                before = budget.FES
                crisscross_subset(pop, idxs, problem, budget, streams["crisscross"],
                                  config.secondary_repair)
                cc_evals = budget.FES - before
            t = 0
        record_progress()

        sparrow_evals = 0
        if config.enable_sparrow and not budget.exhausted:
            before = budget.FES
            sparrow_step_subset(pop, problem, budget, streams["sparrow"], config.R_s,
                                config.inferior_only, config.secondary_repair)
            sparrow_evals = budget.FES - before
            if config.strict_fes_accounting:
                budget.charge_phantom(pop.NP - sparrow_evals)
        record_progress()

        target_np = lpsr_target(budget.FES, config.MaxFES, config.NPmax, config.NPmin)
        if target_np < pop.NP:
            kept = np.sort(pop.order_best_first()[:target_np])
            pop.shrink_to(target_np, streams["archive"])
            for stepper in steppers.values():
                notify = getattr(stepper, "notify_shrink", None)
                if notify is not None:
                    notify(kept)

        if config.instrument:
            gen_log.append(GenerationRecord(
                gen=pop.generation, constituent=name, successes=delta,
                improved_at_check=improved, t_after=t,
                crisscross_fired=fired, cc_evals=cc_evals, sparrow_evals=sparrow_evals,
                FES=budget.FES, NP=pop.NP, best_error=best_error()))

    final_err = best_error()
    while grid_pos < len(grid):
        trace.append((grid[grid_pos], final_err))
        grid_pos += 1
    if not trace or trace[-1][0] < config.MaxFES:
        trace.append((config.MaxFES, final_err))

    return RunResult(
        best_x=pop.best.x.copy(), best_f=pop.best.fitness, best_error=final_err,
        FES=budget.FES, evaluations=budget.evaluations, checkpoints=trace,
        usage=usage, successes=success_totals, generations=generations, gen_log=gen_log)
