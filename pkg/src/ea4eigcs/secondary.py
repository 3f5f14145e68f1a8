"""Crisscross and sparrow search: subset-scoped secondary steps plus
full-population standalone variants for ablation runs.

Both secondary steps replace a member only on strict improvement, so they can
never degrade the population.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import Budget, Individual, Population, evaluate_rows, repair_rows

EPS = float(np.finfo(np.float64).eps)


@dataclass
class CrisscrossDraw:
    """Random draws for one horizontal crossover pair; one entry per dimension."""

    r1: np.ndarray  # U[0,1]
    c1: np.ndarray  # U[-1,1]
    r2: np.ndarray
    c2: np.ndarray

    @classmethod
    def sample(cls, D: int, rng: np.random.Generator) -> "CrisscrossDraw":
        return cls(
            r1=rng.random(D), c1=rng.uniform(-1.0, 1.0, D),
            r2=rng.random(D), c2=rng.uniform(-1.0, 1.0, D),
        )


@dataclass
class SparrowDraw:
    """Random draws for one sparrow update; only the fields the branch uses matter."""

    R2: float = 0.0          # alarm value, U[0,1]
    ST: float = 0.8          # safety threshold in [0.5, 1]
    Q: float = 0.0           # standard normal
    alpha: float = 1.0       # in (0,1]
    A: np.ndarray = field(default_factory=lambda: np.ones(1))  # components +-1
    beta: float = 0.0        # standard normal
    K: float = 0.0           # U[-1,1]
    eps: float = EPS


def horizontal_cross(xi: np.ndarray, xi2: np.ndarray, draw: CrisscrossDraw):
    """Pairwise all-dimension crossover; returns the two children."""
    xi = np.asarray(xi, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    if xi.shape != xi2.shape:
        raise ValueError("parents must have equal length")
    diff = xi - xi2
    child1 = draw.r1 * xi + (1.0 - draw.r1) * xi2 + draw.c1 * diff
    child2 = draw.r2 * xi2 + (1.0 - draw.r2) * xi - draw.c2 * diff
    return child1, child2


def vertical_cross(pop_matrix: np.ndarray, j1: int, j2: int, r_per_row: np.ndarray) -> np.ndarray:
    """Population-wide crossover of dimension j1 with j2; returns new j1 column."""
    if j1 == j2:
        raise ValueError("vertical crossover needs two distinct dimensions")
    pop_matrix = np.asarray(pop_matrix, dtype=float)
    r = np.asarray(r_per_row, dtype=float)
    return r * pop_matrix[:, j1] + (1.0 - r) * pop_matrix[:, j2]


def sparrow_producer(x: np.ndarray, i: int, draw: SparrowDraw, max_fes: int) -> np.ndarray:
    """Producer update; i is the member's 1-based rank."""
    x = np.asarray(x, dtype=float)
    if draw.R2 < draw.ST:
        return x * math.exp(-i / (draw.alpha * max_fes))
    return x + draw.Q


def sparrow_scrounger(x, i: int, x_worst, x_best, draw: SparrowDraw, NP: int) -> np.ndarray:
    """Scrounger update; i is the member's 1-based rank, NP the current size."""
    x = np.asarray(x, dtype=float)
    if i > NP / 2:
        return draw.Q * np.exp((np.asarray(x_worst) - x) / float(i) ** 2)
    x_best = np.asarray(x_best, dtype=float)
    # A+ . L for a 1xD row of +-1 entries collapses to one shared scalar
    s = float(np.sum(np.abs(x - x_best) * draw.A)) / x.size
    return x_best + s


def sparrow_danger_step(x, x_best, x_worst, f_i, f_best, f_worst, draw: SparrowDraw) -> np.ndarray:
    """Danger-aware update pulling toward the best / away from the worst."""
    x = np.asarray(x, dtype=float)
    x_best = np.asarray(x_best, dtype=float)
    if f_i > f_best:
        return x_best + draw.beta * np.abs(x - x_best)
    return x + draw.K * np.abs(x - np.asarray(x_worst)) / (f_i - f_worst + draw.eps)


# ---------------------------------------------------------------------------
# subset-scoped steps used inside the ensemble loop

def _commit_trials(pop: Population, owners, trials, problem, budget, repair_mode) -> int:
    """Repair, evaluate (budget-capped) and greedily commit trials in order."""
    parents = np.array([pop.members[i].x for i in owners])
    trials = repair_rows(trials, parents, problem.bounds, repair_mode)
    values, k = evaluate_rows(problem, trials, budget)
    improved = 0
    for pos in range(k):
        i = owners[pos]
        if values[pos] < pop.members[i].fitness:
            pop.members[i] = Individual(trials[pos].copy(), float(values[pos]), pop.generation)
            pop.consider_best(trials[pos], float(values[pos]))
            improved += 1
    return improved


def crisscross_subset(pop: Population, indices, problem, budget: Budget,
                      rng: np.random.Generator, repair_mode: str = "clamp") -> int:
    """Composed horizontal+vertical crossover on the given members.

    Each member yields exactly one trial, so the FES cost is len(indices).
    """
    idx = [int(i) for i in indices]
    if len(idx) < 2:
        return 0
    D = pop.members[0].x.size
    order = rng.permutation(len(idx))
    shuffled = [idx[int(k)] for k in order]

    owners: list[int] = []
    trials: list[np.ndarray] = []
    pos = 0
    while pos + 1 < len(shuffled):
        a, b = shuffled[pos], shuffled[pos + 1]
        draw = CrisscrossDraw.sample(D, rng)
        ca, cb = horizontal_cross(pop.members[a].x, pop.members[b].x, draw)
        owners += [a, b]
        trials += [ca, cb]
        pos += 2
    if pos < len(shuffled):
        a = shuffled[pos]
        partner = a
        while partner == a:
            partner = int(rng.integers(pop.NP))
        draw = CrisscrossDraw.sample(D, rng)
        ca, _ = horizontal_cross(pop.members[a].x, pop.members[partner].x, draw)
        owners.append(a)
        trials.append(ca)

    if D >= 2:
        for t in trials:
            j1 = int(rng.integers(D))
            j2 = int(rng.integers(D))
            while j2 == j1:
                j2 = int(rng.integers(D))
            r = rng.random()
            t[j1] = r * t[j1] + (1.0 - r) * t[j2]

    return _commit_trials(pop, owners, np.array(trials), problem, budget, repair_mode)


def sparrow_step_subset(pop: Population, problem, budget: Budget, rng: np.random.Generator,
                        R_s: float, inferior_only: bool = True,
                        repair_mode: str = "clamp") -> int:
    """Danger-aware sparrow step on a random draw from the worst R_s portion."""
    NP = pop.NP
    pool_size = min(NP, math.ceil(R_s * NP))
    count = min(pool_size, math.ceil(R_s * R_s * NP))
    if count <= 0:
        return 0
    if inferior_only:
        pool = pop.worst_indices(pool_size)
    else:
        pool = rng.choice(NP, size=pool_size, replace=False)
    chosen = rng.choice(pool, size=count, replace=False)

    order = pop.order_best_first()
    best = pop.members[order[0]]
    worst = pop.members[order[-1]]

    owners: list[int] = []
    trials: list[np.ndarray] = []
    for i in chosen:
        m = pop.members[int(i)]
        draw = SparrowDraw(beta=rng.standard_normal(), K=rng.uniform(-1.0, 1.0))
        trials.append(sparrow_danger_step(
            m.x, best.x, worst.x, m.fitness, best.fitness, worst.fitness, draw))
        owners.append(int(i))
    return _commit_trials(pop, owners, np.array(trials), problem, budget, repair_mode)


# ---------------------------------------------------------------------------
# full-population standalone generations (ablation / standalone use)

def crisscross_full_generation(pop: Population, problem, budget: Budget,
                               rng: np.random.Generator, repair_mode: str = "clamp") -> int:
    """One full crisscross generation: horizontal over all pairs, then vertical
    on one dimension pair, greedy selection after each phase. FES cost 2*NP
    (NP for D=1, where the vertical phase is undefined)."""
    NP = pop.NP
    D = pop.members[0].x.size
    perm = [int(i) for i in rng.permutation(NP)]

    owners: list[int] = []
    trials: list[np.ndarray] = []
    pos = 0
    while pos + 1 < NP:
        a, b = perm[pos], perm[pos + 1]
        draw = CrisscrossDraw.sample(D, rng)
        ca, cb = horizontal_cross(pop.members[a].x, pop.members[b].x, draw)
        owners += [a, b]
        trials += [ca, cb]
        pos += 2
    if pos < NP:
        a = perm[pos]
        partner = a
        while partner == a:
            partner = int(rng.integers(NP))
        draw = CrisscrossDraw.sample(D, rng)
        ca, _ = horizontal_cross(pop.members[a].x, pop.members[partner].x, draw)
        owners.append(a)
        trials.append(ca)
    improved = _commit_trials(pop, owners, np.array(trials), problem, budget, repair_mode)

    if D >= 2:
        j1 = int(rng.integers(D))
        j2 = int(rng.integers(D))
        while j2 == j1:
            j2 = int(rng.integers(D))
        X = pop.matrix()
        new_j1 = vertical_cross(X, j1, j2, rng.random(NP))
        V = X.copy()
        V[:, j1] = new_j1
        improved += _commit_trials(pop, list(range(NP)), V, problem, budget, repair_mode)
    return improved


def sparrow_full_generation(pop: Population, problem, budget: Budget, rng: np.random.Generator,
                            producer_fraction: float = 0.2, ST: float = 0.8, alpha: float = 1.0,
                            repair_mode: str = "clamp") -> int:
    """One full sparrow generation: producers, scroungers, then the danger-aware
    step on the better half; greedy replacement throughout."""
    if not 0.0 < producer_fraction < 1.0:
        raise ValueError("producer_fraction must lie in (0, 1)")
    NP = pop.NP
    D = pop.members[0].x.size
    order = pop.order_best_first()
    n_prod = max(1, round(producer_fraction * NP))

    R2 = rng.random()
    x_best = pop.members[order[0]].x
    x_worst = pop.members[order[-1]].x
    owners: list[int] = []
    trials: list[np.ndarray] = []
    for rank, i in enumerate(order, start=1):
        m = pop.members[int(i)]
        if rank <= n_prod:
            draw = SparrowDraw(R2=R2, ST=ST, Q=rng.standard_normal(), alpha=alpha)
            trials.append(sparrow_producer(m.x, rank, draw, budget.MaxFES))
        else:
            draw = SparrowDraw(Q=rng.standard_normal(),
                               A=rng.integers(0, 2, D) * 2.0 - 1.0)
            trials.append(sparrow_scrounger(m.x, rank, x_worst, x_best, draw, NP))
        owners.append(int(i))
    improved = _commit_trials(pop, owners, np.array(trials), problem, budget, repair_mode)

    order = pop.order_best_first()
    best = pop.members[order[0]]
    worst = pop.members[order[-1]]
    half = [int(i) for i in order[: math.ceil(NP / 2)]]
    owners, trials = [], []
    for i in half:
        m = pop.members[i]
        draw = SparrowDraw(beta=rng.standard_normal(), K=rng.uniform(-1.0, 1.0))
        trials.append(sparrow_danger_step(
            m.x, best.x, worst.x, m.fitness, best.fitness, worst.fitness, draw))
        owners.append(i)
    improved += _commit_trials(pop, owners, np.array(trials), problem, budget, repair_mode)
    return improved
