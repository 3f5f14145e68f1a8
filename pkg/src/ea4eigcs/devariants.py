"""One-generation steppers for the three DE constituents.

Each stepper consumes and returns the shared population, keeps its own
parameter state across generations (the controller may interleave
constituents arbitrarily), charges the budget once per trial evaluated and
reports the number of strict improvements. Crossover optionally happens in
the eigenbasis of a covariance estimate of the better half of the population
(the hook is shared by all three variants).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Budget, Individual, Population, evaluate_rows, repair_rows


@dataclass
class EigenHook:
    covariance: np.ndarray
    basis: np.ndarray          # orthonormal columns
    activation: float = 0.4

    @property
    def is_identity(self) -> bool:
        return self.basis.shape[0] == self.basis.shape[1] and np.array_equal(
            self.basis, np.eye(self.basis.shape[0]))


def refresh_eigen_hook(pop: Population, activation: float = 0.4) -> EigenHook:
    """Eigenbasis of the covariance of the better half of the population.

    Degenerate cases (NP < 3, rank-deficient covariance, numerical failure)
    fall back to the identity basis.
    """
    D = pop.members[0].x.size
    identity = EigenHook(np.eye(D), np.eye(D), activation)
    if pop.NP < 3:
        return identity
    order = pop.order_best_first()
    half = max(2, -(-pop.NP // 2))
    X = np.array([pop.members[i].x for i in order[:half]])
    C = np.cov(X.T)
    C = np.atleast_2d(C)
    C = (C + C.T) / 2.0
    if not np.all(np.isfinite(C)):
        return identity
    try:
        evals, basis = np.linalg.eigh(C)
    except np.linalg.LinAlgError:
        return identity
    if evals[-1] <= 0.0 or evals[0] <= 1e-14 * evals[-1]:
        return identity
    return EigenHook(C, basis, activation)


def binomial_crossover(parents: np.ndarray, mutants: np.ndarray, cr: np.ndarray,
                       rng: np.random.Generator, hook: EigenHook | None = None) -> np.ndarray:
    """Binomial crossover, per-individual eigen-rotated with hook.activation probability."""
    NP, D = parents.shape
    jrand = rng.integers(D, size=NP)
    mask = rng.random((NP, D)) < cr[:, None]
    mask[np.arange(NP), jrand] = True

    use_eigen = np.zeros(NP, dtype=bool)
    if hook is not None and hook.activation > 0.0:
        use_eigen = rng.random(NP) < hook.activation
        if hook.is_identity:
            use_eigen[:] = False
    full = mask.all(axis=1)

    trials = np.where(mask, mutants, parents)
    rows = use_eigen & ~full
    if rows.any():
        B = hook.basis
        pr = parents[rows] @ B
        mr = mutants[rows] @ B
        trials[rows] = np.where(mask[rows], mr, pr) @ B.T
    return trials


def _distinct(rng: np.random.Generator, n: int, forbidden) -> int:
    r = int(rng.integers(n))
    while r in forbidden:
        r = int(rng.integers(n))
    return r


def _cauchy(rng: np.random.Generator, loc: float, scale: float = 0.1) -> float:
    return loc + scale * rng.standard_cauchy()


def _de_commit(pop: Population, trials: np.ndarray, values: np.ndarray, k: int,
               rng: np.random.Generator, on_success=None) -> int:
    """DE selection: accept on <=, count/archive/record on strict improvement."""
    improved = 0
    for i in range(k):
        parent = pop.members[i]
        v = float(values[i])
        if v <= parent.fitness:
            if v < parent.fitness:
                improved += 1
                pop.push_archive(parent, rng)
                if on_success is not None:
                    on_success(i, parent.fitness - v)
            pop.members[i] = Individual(trials[i].copy(), v, pop.generation)
            pop.consider_best(trials[i], v)
    return improved


class JsoStepper:
    """jSO: current-to-pbest-w/1 with success-history parameter adaptation."""

    name = "jso"

    def __init__(self, H: int = 5):
        self.H = H
        self.m_f = np.full(H, 0.3)
        self.m_cr = np.full(H, 0.8)
        self.m_f[-1] = 0.9   # terminal memory slot, never updated
        self.m_cr[-1] = 0.9
        self.k = 0
        self.last_success_records: list[tuple[float, float, float]] = []
        self.last_memory_before: tuple[np.ndarray, np.ndarray, int] | None = None

    def step(self, pop: Population, problem, budget: Budget,
             rng: np.random.Generator, hook: EigenHook | None = None) -> int:
        NP = pop.NP
        D = pop.members[0].x.size
        X = pop.matrix()
        progress = budget.FES / budget.MaxFES

        slot = rng.integers(self.H, size=NP)
        cr = rng.normal(self.m_cr[slot], 0.1)
        cr = np.where(self.m_cr[slot] < 0.0, 0.0, np.clip(cr, 0.0, 1.0))
        if progress < 0.25:
            cr = np.maximum(cr, 0.7)
        elif progress < 0.5:
            cr = np.maximum(cr, 0.6)

        F = np.empty(NP)
        for i in range(NP):
            f = _cauchy(rng, self.m_f[slot[i]])
            while f <= 0.0:
                f = _cauchy(rng, self.m_f[slot[i]])
            F[i] = min(f, 1.0)
        if progress < 0.6:
            F = np.minimum(F, 0.7)
        fw_factor = 0.7 if progress < 0.2 else (0.8 if progress < 0.4 else 1.2)
        Fw = fw_factor * F

        p_now = 0.25 * (1.0 - 0.5 * progress)
        p_size = min(NP, max(2, round(p_now * NP)))
        order = pop.order_best_first()
        pbest = order[rng.integers(p_size, size=NP)]

        arch = pop.archive
        XA = np.vstack([X] + [a.x[None, :] for a in arch]) if arch else X
        union = len(XA)
        r1 = np.empty(NP, dtype=int)
        r2 = np.empty(NP, dtype=int)
        for i in range(NP):
            r1[i] = _distinct(rng, NP, (i,))
            r2[i] = _distinct(rng, union, (i, r1[i]))

        mutants = X + Fw[:, None] * (X[pbest] - X) + F[:, None] * (X[r1] - XA[r2])
        trials = binomial_crossover(X, mutants, cr, rng, hook)
        trials = repair_rows(trials, X, problem.bounds, "midpoint")
        values, k = evaluate_rows(problem, trials, budget)

        self.last_memory_before = (self.m_f.copy(), self.m_cr.copy(), self.k)
        records: list[tuple[float, float, float]] = []
        improved = _de_commit(pop, trials, values, k, rng,
                              on_success=lambda i, df: records.append((F[i], cr[i], df)))
        self.last_success_records = records
        if records:
            self._update_memory(records)
        return improved

    def _update_memory(self, records) -> None:
        sf = np.array([r[0] for r in records])
        scr = np.array([r[1] for r in records])
        df = np.array([r[2] for r in records])
        w = df / df.sum()
        self.m_f[self.k] = (self.m_f[self.k] + np.sum(w * sf * sf) / np.sum(w * sf)) / 2.0
        if self.m_cr[self.k] < 0.0 or scr.max() <= 0.0:
            self.m_cr[self.k] = -1.0
        else:
            self.m_cr[self.k] = (self.m_cr[self.k] + np.sum(w * scr * scr) / np.sum(w * scr)) / 2.0
        self.k = (self.k + 1) % (self.H - 1)


class CobideStepper:
    """CoBiDE-style rand/1 with bimodal-Cauchy parameters, kept on success."""

    name = "cobide"

    def __init__(self):
        self.F: np.ndarray | None = None
        self.CR: np.ndarray | None = None
        self.keep: np.ndarray | None = None

    def notify_shrink(self, kept: np.ndarray) -> None:
        if self.F is not None:
            self.F = self.F[kept]
            self.CR = self.CR[kept]
            self.keep = self.keep[kept]

    def _sample_f(self, rng) -> float:
        while True:
            loc = 0.65 if rng.random() < 0.5 else 1.0
            f = _cauchy(rng, loc)
            if f > 0.0:
                return min(f, 1.0)

    def _sample_cr(self, rng) -> float:
        loc = 0.1 if rng.random() < 0.5 else 0.95
        return float(np.clip(_cauchy(rng, loc), 0.0, 1.0))

    def step(self, pop: Population, problem, budget: Budget,
             rng: np.random.Generator, hook: EigenHook | None = None) -> int:
        NP = pop.NP
        X = pop.matrix()
        if self.F is None or len(self.F) != NP:
            self.F = np.zeros(NP)
            self.CR = np.zeros(NP)
            self.keep = np.zeros(NP, dtype=bool)
        for i in range(NP):
            if not self.keep[i]:
                self.F[i] = self._sample_f(rng)
                self.CR[i] = self._sample_cr(rng)

        r1 = np.empty(NP, dtype=int)
        r2 = np.empty(NP, dtype=int)
        r3 = np.empty(NP, dtype=int)
        for i in range(NP):
            r1[i] = _distinct(rng, NP, (i,))
            r2[i] = _distinct(rng, NP, (i, r1[i]))
            r3[i] = _distinct(rng, NP, (i, r1[i], r2[i]))
        mutants = X[r1] + self.F[:, None] * (X[r2] - X[r3])
        trials = binomial_crossover(X, mutants, self.CR, rng, hook)
        trials = repair_rows(trials, X, problem.bounds, "midpoint")
        values, k = evaluate_rows(problem, trials, budget)

        success = np.zeros(NP, dtype=bool)
        improved = _de_commit(pop, trials, values, k, rng,
                              on_success=lambda i, df: success.__setitem__(i, True))
        self.keep = success
        return improved


class IdebdStepper:
    """IDE-style stepper: rank-dependent F/CR, superior/inferior population
    division steering donor choice, and a small exploratory perturbation on
    inferior mutants."""

    name = "idebd"
    perturb_prob = 0.1

    def __init__(self):
        self.last_F: np.ndarray | None = None
        self.last_CR: np.ndarray | None = None

    def step(self, pop: Population, problem, budget: Budget,
             rng: np.random.Generator, hook: EigenHook | None = None) -> int:
        NP = pop.NP
        D = pop.members[0].x.size
        X = pop.matrix()
        order = pop.order_best_first()
        rank = np.empty(NP, dtype=int)
        rank[order] = np.arange(1, NP + 1)
        mu = rank / NP
        F = np.clip(rng.normal(mu, 0.1), 0.05, 1.0)
        CR = np.clip(rng.normal(mu, 0.1), 0.0, 1.0)
        self.last_F, self.last_CR = F, CR

        n_sup = -(-NP // 2)
        superior = order[:n_sup]
        inferior_mask = rank > n_sup

        r1 = np.empty(NP, dtype=int)
        r2 = np.empty(NP, dtype=int)
        r3 = np.empty(NP, dtype=int)
        for i in range(NP):
            if inferior_mask[i]:
                # superior donors cannot collide with an inferior target
                r1[i] = int(superior[int(rng.integers(n_sup))])
            else:
                r1[i] = _distinct(rng, NP, (i,))
            r2[i] = _distinct(rng, NP, (i, r1[i]))
            r3[i] = _distinct(rng, NP, (i, r1[i], r2[i]))
        mutants = X[r1] + F[:, None] * (X[r2] - X[r3])

        lo, hi = problem.bounds.lower, problem.bounds.upper
        for i in range(NP):
            if inferior_mask[i] and rng.random() < self.perturb_prob:
                j = int(rng.integers(D))
                mutants[i, j] = lo[j] + rng.random() * (hi[j] - lo[j])

        trials = binomial_crossover(X, mutants, CR, rng, hook)
        trials = repair_rows(trials, X, problem.bounds, "midpoint")
        values, k = evaluate_rows(problem, trials, budget)
        return _de_commit(pop, trials, values, k, rng)
