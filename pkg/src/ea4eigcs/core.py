"""Shared domain types: bounds, individuals, population, evaluation budget, RNG streams."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# One independent stream per algorithm module, so enabling/disabling any one
# of them never shifts the draw sequences of the others.
STREAM_IDS = {
    "init": 0,
    "roulette": 1,
    "cobide": 2,
    "idebd": 3,
    "jso": 4,
    "cmaes": 5,
    "crisscross": 6,
    "sparrow": 7,
    "archive": 8,
}


def rng_stream(seed: int, stream: str) -> np.random.Generator:
    """Deterministic generator for (seed, stream); streams never perturb each other."""
    if stream not in STREAM_IDS:
        raise KeyError(f"unknown RNG stream {stream!r}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(STREAM_IDS[stream],))
    return np.random.Generator(np.random.PCG64(ss))


class EvaluationError(RuntimeError):
    """Objective returned a non-finite value; carries the offending point."""

    def __init__(self, x, value):
        super().__init__(f"objective returned non-finite value {value!r} at x={np.asarray(x)!r}")
        self.x = np.asarray(x)
        self.value = value


class BudgetExhausted(RuntimeError):
    pass


@dataclass
class Bounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("lower/upper must be 1-d vectors of equal length")
        if not np.all(self.lower < self.upper):
            raise ValueError("lower[j] < upper[j] must hold for all j")

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> "Bounds":
        return cls(np.full(dim, float(lo)), np.full(dim, float(hi)))

    @property
    def dim(self) -> int:
        return self.lower.size

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.lower + rng.random((n, self.dim)) * (self.upper - self.lower)


@dataclass
class Individual:
    x: np.ndarray
    fitness: float = np.inf
    age: int = 0

    def copy(self) -> "Individual":
        return Individual(self.x.copy(), self.fitness, self.age)


class Budget:
    """FES counter with hard MaxFES cap and target-error early stop.

    FES is incremented exactly once per objective evaluation; `charge_phantom`
    exists only for the strict-pseudocode accounting mode and never reflects
    real evaluations.
    """

    def __init__(self, max_fes: int, target_error: float = 0.0):
        self.FES = 0
        self.evaluations = 0
        self.MaxFES = int(max_fes)
        self.target_error = float(target_error)

    @property
    def exhausted(self) -> bool:
        return self.FES >= self.MaxFES

    @property
    def remaining(self) -> int:
        return max(0, self.MaxFES - self.FES)

    def charge(self, n: int = 1) -> None:
        self.FES += n
        self.evaluations += n

    def charge_phantom(self, n: int) -> None:
        self.FES += n

    def __repr__(self):
        return f"Budget(FES={self.FES}, MaxFES={self.MaxFES})"


class Population:
    """Ordered members plus best-so-far record and the shared parent archive."""

    def __init__(self, members: list[Individual], archive_cap: int | None = None):
        self.members = members
        self.archive: list[Individual] = []
        self.archive_cap = len(members) if archive_cap is None else archive_cap
        self.generation = 0
        best = min(members, key=lambda m: m.fitness)
        self.best = best.copy()

    @property
    def NP(self) -> int:
        return len(self.members)

    def matrix(self) -> np.ndarray:
        return np.array([m.x for m in self.members])

    def fitnesses(self) -> np.ndarray:
        return np.array([m.fitness for m in self.members])

    def consider_best(self, x: np.ndarray, fitness: float) -> bool:
        if fitness < self.best.fitness:
            self.best = Individual(np.array(x, dtype=float), float(fitness), self.generation)
            return True
        return False

    def order_best_first(self) -> np.ndarray:
        """Indices sorted by objective value, ties broken by lower index."""
        f = self.fitnesses()
        return np.lexsort((np.arange(self.NP), f))

    def worst_indices(self, k: int) -> np.ndarray:
        return self.order_best_first()[::-1][:k]

    def push_archive(self, ind: Individual, rng: np.random.Generator) -> None:
        if self.archive_cap <= 0:
            return
        if len(self.archive) < self.archive_cap:
            self.archive.append(ind)
        else:
            self.archive[int(rng.integers(len(self.archive)))] = ind

    def trim_archive(self, rng: np.random.Generator) -> None:
        while len(self.archive) > self.archive_cap:
            self.archive.pop(int(rng.integers(len(self.archive))))

    def shrink_to(self, target_np: int, rng: np.random.Generator) -> None:
        """LPSR removal: drop the worst-fitness members down to target_np."""
        if target_np >= self.NP:
            return
        keep = np.sort(self.order_best_first()[:target_np])
        self.members = [self.members[i] for i in keep]
        self.archive_cap = target_np
        self.trim_archive(rng)


def evaluate(f, x, budget: Budget, force: bool = False) -> float:
    """Evaluate f(x), charging one FES. Signals exhaustion instead of overrunning."""
    if budget.exhausted and not force:
        raise BudgetExhausted(f"FES={budget.FES} >= MaxFES={budget.MaxFES}")
    bounds = getattr(f, "bounds", None)
    if bounds is not None and not bounds.contains(x):
        raise ValueError(f"evaluation point outside bounds: {np.asarray(x)!r}")
    value = float(f(np.asarray(x, dtype=float)))
    budget.charge(1)
    if not np.isfinite(value):
        raise EvaluationError(x, value)
    return value


def evaluate_rows(f, X: np.ndarray, budget: Budget) -> tuple[np.ndarray, int]:
    """Evaluate the first k rows of X, where k is capped by the remaining budget.

    Returns (values, k); rows k.. are left unevaluated (partial-generation
    commit on budget exhaustion). Uses f.batch when available.
    """
    n = len(X)
    k = min(n, budget.remaining)
    values = np.full(n, np.nan)
    if k == 0:
        return values, 0
    batch = getattr(f, "batch", None)
    if batch is not None:
        out = np.asarray(batch(X[:k]), dtype=float)
        budget.charge(k)
    else:
        out = np.empty(k)
        for i in range(k):
            out[i] = float(f(X[i]))
        budget.charge(k)
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise EvaluationError(X[bad], out[bad])
    values[:k] = out
    return values, k


def repair_bounds(x, parent, b: Bounds, mode: str) -> np.ndarray:
    """Pull out-of-bounds components back inside; total function.

    midpoint: violating component j -> (parent[j] + violated_bound[j]) / 2
    clamp:    violating component j -> the violated bound
    reflect:  mirror the overshoot back inside, then clamp
    """
    x = np.array(x, dtype=float)
    lo, hi = b.lower, b.upper
    below = x < lo
    above = x > hi
    if not (below.any() or above.any()):
        return x
    if mode == "midpoint":
        parent = np.asarray(parent, dtype=float)
        x = np.where(below, (parent + lo) / 2.0, x)
        x = np.where(above, (parent + hi) / 2.0, x)
    elif mode == "clamp":
        x = np.clip(x, lo, hi)
    elif mode == "reflect":
        x = np.where(below, 2.0 * lo - x, x)
        x = np.where(above, 2.0 * hi - x, x)
        x = np.clip(x, lo, hi)
    else:
        raise ValueError(f"unknown repair mode {mode!r}")
    return x


def repair_rows(X: np.ndarray, parents: np.ndarray, b: Bounds, mode: str) -> np.ndarray:
    """Vectorised repair_bounds over row vectors."""
    X = np.array(X, dtype=float)
    lo, hi = b.lower, b.upper
    below = X < lo
    above = X > hi
    if not (below.any() or above.any()):
        return X
    if mode == "midpoint":
        X = np.where(below, (parents + lo) / 2.0, X)
        X = np.where(above, (parents + hi) / 2.0, X)
    elif mode == "clamp":
        X = np.clip(X, lo, hi)
    elif mode == "reflect":
        X = np.where(below, 2.0 * lo - X, X)
        X = np.where(above, 2.0 * hi - X, X)
        X = np.clip(X, lo, hi)
    else:
        raise ValueError(f"unknown repair mode {mode!r}")
    return X
