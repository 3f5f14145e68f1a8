"""CMA-ES as the fourth main constituent.

Standard (mu/mu_w, lambda) covariance matrix adaptation with lambda tracking
the shared population size; the shared population itself is replaced by the
best NP of parents plus offspring, so the best fitness never worsens.
"""
from __future__ import annotations

import math

import numpy as np

from .core import Budget, Individual, Population, evaluate_rows


class CmaState:
    """Distribution state plus the lambda-dependent strategy constants."""

    def __init__(self, mean: np.ndarray, sigma: float, lam: int):
        self.mean = np.asarray(mean, dtype=float).copy()
        self.sigma = float(sigma)
        D = self.mean.size
        self.C = np.eye(D)
        self.pc = np.zeros(D)
        self.ps = np.zeros(D)
        self.iteration = 0
        self.derive(lam)

    def derive(self, lam: int) -> None:
        """(Re)compute weights and learning rates for a new offspring count."""
        D = self.mean.size
        self.lam = int(lam)
        self.mu = max(1, self.lam // 2)
        w = math.log(self.mu + 0.5) - np.log(np.arange(1, self.mu + 1))
        self.weights = w / w.sum()
        self.mu_eff = 1.0 / np.sum(self.weights**2)
        self.c_sigma = (self.mu_eff + 2.0) / (D + self.mu_eff + 5.0)
        self.d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((self.mu_eff - 1.0) / (D + 1.0)) - 1.0) + self.c_sigma
        self.c_c = (4.0 + self.mu_eff / D) / (D + 4.0 + 2.0 * self.mu_eff / D)
        self.c_1 = 2.0 / ((D + 1.3) ** 2 + self.mu_eff)
        self.c_mu = min(1.0 - self.c_1,
                        2.0 * (self.mu_eff - 2.0 + 1.0 / self.mu_eff) / ((D + 2.0) ** 2 + self.mu_eff))
        self.chi_n = math.sqrt(D) * (1.0 - 1.0 / (4.0 * D) + 1.0 / (21.0 * D * D))

    def decompose(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigendecomposition of C with positive-definiteness repair."""
        C = (self.C + self.C.T) / 2.0
        evals, B = np.linalg.eigh(C)
        floor = 1e-14 * max(evals[-1], 1e-300)
        if evals[0] < floor:
            evals = np.maximum(evals, floor)
            self.C = (B * evals) @ B.T
        return evals, B

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n offspring from N(mean, sigma^2 C)."""
        evals, B = self.decompose()
        Z = rng.standard_normal((n, self.mean.size))
        return self.mean + self.sigma * (Z @ (B * np.sqrt(evals)).T)

    def update(self, steps: np.ndarray, fitnesses: np.ndarray) -> None:
        """Adapt mean, paths, sigma and C from one full generation.

        steps[i] = (x_i - old_mean) / sigma for offspring i, in sampling order.
        """
        self.iteration += 1
        idx = np.argsort(fitnesses, kind="stable")[: self.mu]
        y_w = self.weights @ steps[idx]
        self.mean = self.mean + self.sigma * y_w

        evals, B = self.decompose()
        inv_sqrt = (B / np.sqrt(evals)) @ B.T
        self.ps = (1.0 - self.c_sigma) * self.ps + math.sqrt(
            self.c_sigma * (2.0 - self.c_sigma) * self.mu_eff) * (inv_sqrt @ y_w)
        ps_norm = float(np.linalg.norm(self.ps))
        denom = math.sqrt(1.0 - (1.0 - self.c_sigma) ** (2 * self.iteration))
        h_sigma = ps_norm / denom < (1.4 + 2.0 / (self.mean.size + 1.0)) * self.chi_n
        self.pc = (1.0 - self.c_c) * self.pc + (
            math.sqrt(self.c_c * (2.0 - self.c_c) * self.mu_eff) * y_w if h_sigma else 0.0)

        rank_mu = (self.weights[:, None] * steps[idx]).T @ steps[idx]
        delta_h = (1.0 - (1.0 if h_sigma else 0.0)) * self.c_c * (2.0 - self.c_c)
        self.C = ((1.0 - self.c_1 - self.c_mu) * self.C
                  + self.c_1 * (np.outer(self.pc, self.pc) + delta_h * self.C)
                  + self.c_mu * rank_mu)
        self.sigma *= math.exp(min(1.0, (self.c_sigma / self.d_sigma) * (ps_norm / self.chi_n - 1.0)))


class CmaesStepper:
    """MainConstituent wrapper around CmaState, elitist on the shared population."""

    name = "cmaes"
    resample_rounds = 10

    def __init__(self):
        self.state: CmaState | None = None

    def notify_shrink(self, kept: np.ndarray) -> None:
        pass  # lambda is re-derived from NP on the next step

    def _init_state(self, pop: Population) -> None:
        X = pop.matrix()
        order = pop.order_best_first()
        mu = max(1, pop.NP // 2)
        w = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        w /= w.sum()
        mean = w @ X[order[:mu]]
        sigma = float(np.mean(np.std(X, axis=0)))
        self.state = CmaState(mean, max(sigma, 1e-12), pop.NP)

    def step(self, pop: Population, problem, budget: Budget,
             rng: np.random.Generator, hook=None) -> int:
        if self.state is None:
            self._init_state(pop)
        st = self.state
        if st.lam != pop.NP:
            st.derive(pop.NP)
        lam = st.lam
        lo, hi = problem.bounds.lower, problem.bounds.upper

        X = st.sample(rng, lam)
        for _ in range(self.resample_rounds):
            bad = np.any((X < lo) | (X > hi), axis=1)
            if not bad.any():
                break
            X[bad] = st.sample(rng, int(bad.sum()))
        X = np.clip(X, lo, hi)

        values, k = evaluate_rows(problem, X, budget)
        if k == 0:
            return 0
        for i in range(k):
            pop.consider_best(X[i], float(values[i]))

        if k == lam:
            steps = (X - st.mean) / st.sigma
            st.update(steps, values[:lam])

        # NP best of parents and evaluated offspring; incumbents win ties
        old_sorted = np.sort(pop.fitnesses())
        cand_x = [m.x for m in pop.members] + [X[i] for i in range(k)]
        cand_f = np.concatenate([pop.fitnesses(), values[:k]])
        origin = np.concatenate([np.zeros(pop.NP), np.ones(k)])
        sel = np.lexsort((origin, cand_f))[: pop.NP]
        pop.members = [Individual(np.array(cand_x[i], dtype=float), float(cand_f[i]), pop.generation)
                       for i in sel]
        new_sorted = np.sort(pop.fitnesses())
        return int(np.sum(new_sorted < old_sorted))
