import numpy as np
import pytest

from ea4eigcs.benchmarks import plain_function
from ea4eigcs.core import Budget, Individual, Population, rng_stream
from ea4eigcs.devariants import (CobideStepper, EigenHook, IdebdStepper,
                                 JsoStepper, binomial_crossover,
                                 refresh_eigen_hook)

STEPPERS = [JsoStepper, CobideStepper, IdebdStepper]


def make_pop(xs, problem):
    members = [Individual(np.asarray(x, dtype=float), problem(np.asarray(x, dtype=float)), 0)
               for x in xs]
    return Population(members)


def random_pop(problem, NP, seed=0, span=50.0):
    xs = np.random.default_rng(seed).uniform(-span, span, (NP, problem.D))
    return make_pop(xs, problem)


@pytest.mark.parametrize("cls", STEPPERS)
class TestStepperContract:
    def test_identical_population_at_optimum(self, cls):
        problem = plain_function("sphere", 3)
        pop = make_pop([np.zeros(3)] * 8, problem)
        budget = Budget(10_000)
        improved = cls().step(pop, problem, budget, rng_stream(1, cls.name))
        assert improved == 0
        assert all(np.array_equal(m.x, np.zeros(3)) for m in pop.members)

    def test_best_non_increasing_one_step(self, cls):
        problem = plain_function("sphere", 2)
        pop = random_pop(problem, 20, seed=1)
        best_before = pop.best.fitness
        cls().step(pop, problem, Budget(10_000), rng_stream(1, cls.name))
        assert pop.best.fitness <= best_before

    def test_selection_monotone_per_member(self, cls):
        problem = plain_function("rastrigin", 5)
        pop = random_pop(problem, 15, seed=2)
        before = pop.fitnesses().copy()
        cls().step(pop, problem, Budget(10_000), rng_stream(3, cls.name))
        assert np.all(pop.fitnesses() <= before)

    def test_success_count_matches_strict_improvements(self, cls):
        problem = plain_function("griewank", 4)
        pop = random_pop(problem, 25, seed=3)
        before = pop.fitnesses().copy()
        improved = cls().step(pop, problem, Budget(10_000), rng_stream(4, cls.name))
        assert improved == int(np.sum(pop.fitnesses() < before))

    def test_fes_equals_trials_evaluated(self, cls):
        problem = plain_function("sphere", 3)
        pop = random_pop(problem, 12, seed=4)
        budget = Budget(10_000)
        cls().step(pop, problem, budget, rng_stream(5, cls.name))
        assert budget.FES == 12

    def test_partial_generation_on_budget_cap(self, cls):
        problem = plain_function("sphere", 3)
        pop = random_pop(problem, 12, seed=5)
        budget = Budget(5)
        before = [m.x.copy() for m in pop.members]
        cls().step(pop, problem, budget, rng_stream(6, cls.name))
        assert budget.FES == 5
        # members beyond the budget cap are untouched
        for i in range(5, 12):
            assert np.array_equal(pop.members[i].x, before[i])

    def test_feasibility_of_all_members(self, cls):
        problem = plain_function("ackley", 4)
        pop = random_pop(problem, 20, seed=6, span=99.0)
        for _ in range(5):
            cls().step(pop, problem, Budget(10_000), rng_stream(7, cls.name))
        for m in pop.members:
            assert problem.bounds.contains(m.x)


class TestJsoMemory:
    def test_weighted_lehmer_update_reexecution(self):
        problem = plain_function("rastrigin", 5)
        pop = random_pop(problem, 30, seed=7)
        stepper = JsoStepper()
        rng = rng_stream(8, "jso")
        budget = Budget(100_000)
        for _ in range(20):
            stepper.step(pop, problem, budget, rng)
            records = stepper.last_success_records
            if not records:
                continue
            m_f_before, m_cr_before, k_before = stepper.last_memory_before
            sf = np.array([r[0] for r in records])
            scr = np.array([r[1] for r in records])
            df = np.array([r[2] for r in records])
            w = df / df.sum()
            expected_f = (m_f_before[k_before] + np.sum(w * sf**2) / np.sum(w * sf)) / 2.0
            assert stepper.m_f[k_before] == pytest.approx(expected_f, rel=1e-12)
            if m_cr_before[k_before] < 0 or scr.max() <= 0:
                assert stepper.m_cr[k_before] == -1.0
            else:
                expected_cr = (m_cr_before[k_before]
                               + np.sum(w * scr**2) / np.sum(w * scr)) / 2.0
                assert stepper.m_cr[k_before] == pytest.approx(expected_cr, rel=1e-12)

    def test_terminal_slot_never_written(self):
        problem = plain_function("sphere", 4)
        pop = random_pop(problem, 20, seed=8)
        stepper = JsoStepper()
        rng = rng_stream(9, "jso")
        budget = Budget(100_000)
        for _ in range(30):
            stepper.step(pop, problem, budget, rng)
        assert stepper.m_f[-1] == 0.9 and stepper.m_cr[-1] == 0.9

    def test_sampled_parameters_in_range(self):
        problem = plain_function("sphere", 4)
        pop = random_pop(problem, 40, seed=9)
        stepper = JsoStepper()
        budget = Budget(100_000)
        for _ in range(10):
            stepper.step(pop, problem, budget, rng_stream(10, "jso"))
            for f, cr, _ in stepper.last_success_records:
                assert 0.0 < f <= 1.0
                assert 0.0 <= cr <= 1.0


class TestCobideParameters:
    def test_parameters_kept_exactly_on_success(self):
        problem = plain_function("rastrigin", 4)
        pop = random_pop(problem, 20, seed=10)
        stepper = CobideStepper()
        rng = rng_stream(11, "cobide")
        budget = Budget(100_000)
        stepper.step(pop, problem, budget, rng)
        f1, cr1, keep1 = stepper.F.copy(), stepper.CR.copy(), stepper.keep.copy()
        assert keep1.any(), "expected at least one success on this seed"
        stepper.step(pop, problem, budget, rng)
        # winners were not resampled at the start of generation 2
        assert np.array_equal(stepper.F[keep1], f1[keep1])
        assert np.array_equal(stepper.CR[keep1], cr1[keep1])
        # and a cloned rng reproduces generation 1 exactly
        pop2 = random_pop(problem, 20, seed=10)
        st2 = CobideStepper()
        st2.step(pop2, problem, Budget(100_000), rng_stream(11, "cobide"))
        assert np.array_equal(st2.F, f1) and np.array_equal(st2.CR, cr1)

    def test_bimodal_ranges(self):
        problem = plain_function("sphere", 3)
        pop = random_pop(problem, 50, seed=11)
        stepper = CobideStepper()
        stepper.step(pop, problem, Budget(1000), rng_stream(12, "cobide"))
        assert np.all(stepper.F > 0) and np.all(stepper.F <= 1.0)
        assert np.all(stepper.CR >= 0) and np.all(stepper.CR <= 1.0)

    def test_notify_shrink_realigns_state(self):
        problem = plain_function("sphere", 3)
        pop = random_pop(problem, 10, seed=12)
        stepper = CobideStepper()
        stepper.step(pop, problem, Budget(1000), rng_stream(13, "cobide"))
        kept = np.array([0, 2, 4, 6])
        f_expected = stepper.F[kept].copy()
        stepper.notify_shrink(kept)
        assert np.array_equal(stepper.F, f_expected)
        assert len(stepper.CR) == 4 and len(stepper.keep) == 4


class TestIdebdParameters:
    def test_rank_based_sampling_reexecution(self):
        problem = plain_function("griewank", 4)
        pop = random_pop(problem, 16, seed=13)
        stepper = IdebdStepper()
        rng = rng_stream(14, "idebd")
        stepper.step(pop, problem, Budget(1000), rng)
        # independently re-derive the first two vectorised draws from a clone
        clone = rng_stream(14, "idebd")
        fits = np.array([problem(x) for x in
                         np.random.default_rng(13).uniform(-50, 50, (16, 4))])
        order = np.lexsort((np.arange(16), fits))
        rank = np.empty(16, dtype=int)
        rank[order] = np.arange(1, 17)
        mu = rank / 16
        expected_F = np.clip(clone.normal(mu, 0.1), 0.05, 1.0)
        expected_CR = np.clip(clone.normal(mu, 0.1), 0.0, 1.0)
        assert np.array_equal(stepper.last_F, expected_F)
        assert np.array_equal(stepper.last_CR, expected_CR)


class TestEigenHook:
    def test_leading_eigenvector_along_axis(self):
        # better half spans all axes but varies overwhelmingly along axis 1,
        # with exactly diagonal sample covariance
        half = [np.array([5.0, 0.0, 0.0]), np.array([-5.0, 0.0, 0.0]),
                np.array([0.0, 0.1, 0.0]), np.array([0.0, -0.1, 0.0]),
                np.array([0.0, 0.0, 0.05]), np.array([0.0, 0.0, -0.05])]
        rest = [np.full(3, 20.0 + i) for i in range(6)]
        members = [Individual(x, float(i), 0) for i, x in enumerate(half + rest)]
        pop = Population(members)
        hook = refresh_eigen_hook(pop)
        assert not hook.is_identity
        lead = hook.basis[:, -1]  # eigh sorts eigenvalues ascending
        angle = np.arccos(min(1.0, abs(float(lead @ np.array([1.0, 0.0, 0.0])))))
        assert angle < 1e-6

    def test_small_population_identity(self):
        problem = plain_function("sphere", 3)
        pop = make_pop([np.zeros(3), np.ones(3)], problem)
        hook = refresh_eigen_hook(pop)
        assert np.array_equal(hook.basis, np.eye(3))

    def test_collapsed_population_identity(self):
        problem = plain_function("sphere", 3)
        pop = make_pop([np.ones(3)] * 10, problem)
        hook = refresh_eigen_hook(pop)
        assert np.array_equal(hook.basis, np.eye(3))

    def test_basis_orthonormal(self):
        problem = plain_function("sphere", 5)
        pop = random_pop(problem, 20, seed=14)
        hook = refresh_eigen_hook(pop)
        assert np.max(np.abs(hook.basis.T @ hook.basis - np.eye(5))) < 1e-8
        assert np.allclose(hook.covariance, hook.covariance.T)

    def test_cr_one_eigen_trial_equals_mutant_exactly(self):
        rng = rng_stream(15, "jso")
        parents = rng.random((6, 4)) * 10
        mutants = rng.random((6, 4)) * 10
        basis = np.linalg.qr(rng.standard_normal((4, 4)))[0]
        hook = EigenHook(np.eye(4), basis, activation=1.0)
        trials = binomial_crossover(parents, mutants, np.ones(6), rng, hook)
        assert np.array_equal(trials, mutants)

    def test_eigen_rotation_roundtrip_close(self):
        rng = rng_stream(16, "cobide")
        parents = rng.random((8, 5))
        mutants = parents + 0.5
        basis = np.linalg.qr(rng.standard_normal((5, 5)))[0]
        hook = EigenHook(np.eye(5), basis, activation=1.0)
        trials = binomial_crossover(parents, mutants, np.full(8, 0.5), rng, hook)
        # each component lies between (rotated) parent and mutant mixes; sanity:
        assert trials.shape == parents.shape
        assert np.all(np.isfinite(trials))
