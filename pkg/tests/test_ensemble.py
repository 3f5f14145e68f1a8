import numpy as np
import pytest

from ea4eigcs.benchmarks import make_suite, plain_function
from ea4eigcs.ensemble import (EnsembleConfig, checkpoint_grid,
                               choose_constituent, lpsr_target,
                               roulette_probabilities, run)


class FixedUniform:
    def __init__(self, u):
        self.u = u

    def random(self):
        return self.u


class TestRouletteProbabilities:
    def test_all_zero_with_n0(self):
        p = roulette_probabilities([0, 0, 0, 0], 2)
        assert np.allclose(p, [0.25, 0.25, 0.25, 0.25])

    def test_hand_example(self):
        p = roulette_probabilities([3, 1, 0, 0], 2)
        assert np.allclose(p, [5 / 12, 3 / 12, 2 / 12, 2 / 12])

    def test_single_winner(self):
        p = roulette_probabilities([10, 0, 0, 0], 0)
        assert np.allclose(p, [1, 0, 0, 0])

    def test_degenerate_uniform_fallback(self):
        p = roulette_probabilities([0, 0, 0, 0], 0)
        assert np.allclose(p, [0.25, 0.25, 0.25, 0.25])

    def test_simplex_property(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = rng.integers(0, 50, size=4)
            p = roulette_probabilities(n, int(rng.integers(0, 5)))
            assert p.sum() == pytest.approx(1.0)
            assert np.all(p >= 0)


class TestChooseConstituent:
    def test_certain_choice(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            assert choose_constituent([1.0, 0.0, 0.0, 0.0], rng) == 0

    def test_inverse_cdf_hand_example(self):
        # u=0.5 with CDF (0.2, 0.4, 0.7, 1.0) selects the third constituent
        assert choose_constituent([0.2, 0.2, 0.3, 0.3], FixedUniform(0.5)) == 2

    def test_uniform_draw_frequencies(self):
        rng = np.random.default_rng(2)
        counts = np.zeros(4, dtype=int)
        for _ in range(40_000):
            counts[choose_constituent([0.25] * 4, rng)] += 1
        assert np.all(np.abs(counts - 10_000) <= 500)


class TestLpsrTarget:
    def test_endpoints(self):
        assert lpsr_target(0, 1000, 100, 10) == 100
        assert lpsr_target(1000, 1000, 100, 10) == 10

    def test_midpoint(self):
        assert lpsr_target(500_000, 1_000_000, 100, 10) == 55

    def test_clamped(self):
        assert lpsr_target(2000, 1000, 100, 10) == 10

    def test_monotone_in_fes(self):
        vals = [lpsr_target(f, 10_000, 100, 10) for f in range(0, 10_001, 97)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))


class TestCheckpointGrid:
    def test_log_spacing_formula(self):
        grid = checkpoint_grid(100, 1_000_000)
        expected = sorted(set(int(round(v)) for v in np.geomspace(100, 1_000_000, 12)[:11]))
        assert grid == expected
        assert len(grid) == 11
        assert grid[0] == 100 and grid[-1] < 1_000_000
        ratios = np.diff(np.log(np.geomspace(100, 1_000_000, 12)[:11]))
        assert np.allclose(ratios, ratios[0])


class TestEnsembleConfig:
    def test_defaults_match_published_setting(self):
        cfg = EnsembleConfig()
        assert cfg.NPmax == 100 and cfg.NPmin == 10
        assert cfg.T_gen == 3
        assert cfg.R_c == pytest.approx(1 / 6)
        assert cfg.R_s == pytest.approx(0.5)
        assert cfg.n0 == 2

    def test_validation(self):
        with pytest.raises(ValueError):
            EnsembleConfig(NPmin=3)
        with pytest.raises(ValueError):
            EnsembleConfig(R_c=1.5)
        with pytest.raises(ValueError):
            EnsembleConfig(T_gen=0)

    def test_file_round_trip(self, tmp_path):
        cfg = EnsembleConfig(MaxFES=5000, seed=9, R_c=0.25, enable_sparrow=False,
                             de_repair="reflect")
        path = tmp_path / "cfg.txt"
        cfg.to_file(path)
        assert EnsembleConfig.from_file(path) == cfg

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("NPmax = 50\nturbo = yes\n")
        with pytest.raises(ValueError, match="unknown config key"):
            EnsembleConfig.from_file(path)


class CountingObjective:
    def __init__(self, problem):
        self.problem = problem
        self.bounds = problem.bounds
        self.f_star = problem.f_star
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.problem(x)


class TestRun:
    def test_determinism_bitwise(self):
        problem = plain_function("rastrigin", 5)
        cfg = EnsembleConfig(MaxFES=5000, seed=3, target_error=0.0)
        a = run(cfg, problem)
        b = run(cfg, problem)
        assert a.checkpoints == b.checkpoints
        assert a.best_f == b.best_f
        assert np.array_equal(a.best_x, b.best_x)

    def test_reduction_equivalence_quick(self):
        problem = plain_function("rastrigin", 5)
        base = EnsembleConfig(MaxFES=4000, seed=5,
                              enable_crisscross=False, enable_sparrow=False)
        a = run(base, problem)
        b = run(base.replace(), problem)
        assert a.checkpoints == b.checkpoints

    def test_initialization_only(self):
        problem = plain_function("sphere", 4)
        cfg = EnsembleConfig(MaxFES=100, NPmax=100, seed=1, target_error=0.0)
        res = run(cfg, problem)
        assert res.FES == 100
        assert res.generations == 0
        assert sum(res.usage.values()) == 0

    def test_budget_exactness_with_counting_wrapper(self):
        problem = CountingObjective(plain_function("griewank", 4))
        cfg = EnsembleConfig(MaxFES=3000, seed=7, target_error=0.0)
        res = run(cfg, problem)
        assert res.evaluations == problem.calls
        assert res.FES == problem.calls   # default accounting counts real evals
        assert res.FES <= cfg.MaxFES

    def test_strict_accounting_mode_charges_pseudocode_amounts(self):
        problem = CountingObjective(plain_function("griewank", 4))
        cfg = EnsembleConfig(MaxFES=3000, seed=7, target_error=0.0,
                             strict_fes_accounting=True)
        res = run(cfg, problem)
        assert res.evaluations == problem.calls
        assert res.FES > res.evaluations   # sparrow lines charge NP per generation

    def test_trace_monotone_and_12_points(self):
        problem = plain_function("rastrigin", 5)
        cfg = EnsembleConfig(MaxFES=20_000, seed=2, target_error=0.0)
        res = run(cfg, problem)
        fes = [c[0] for c in res.checkpoints]
        errs = [c[1] for c in res.checkpoints]
        assert len(res.checkpoints) == 12
        assert all(b > a for a, b in zip(fes, fes[1:]))
        assert all(b <= a for a, b in zip(errs, errs[1:]))
        assert fes[-1] == 20_000

    def test_early_stop_on_target(self):
        problem = plain_function("sphere", 5)
        cfg = EnsembleConfig(MaxFES=200_000, seed=4, target_error=1e-8)
        res = run(cfg, problem)
        assert res.best_error <= 1e-8
        assert res.FES < 200_000
        assert len(res.checkpoints) == 12   # padded to the full grid

    def test_usage_consistency_and_np_monotone(self):
        problem = plain_function("ackley", 5)
        cfg = EnsembleConfig(MaxFES=8000, seed=6, target_error=0.0, instrument=True)
        res = run(cfg, problem)
        assert sum(res.usage.values()) == res.generations
        nps = [rec.NP for rec in res.gen_log]
        assert all(b <= a for a, b in zip(nps, nps[1:]))
        assert nps[-1] >= cfg.NPmin

    def test_trigger_semantics_from_instrumented_log(self):
        problem = plain_function("rastrigin", 5)
        cfg = EnsembleConfig(MaxFES=10_000, seed=8, target_error=0.0, instrument=True)
        res = run(cfg, problem)
        t = 0
        fired_any = False
        for rec in res.gen_log:
            t = 0 if rec.improved_at_check else t + 1
            expect_fire = t >= cfg.T_gen
            assert rec.crisscross_fired == expect_fire
            if expect_fire:
                t = 0
                fired_any = True
                assert rec.t_after == 0
            assert rec.t_after == t
            assert 0 <= rec.t_after <= cfg.T_gen
        assert fired_any

    def test_disabled_secondary_spends_nothing_on_them(self):
        problem = plain_function("rastrigin", 5)
        cfg = EnsembleConfig(MaxFES=6000, seed=9, target_error=0.0, instrument=True,
                             enable_crisscross=False, enable_sparrow=False)
        res = run(cfg, problem)
        assert all(rec.cc_evals == 0 and rec.sparrow_evals == 0 for rec in res.gen_log)

    def test_elitism_across_whole_run(self):
        problem = plain_function("griewank", 5)
        cfg = EnsembleConfig(MaxFES=10_000, seed=10, target_error=0.0, instrument=True)
        res = run(cfg, problem)
        errs = [rec.best_error for rec in res.gen_log]
        assert all(b <= a for a, b in zip(errs, errs[1:]))

    def test_inferior_only_false_still_safe(self):
        problem = plain_function("rastrigin", 5)
        cfg = EnsembleConfig(MaxFES=6000, seed=11, target_error=0.0, inferior_only=False,
                             instrument=True)
        res = run(cfg, problem)
        errs = [rec.best_error for rec in res.gen_log]
        assert all(b <= a for a, b in zip(errs, errs[1:]))

    def test_suite_function_runs(self):
        suite = make_suite(10, 7)
        cfg = EnsembleConfig(MaxFES=5000, seed=12)
        res = run(cfg, suite.by_name("hybrid1"))
        assert np.isfinite(res.best_error)
        assert res.best_error >= 0.0