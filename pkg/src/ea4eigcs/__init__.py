"""Bound-constrained single-objective optimizer ensemble and experiment harness."""

from .benchmarks import BenchmarkFunction, SuiteManifest, make_suite, plain_function
from .core import Bounds, Budget, Individual, Population
from .ensemble import (EnsembleConfig, RunResult, choose_constituent,
                       lpsr_target, roulette_probabilities, run)
from .harness import ResultTable, RunTrace, run_experiment
from .stats import friedman_mean_ranks, wilcoxon_rank_sum

__all__ = [
    "BenchmarkFunction", "SuiteManifest", "make_suite", "plain_function",
    "Bounds", "Budget", "Individual", "Population",
    "EnsembleConfig", "RunResult", "choose_constituent", "lpsr_target",
    "roulette_probabilities", "run",
    "ResultTable", "RunTrace", "run_experiment",
    "friedman_mean_ranks", "wilcoxon_rank_sum",
]

__version__ = "0.1.0"
