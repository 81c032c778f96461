"""Evolutionary algorithms for the chance-constrained knapsack problem."""
from .bounds import BoundMethod, violation_bound
from .ea import RunConfig, RunResult, best_feasible, mutate, run, run_gsemo, run_one_plus_one
from .fitness import mo_dominates, mo_fitness, so_compare, so_fitness
from .instance import (
    CCInstance,
    DetInstance,
    Deterministic,
    Normal,
    UniformAdditive,
    UniformRelative,
    adapt_instance,
    dp_optimum,
    generate_instance,
    parse_instance,
    profit,
    serialize_instance,
    weight_stats,
)

__version__ = "0.1.0"
