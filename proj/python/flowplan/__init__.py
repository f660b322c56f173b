"""Multi-objective semi-Lagrangian path planning in flow fields."""

from ._flowplan import (
    ConfigError,
    IoError,
    Planner,
    builtin_scenarios,
    crowding_distance,
    fast_non_dominated_sort,
    harmonic,
    harmonic_convex,
    harmonic_inverse,
    harmonic_shift,
    kruzkov,
    kruzkov_inverse,
    log_spaced_alphas,
    pareto_filter,
    scenario_json,
    set_threads,
)

__all__ = [
    "ConfigError",
    "IoError",
    "Planner",
    "builtin_scenarios",
    "crowding_distance",
    "fast_non_dominated_sort",
    "harmonic",
    "harmonic_convex",
    "harmonic_inverse",
    "harmonic_shift",
    "kruzkov",
    "kruzkov_inverse",
    "log_spaced_alphas",
    "pareto_filter",
    "scenario_json",
    "set_threads",
]
