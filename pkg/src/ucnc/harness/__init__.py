"""Scenario presets, simulation runs, sweeps and the command line."""

from .presets import PRESETS, get_preset, mixed_18
from .runner import (
    CSV_COLUMNS,
    Policy,
    RunResult,
    baseline_nearest,
    growth_slope,
    make_policy,
    multicast_as_unicast,
    rows_to_csv,
    run,
    simulate,
    sweep,
)
from .scenario import POLICIES, Scenario, ScenarioError, dump_scenario, load_scenario

__all__ = [
    "CSV_COLUMNS", "POLICIES", "PRESETS", "Policy", "RunResult", "Scenario", "ScenarioError",
    "baseline_nearest", "dump_scenario", "get_preset", "growth_slope", "load_scenario",
    "make_policy", "mixed_18", "multicast_as_unicast", "rows_to_csv", "run", "simulate", "sweep",
]
