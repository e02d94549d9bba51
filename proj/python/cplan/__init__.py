"""Longitudinal behavior and trajectory planning for intersections."""

from ._core import (
    IdmParams,
    ScenarioConfig,
    ScenarioError,
    SepticSegment,
    cj_step,
    fit_septic,
    idm_acceleration,
    idm_desired_gap,
    load_scenario,
    load_scenario_file,
    plan_behavior,
    simulate_csv,
    simulate_json,
    simulate_summary,
    speed_limit,
)

__version__ = "0.1.0"

__all__ = [
    "IdmParams",
    "ScenarioConfig",
    "ScenarioError",
    "SepticSegment",
    "cj_step",
    "fit_septic",
    "idm_acceleration",
    "idm_desired_gap",
    "load_scenario",
    "load_scenario_file",
    "plan_behavior",
    "simulate_csv",
    "simulate_json",
    "simulate_summary",
    "speed_limit",
]
