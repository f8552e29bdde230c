"""Experiment orchestration: scenarios, the two backends and derived analyses."""
from .analytic import run_analytic
from .experiments import (
    band_comparison,
    hom_dip_scan,
    hom_visibility,
    entanglement_visibility,
    sweep,
    target_loss_tolerance,
    teleportation_experiment,
)
from .scenario import (
    LinkModel,
    ResultRecord,
    RunSettings,
    Scenario,
    ScenarioError,
    SweepSpec,
    get_parameter,
    ideal_scenario,
    paper_scenario,
    with_parameter,
)


def run_monte_carlo(s, n_slots=None, seed=None, **kwargs):
    from .montecarlo import run_monte_carlo as _run

    return _run(s, n_slots, seed, **kwargs)


def calibrate(*args, **kwargs):
    from .calibration import calibrate as _calibrate

    return _calibrate(*args, **kwargs)
