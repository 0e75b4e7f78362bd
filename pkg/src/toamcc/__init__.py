"""Robust TOA source localisation by maximum correntropy on squared ranges."""

__version__ = "0.1.0"

from ._accel import BACKEND
from .gtrs import (
    BracketError,
    DegenerateGeometryError,
    GtrsError,
    GtrsSolution,
    SrSystem,
    assemble_sr_system,
    max_generalized_eigenvalue,
    psi,
    solve_gtrs,
    y_hat,
)
from .srmcc import (
    INFINITE_SIGMA,
    LocalizationResult,
    SrMccOptions,
    augmented_cost,
    correntropy_objective,
    silverman_kernel,
    sr_ls_localize,
    sr_mcc_localize,
    update_auxiliary,
)
from .scenario import RangeSet, Scenario, ScenarioParams, make_trial, sample_scenario, synthesize_ranges
from .evaluation import ResultRow, ResultTable, SweepConfig, crlb_rmse, rmse, run_sweep, run_trials
