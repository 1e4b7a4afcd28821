"""Batched Bayesian optimization with the BEEBO acquisition function."""

from ._core import (
    AcquisitionConfig,
    BeeboError,
    ConfigError,
    EnergyVariant,
    ExperimentConfig,
    GpModel,
    Method,
    NumericalError,
    Problem,
    UnknownProblem,
    beebo_gradient,
    beebo_score,
    effective_points,
    export_plot_data,
    fit_hyperparameters,
    information_gain,
    list_problems,
    make_problem,
    optima_distances,
    qucb_score,
    run_experiment,
    run_spec,
    softmax_expectation,
    temperature_from_kappa,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
