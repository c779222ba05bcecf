"""Experiment orchestration: configs, ladders, oracles, reports and the CLI."""
from .experiments import (
    ConvergenceTable,
    ExperimentConfig,
    richardson,
    run_blowup_compare,
    run_convergence,
    run_disk_oracle,
    run_gauge_equivalence,
    run_hardy_suite,
    run_sign_experiment,
)
from .oracle import bessel_zeros, disk_eigenvalue
from .report import Criterion, emit_report

bessel_oracle = bessel_zeros

__all__ = [
    "ConvergenceTable",
    "Criterion",
    "ExperimentConfig",
    "bessel_oracle",
    "bessel_zeros",
    "disk_eigenvalue",
    "emit_report",
    "richardson",
    "run_blowup_compare",
    "run_convergence",
    "run_disk_oracle",
    "run_gauge_equivalence",
    "run_hardy_suite",
    "run_sign_experiment",
]
