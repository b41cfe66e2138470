"""Weighted lp-norm design of unimodular MIMO radar waveform sets."""

__version__ = "0.1.0"

from .correlation import correlation_array, cross_correlation, row_correlations
from .driver import RunTrace, SolverConfig, default_schedule, make_weights, run_p_schedule, run_stage, stopping_check
from .entry import EntryRegime, entry_update
from .estimator import WaveformDesigner
from .metrics import isl, islr_db, islr_lower_bound_db, lp_objective, metrics_report, psl, sparsity, welch_psl_bound
from .vector import LineSearchParams, backtracking_line_search, gradient_f, gradient_g, vector_update
from .waveform import PhaseConstraint, WaveformSet, WeightVector, random_mpsk_init

__all__ = [
    "EntryRegime",
    "LineSearchParams",
    "PhaseConstraint",
    "RunTrace",
    "SolverConfig",
    "WaveformDesigner",
    "WaveformSet",
    "WeightVector",
    "backtracking_line_search",
    "correlation_array",
    "cross_correlation",
    "default_schedule",
    "entry_update",
    "gradient_f",
    "gradient_g",
    "isl",
    "islr_db",
    "islr_lower_bound_db",
    "lp_objective",
    "make_weights",
    "metrics_report",
    "psl",
    "random_mpsk_init",
    "row_correlations",
    "run_p_schedule",
    "run_stage",
    "sparsity",
    "stopping_check",
    "vector_update",
    "welch_psl_bound",
]
