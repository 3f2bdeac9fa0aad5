"""Monte Carlo experiments for the Vortex model and its ordered and indented variants."""

from .config import (KINDS, PRESETS, SCHEMA, ConfigError, ExperimentConfig, build_config, load_config,
                     preset, vector_from_spec)
from .drivers import (RUNNERS, concentration_check, run_cfree_experiment, run_experiment,
                      run_fluctuation_experiment, run_indented_experiment, run_infinitesimal_experiment,
                      run_ordered_experiment)
from .program import Evaluator, Program, compile_expression
from .report import Check, Report, Row, load_summary, render_summary
from .stats import (ExpansionFit, FitDegeneracyError, MomentEstimate, chunk_rng, estimate,
                    estimate_from_values, fit_expansion, loglog_slope, run_trials, zscore)

__all__ = [
    "KINDS", "PRESETS", "SCHEMA", "ConfigError", "ExperimentConfig", "build_config", "load_config", "preset",
    "vector_from_spec", "RUNNERS", "concentration_check", "run_cfree_experiment", "run_experiment",
    "run_fluctuation_experiment", "run_indented_experiment", "run_infinitesimal_experiment",
    "run_ordered_experiment", "Evaluator", "Program", "compile_expression", "Check", "Report", "Row",
    "load_summary", "render_summary", "ExpansionFit", "FitDegeneracyError", "MomentEstimate", "chunk_rng",
    "estimate", "estimate_from_values", "fit_expansion", "loglog_slope", "run_trials", "zscore",
]
