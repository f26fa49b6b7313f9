"""Order selection for partially nested model families by penalised likelihood."""

__version__ = "0.1.0"

from .bekk import BekkOrder, BekkParams, NonStationaryError, PathSample, log_likelihood, score, simulate
from .diagnostics import (DiagnosticTrace, hessian_trace, overfit_gap_trace, score_lil_trace,
                          underfit_gap_trace)
from .estimator import BekkFamily, FitOptions, FitResult, fit, profile_fit_sequence
from .experiment import ConfigError, ExperimentConfig, emit_report, run_experiment
from .markov import MarkovFamily, MarkovSpec, markov_fit, markov_simulate
from .nested import (FitOutcome, NestedModelFamily, PenaltyRule, Relation, SelectionError,
                     SelectionReport, candidates_up_to, compare, edc_score, select_order)
