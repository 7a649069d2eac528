"""Experiment harness: reference networks, score files, metrics and the CLI."""

from .experiment import ExperimentReport, RunRecord, mode_imputer, run_experiment
from .metrics import imputation_accuracy, paired_t_test
from .network import NetworkError, NetworkSpec, NetworkVariable, format_network, load_network, parse_network, sample_network
from .scorefile import ScoreFileError, export_scores, format_scores, import_scores, parse_scores
