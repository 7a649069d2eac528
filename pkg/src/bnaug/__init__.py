"""Bayesian network structure learning from incomplete categorical data by optimistic augmentation."""

from .augment import (
    AugmentedProblem,
    AugmentedSolution,
    DecodeError,
    GadgetVariable,
    build_augmented_problem,
    choose_lambda,
    decode_solution,
    solve_augmented,
)
from .dataset import (
    Completion,
    DataError,
    Dataset,
    MissingnessSpec,
    VariableSchema,
    apply_completion,
    enumerate_neighborhood,
    hamming_distance,
    load_csv,
    simulate_missing,
    write_csv,
)
from .errors import BudgetExceeded
from .learner import ApproxConfig, Solution, learn_approx, learn_exact, total_score, verify_t_local
from .scoring import (
    CandidateList,
    FamilyView,
    LocalScorer,
    ScoredCandidate,
    ScoringConfig,
    bdeu_from_counts,
    bdeu_local_score,
    build_candidate_list,
    enumerate_family_completions,
    family_view,
    local_score_with_completion,
)
from .structopt import Dag, ScoreTable, exact_dag, exact_joint, filter_candidates

__version__ = "0.1.0"
