"""Exact and hill-climbing learners for structure plus completion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Completion, Dataset, apply_completion, neighborhood_array
from .scoring import LocalScorer, ScoringConfig, bdeu_local_score, build_candidate_list
from .structopt import (
    DEFAULT_COMPLETION_BUDGET,
    DEFAULT_MAX_VARS,
    Dag,
    best_totals,
    exact_dag,
    exact_joint,
    filter_candidates,
    _first_best,
)

VERIFY_TOL = 1e-9


@dataclass(frozen=True)
class ApproxConfig:
    """Settings for :func:`learn_approx`.

    ``init`` is ``"mode"`` (column modes), ``"random"`` (uniform), or a
    :class:`Completion` to start from.  The first restart uses ``init``;
    every further restart starts from a uniform random completion.
    """

    t: int = 1
    init: str | Completion = "mode"
    restarts: int = 1
    max_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.t < 1:
            raise ValueError(f"t must be >= 1, got {self.t}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if isinstance(self.init, str) and self.init not in ("mode", "random"):
            raise ValueError(f"unknown init strategy {self.init!r}")


@dataclass(frozen=True)
class Solution:
    dag: Dag
    z: Completion
    total: float
    iterations: int
    converged: bool
    trace: tuple[float, ...] = field(default=(), compare=False)


def total_score(data: Dataset, dag: Dag, z: Completion, cfg: ScoringConfig) -> float:
    """Score ``(dag, z)`` from scratch on the completed data."""
    full = apply_completion(data, z)
    return math.fsum(bdeu_local_score(full, i, ps, cfg.ess) for i, ps in enumerate(dag.parents))


def learn_exact(
    data: Dataset,
    cfg: ScoringConfig = ScoringConfig(),
    budget: int = DEFAULT_COMPLETION_BUDGET,
    max_vars: int = DEFAULT_MAX_VARS,
) -> Solution:
    """Globally optimal DAG and completion, searching every completion."""
    dag, z, total = exact_joint(data, None, cfg, budget=budget, max_vars=max_vars)
    return Solution(dag, z, total, iterations=1, converged=True, trace=(total,))


def _initial(data: Dataset, acfg: ApproxConfig, restart: int, rng: np.random.Generator) -> Completion:
    init = acfg.init if restart == 0 else "random"
    if isinstance(init, Completion):
        if init.radices != data.missing_radices:
            raise ValueError("initial completion does not match the dataset's missing cells")
        return init
    if init == "mode":
        modes = data.column_modes()
        return data.completion([modes[i] for _, i in data.missing_index])
    return data.completion([int(rng.integers(r)) for r in data.missing_radices])


def learn_approx(
    data: Dataset,
    cfg: ScoringConfig = ScoringConfig(),
    acfg: ApproxConfig = ApproxConfig(),
    max_vars: int = DEFAULT_MAX_VARS,
) -> Solution:
    """Hill-climb over completions, moving to the best one within Hamming radius ``t``.

    Each iteration scores only the family completions induced by the
    current neighbourhood, finds the optimal DAG for every neighbour and
    moves to the best; ties keep the current completion.  Stops when the
    completion no longer changes.  The best restart is returned (ties go
    to the earliest).
    """
    rng = np.random.default_rng(acfg.seed)
    scorer = LocalScorer(data, cfg.ess)
    best: Solution | None = None
    for restart in range(acfg.restarts):
        z = _initial(data, acfg, restart, rng)
        trace = []
        converged = False
        iters = 0
        while iters < acfg.max_iters:
            iters += 1
            rows = neighborhood_array(z, acfg.t)
            candidates = build_candidate_list(data, cfg, completions=rows, scorer=scorer)
            totals = best_totals(candidates, rows, max_vars)
            k = _first_best(totals)
            trace.append(float(totals[k]))
            if k == 0:
                converged = True
                break
            z = data.completion(rows[k].tolist())
        # z is a row of the last neighbourhood, so its family completions are scored
        dag, total = exact_dag(filter_candidates(candidates, z), max_vars)
        sol = Solution(dag, z, total, iters, converged, tuple(trace))
        if best is None or sol.total > best.total + 1e-10:
            best = sol
    return best


def verify_t_local(data: Dataset, sol: Solution, cfg: ScoringConfig, t: int, max_vars: int = DEFAULT_MAX_VARS) -> bool:
    """Whether no completion within Hamming distance ``t`` admits a better DAG.

    Each neighbour is checked with its own filtered table and a scalar
    :func:`exact_dag` run, independently of the batched search.
    """
    rows = neighborhood_array(sol.z, t)
    candidates = build_candidate_list(data, cfg, completions=rows)
    for row in rows:
        _, score = exact_dag(filter_candidates(candidates, row.tolist()), max_vars)
        if score > sol.total + VERIFY_TOL:
            return False
    return True
