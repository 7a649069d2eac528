"""Reduction of learning-with-missing-cells to plain structure learning.

Every missing cell ``(u, i)`` gets a ring of ``r_i`` gadget variables, one
per state.  Gadget ``j`` may take either all original variables plus gadget
``j+1 (mod r_i)`` as parents at score 0, or no parents at score ``-lambda``.
A ring cannot close, so at least one gadget per cell sits on the empty
entry; ``lambda`` is large enough that an optimum uses exactly one.  Each
original candidate gains the gadget of every ``(cell, value)`` in its
family completion as an extra parent, which is only acyclic when that
gadget is the free one, i.e. when the completion agrees with the ring.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable

from .dataset import Completion, Dataset
from .scoring import CandidateList
from .structopt import DEFAULT_MAX_VARS, Dag, ScoreTable, exact_dag

ZERO_SHIFT = 1e-9
LAMBDA_WARN = 1e12


class DecodeError(ValueError):
    """An augmented solution does not encode a consistent completion."""


@dataclass(frozen=True)
class GadgetVariable:
    missing_cell: tuple[int, int]
    state_index: int
    node_id: int

    @property
    def name(self) -> str:
        u, i = self.missing_cell
        return f"M_{u}_{i}_{self.state_index}"


@dataclass(frozen=True)
class AugmentedProblem:
    original_m: int
    names: tuple[str, ...]
    gadgets: tuple[tuple[GadgetVariable, ...], ...]
    lambda_: float
    entries: tuple[tuple[tuple[tuple[int, ...], float], ...], ...]

    @property
    def n_nodes(self) -> int:
        return len(self.entries)

    def to_score_table(self) -> ScoreTable:
        return ScoreTable(self.entries, self.names)


@dataclass(frozen=True)
class AugmentedSolution:
    parent_choice: tuple[tuple[tuple[int, ...], float], ...]
    total_score: float


def choose_lambda(scores: Iterable[float]) -> float:
    """One plus the sum of absolute scores."""
    total = 0.0
    for s in scores:
        if not math.isfinite(s):
            raise ValueError(f"non-finite score {s}")
        total += abs(s)
    lam = 1.0 + total
    if lam > LAMBDA_WARN:
        warnings.warn(f"gadget penalty {lam:.3g} is large; scores near it lose precision", RuntimeWarning)
    return lam


def build_augmented_problem(data: Dataset, candidates: CandidateList) -> AugmentedProblem:
    """Attach gadget rings to a full candidate list.

    Node ids: originals ``0..m-1``, then gadgets grouped by missing cell in
    ``missing_index`` order with states ascending.
    """
    m = data.m
    card = data.cardinalities
    groups = []
    node = m
    for u, i in data.missing_index:
        groups.append(tuple(GadgetVariable((u, i), j, node + j) for j in range(card[i])))
        node += card[i]

    original = []
    for child in range(m):
        rows = []
        for cand in candidates.for_child(child):
            score = cand.log_score if cand.log_score != 0.0 else -ZERO_SHIFT
            extra = tuple(groups[cell][value].node_id for cell, value in zip(cand.cells, cand.family_completion))
            rows.append((tuple(sorted(cand.parents + extra)), score))
        original.append(tuple(rows))

    lam = choose_lambda(s for rows in original for _, s in rows)
    everyone = tuple(range(m))
    gadget_entries = []
    for ring in groups:
        r = len(ring)
        for g in ring:
            nxt = ring[(g.state_index + 1) % r].node_id
            gadget_entries.append(((everyone + (nxt,), 0.0), ((), -lam)))
    names = data.names + tuple(g.name for ring in groups for g in ring)
    return AugmentedProblem(m, names, tuple(groups), lam, tuple(original) + tuple(gadget_entries))


def solve_augmented(problem: AugmentedProblem, max_vars: int = DEFAULT_MAX_VARS) -> AugmentedSolution:
    """Optimal parent choice for the augmented table by subset DP."""
    table = problem.to_score_table()
    dag, total = exact_dag(table, max_vars=max_vars)
    ranked = []
    for i, parents in enumerate(dag.parents):
        ranked.append((parents, max(s for p, s in table.entries[i] if p == parents)))
    return AugmentedSolution(tuple(ranked), total)


def decode_solution(problem: AugmentedProblem, sol: AugmentedSolution, data: Dataset | None = None) -> tuple[Dag, Completion]:
    """Read the completion off the rings and strip gadget parents."""
    m = problem.original_m
    values = []
    for ring in problem.gadgets:
        free = [g for g in ring if not sol.parent_choice[g.node_id][0]]
        if len(free) != 1:
            u, i = ring[0].missing_cell
            raise DecodeError(f"cell ({u},{i}) has {len(free)} parentless gadgets, expected exactly 1")
        values.append(free[0].state_index)

    ring_of = {g.node_id: (c, g.state_index) for c, ring in enumerate(problem.gadgets) for g in ring}
    parents = []
    for i in range(m):
        ps = sol.parent_choice[i][0]
        for p in ps:
            if p >= m:
                cell, state = ring_of[p]
                if values[cell] != state:
                    raise DecodeError(f"variable {i} uses gadget {problem.names[p]} but the completion is {values[cell]}")
        parents.append(tuple(p for p in ps if p < m))
    radices = tuple(len(ring) for ring in problem.gadgets)
    z = data.completion(values) if data is not None else Completion(tuple(values), radices)
    return Dag(tuple(parents)), z
