"""Exact structure optimisation by dynamic programming over variable subsets.

:func:`exact_dag` solves a plain score table.  :func:`exact_joint` maximises
over completions as well, evaluating the subset recursion for a whole batch
of completions at once with numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import Completion, Dataset, as_rows
from .errors import BudgetExceeded
from .scoring import CandidateList, ScoringConfig, build_candidate_list, _strides

DEFAULT_MAX_VARS = 24
DEFAULT_COMPLETION_BUDGET = 2**20
# Totals closer than this are treated as ties.
TIE_TOL = 1e-10
# Upper bound on float64 cells held by one batch of the vectorised DP.
_BATCH_CELLS = 2**23


@dataclass(frozen=True)
class ScoreTable:
    """Per-child lists of ``(parents, log_score)`` entries."""

    entries: tuple[tuple[tuple[tuple[int, ...], float], ...], ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        entries = tuple(
            tuple((tuple(sorted(int(p) for p in parents)), float(s)) for parents, s in child)
            for child in self.entries
        )
        names = tuple(self.names) if self.names is not None else tuple(f"X{i}" for i in range(len(entries)))
        if len(names) != len(entries):
            raise ValueError("names and entries differ in length")
        for i, child in enumerate(entries):
            if not child:
                raise ValueError(f"variable {names[i]} has no candidate parent sets")
            for parents, _ in child:
                if i in parents:
                    raise ValueError(f"variable {names[i]} lists itself as a parent")
                if any(not 0 <= p < len(entries) for p in parents):
                    raise ValueError(f"variable {names[i]} has a parent out of range")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "names", names)

    @property
    def m(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Dag:
    parents: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        parents = tuple(tuple(sorted(p)) for p in self.parents)
        object.__setattr__(self, "parents", parents)
        if topological_order(parents) is None:
            raise ValueError("parent sets contain a directed cycle")

    @property
    def m(self) -> int:
        return len(self.parents)

    @property
    def order(self) -> tuple[int, ...]:
        return topological_order(self.parents)

    @property
    def arcs(self) -> list[tuple[int, int]]:
        return [(p, i) for i, ps in enumerate(self.parents) for p in ps]


def topological_order(parents: Sequence[Sequence[int]]) -> tuple[int, ...] | None:
    """Kahn elimination; ``None`` if the parent sets are cyclic."""
    m = len(parents)
    indeg = [len(p) for p in parents]
    children = [[] for _ in range(m)]
    for i, ps in enumerate(parents):
        for p in ps:
            children[p].append(i)
    ready = [i for i in range(m) if indeg[i] == 0]
    order = []
    while ready:
        ready.sort()
        v = ready.pop(0)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    return tuple(order) if len(order) == m else None


def _mask(parents: Sequence[int]) -> int:
    out = 0
    for p in parents:
        out |= 1 << p
    return out


def exact_dag(table: ScoreTable, max_vars: int = DEFAULT_MAX_VARS) -> tuple[Dag, float]:
    """Highest-scoring DAG whose parent sets all come from ``table``.

    Among equal-scoring parent sets the smaller one wins, then the
    lexicographically smaller one.  Among equal sinks the lowest index wins.
    """
    m = table.m
    if m > max_vars:
        raise BudgetExceeded(f"{m} variables exceeds the subset DP cap of {max_vars}")
    full = (1 << m) - 1
    best = []  # best[i][S] = (key, parents, score) for the best entry with parents in S
    for i in range(m):
        ranked = sorted(table.entries[i], key=lambda e: (-e[1], len(e[0]), e[0]))
        direct: dict[int, tuple] = {}
        for parents, score in ranked:
            direct.setdefault(_mask(parents), ((-score, len(parents), parents), parents, score))
        bps: list = [None] * (1 << m)
        bit_i = 1 << i
        for S in range(1 << m):
            if S & bit_i:
                continue
            cand = direct.get(S)
            rest = S
            while rest:
                low = rest & -rest
                sub = bps[S ^ low]
                if sub is not None and (cand is None or sub[0] < cand[0]):
                    cand = sub
                rest ^= low
            bps[S] = cand
        best.append(bps)

    total = [-math.inf] * (1 << m)
    sink = [-1] * (1 << m)
    total[0] = 0.0
    for S in range(1, 1 << m):
        rest = S
        while rest:
            low = rest & -rest
            i = low.bit_length() - 1
            entry = best[i][S ^ low]
            if entry is not None and total[S ^ low] > -math.inf:
                val = total[S ^ low] + entry[2]
                if val > total[S]:
                    total[S], sink[S] = val, i
            rest ^= low
    if sink[full] < 0 and m:
        raise ValueError("no acyclic selection of the table's parent sets exists")

    parents: list[tuple[int, ...]] = [()] * m
    scores = [0.0] * m
    S = full
    while S:
        i = sink[S]
        S ^= 1 << i
        _, parents[i], scores[i] = best[i][S]
    # summed in variable order so the total does not depend on the sink order
    return Dag(tuple(parents)), math.fsum(scores)


def filter_candidates(candidates: CandidateList, z: Completion | Sequence[int]) -> ScoreTable:
    """Keep, for every (child, parent set), the entry whose family completion agrees with ``z``."""
    values = np.asarray(tuple(z), dtype=np.int64)
    if values.shape[0] != candidates.data.n_missing:
        raise ValueError(f"completion has {values.shape[0]} values, dataset has {candidates.data.n_missing} missing")
    entries = []
    for fams in candidates.families:
        child = []
        for fam in fams:
            fc = values[list(fam.view.missing_cells)]
            try:
                child.append((fam.view.parents, fam.score_for(fc)))
            except KeyError as e:
                raise ValueError(
                    f"no candidate for child {fam.view.child} parents {fam.view.parents}: {e.args[0]}"
                ) from None
        entries.append(tuple(child))
    return ScoreTable(tuple(entries), candidates.data.names)


# -- batched joint optimisation ------------------------------------------------------


def best_totals(candidates: CandidateList, rows: np.ndarray, max_vars: int = DEFAULT_MAX_VARS) -> np.ndarray:
    """Optimal DAG score for each completion row of ``rows`` (shape ``(N, C)``)."""
    m = candidates.m
    if m > max_vars:
        raise BudgetExceeded(f"{m} variables exceeds the subset DP cap of {max_vars}")
    rows = np.asarray(rows, dtype=np.int64)
    batch = max(1, _BATCH_CELLS // ((m + 1) << m))
    out = np.empty(rows.shape[0])
    for lo in range(0, rows.shape[0], batch):
        out[lo : lo + batch] = _dp_batch(candidates, rows[lo : lo + batch])
    return out


def _dp_batch(candidates: CandidateList, rows: np.ndarray) -> np.ndarray:
    m = candidates.m
    n = rows.shape[0]
    size = 1 << m
    bps = []
    for i, fams in enumerate(candidates.families):
        direct = {_mask(f.view.parents): f.lookup(rows[:, list(f.view.missing_cells)]) for f in fams}
        table = np.full((size, n), -np.inf)
        bit_i = 1 << i
        for S in range(size):
            if S & bit_i:
                continue
            cur = table[S]
            if S in direct:
                cur[:] = direct[S]
            rest = S
            while rest:
                low = rest & -rest
                np.maximum(cur, table[S ^ low], out=cur)
                rest ^= low
        bps.append(table)
    total = np.full((size, n), -np.inf)
    total[0] = 0.0
    tmp = np.empty(n)
    for S in range(1, size):
        cur = total[S]
        rest = S
        while rest:
            low = rest & -rest
            i = low.bit_length() - 1
            np.add(total[S ^ low], bps[i][S ^ low], out=tmp)
            np.maximum(cur, tmp, out=cur)
            rest ^= low
    return total[size - 1].copy()


def _first_best(totals: np.ndarray) -> int:
    top = totals.max()
    return int(np.nonzero(totals >= top - TIE_TOL)[0][0])


def completion_rows(radices: Sequence[int], start: int, stop: int) -> np.ndarray:
    """Completions with lexicographic ranks ``start..stop-1`` as rows."""
    idx = np.arange(start, stop, dtype=np.int64)
    strides = _strides(radices)
    return (idx[:, None] // strides[None, :]) % np.asarray(radices, dtype=np.int64)[None, :]


def exact_joint(
    data: Dataset,
    candidates: CandidateList | None,
    cfg: ScoringConfig,
    completions: np.ndarray | None = None,
    budget: int = DEFAULT_COMPLETION_BUDGET,
    max_vars: int = DEFAULT_MAX_VARS,
) -> tuple[Dag, Completion, float]:
    """Jointly optimal DAG and completion.

    Searches every completion (lexicographic order) or, if given, the rows
    of ``completions`` in their given order.  Ties in total score go to the
    first completion searched; the DAG then follows :func:`exact_dag`.
    """
    radices = data.missing_radices
    if completions is None:
        space = data.completion_space_size()
        if space > budget:
            raise BudgetExceeded(f"{space} completions exceeds the budget of {budget}")
    if candidates is None:
        candidates = build_candidate_list(data, cfg, completions=completions)
    if data.m > max_vars:
        raise BudgetExceeded(f"{data.m} variables exceeds the subset DP cap of {max_vars}")

    if completions is not None:
        rows = as_rows(completions, len(radices))
        winner = rows[_first_best(best_totals(candidates, rows, max_vars))]
    else:
        batch = max(1, _BATCH_CELLS // ((data.m + 1) << data.m))
        best_val, winner = -math.inf, None
        for lo in range(0, space, batch):
            rows = completion_rows(radices, lo, min(space, lo + batch))
            totals = best_totals(candidates, rows, max_vars)
            k = _first_best(totals)
            if totals[k] > best_val + TIE_TOL:
                best_val, winner = totals[k], rows[k]
    z = data.completion(winner.tolist())
    dag, total = exact_dag(filter_candidates(candidates, z), max_vars)
    return dag, z, total
