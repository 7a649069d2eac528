"""BDeu local scores over (partially) completed families and candidate lists.

Scores are natural-log BDeu marginal likelihoods.  A family is a child
column together with a sorted parent tuple; the missing cells that fall in
the family's columns are the only ones its score depends on, so a family is
scored once per *family completion* (an assignment to those cells).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.special import gammaln

from .dataset import MISSING, DataError, Dataset, as_rows
from .errors import BudgetExceeded

FamilyCompletion = tuple[int, ...]

# Family completion spaces up to this size are scored densely.
DEFAULT_FAMILY_BUDGET = 2**20
# Mixed-radix codes are used only while they fit comfortably in int64.
_CODE_LIMIT = 2**62


@dataclass(frozen=True)
class ScoringConfig:
    ess: float = 1.0
    k: int = 3

    def __post_init__(self):
        if not (self.ess > 0 and math.isfinite(self.ess)):
            raise ValueError(f"ess must be a positive finite number, got {self.ess}")
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")


@dataclass(frozen=True)
class FamilyView:
    """A child, its parents, and the missing cells inside the family's columns.

    ``missing_cells`` are positions into ``Dataset.missing_index``.
    """

    child: int
    parents: tuple[int, ...]
    missing_cells: tuple[int, ...]

    @property
    def columns(self) -> tuple[int, ...]:
        return self.parents + (self.child,)

    @property
    def c(self) -> int:
        return len(self.missing_cells)


def family_view(data: Dataset, child: int, parents: Iterable[int]) -> FamilyView:
    parents = tuple(sorted(set(parents)))
    if child in parents:
        raise ValueError(f"variable {child} cannot be its own parent")
    for j in parents + (child,):
        if not 0 <= j < data.m:
            raise ValueError(f"column {j} out of range")
    return FamilyView(child, parents, data.missing_positions(parents + (child,)))


@dataclass(frozen=True)
class ScoredCandidate:
    child: int
    parents: tuple[int, ...]
    family_completion: FamilyCompletion
    log_score: float
    cells: tuple[int, ...] = ()


# -- BDeu ------------------------------------------------------------------------


def _bdeu_from_counts(counts: np.ndarray, r: int, q: int, ess: float) -> np.ndarray:
    """BDeu for a batch of count tables, ``counts`` shaped ``(F, q, r)``."""
    a_jk = ess / (r * q)
    a_j = ess / q
    n_j = counts.sum(axis=2)
    parent_part = gammaln(a_j) - gammaln(a_j + n_j)
    child_part = gammaln(a_jk + counts) - gammaln(a_jk)
    return parent_part.sum(axis=1) + child_part.sum(axis=(1, 2))


def bdeu_from_counts(counts, ess: float = 1.0) -> float:
    """BDeu of one count table ``counts[j, k]`` (parent configuration, child state).

    This is the count-level form of :func:`bdeu_local_score`; an all-zero
    table (no rows) scores exactly 0.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 2 or min(counts.shape) < 1:
        raise ValueError("counts must be a non-empty q x r table")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    q, r = counts.shape
    return float(_bdeu_from_counts(counts[None], r, q, ess)[0])


def _strides(radices: Sequence[int]) -> np.ndarray:
    """Mixed-radix place values, last position least significant."""
    out = np.ones(len(radices), dtype=np.int64)
    for p in range(len(radices) - 2, -1, -1):
        out[p] = out[p + 1] * radices[p + 1]
    return out


def bdeu_local_score(data: Dataset, child: int, parents: Sequence[int], ess: float = 1.0) -> float:
    """BDeu score of ``child`` given ``parents``.

    The family's columns must be fully observed.  Parent configurations
    are indexed lexicographically over the sorted parents, last parent
    varying fastest.
    """
    view = family_view(data, child, parents)
    if view.c:
        raise DataError(f"family of column {child} has {view.c} missing cell(s)")
    return float(_score_family(data, view, np.zeros((1, 0), dtype=np.int64), ess)[0])


def _score_family(data: Dataset, view: FamilyView, fcs: np.ndarray, ess: float) -> np.ndarray:
    """Score ``view`` under each row of ``fcs`` (shape ``(F, c)``)."""
    card = data.cardinalities
    cols = view.columns
    radices = [card[j] for j in cols]
    r = card[view.child]
    q = int(np.prod(radices[:-1], dtype=np.int64)) if view.parents else 1
    strides = _strides(radices)
    block = data.cells[:, cols]
    touched = np.any(block == MISSING, axis=1)
    base = np.bincount(block[~touched] @ strides, minlength=q * r)

    n_fc = fcs.shape[0]
    counts = np.broadcast_to(base, (n_fc, q * r)).copy()
    if view.c:
        rows = np.nonzero(touched)[0]
        row_pos = {int(u): k for k, u in enumerate(rows)}
        col_pos = {j: k for k, j in enumerate(cols)}
        filled = np.broadcast_to(block[rows], (n_fc,) + block[rows].shape).copy()
        for p, cell in enumerate(view.missing_cells):
            u, i = data.missing_index[cell]
            filled[:, row_pos[u], col_pos[i]] = fcs[:, p]
        flat = filled @ strides + (np.arange(n_fc, dtype=np.int64) * (q * r))[:, None]
        counts += np.bincount(flat.ravel(), minlength=n_fc * q * r).reshape(n_fc, q * r)
    return _bdeu_from_counts(counts.reshape(n_fc, q, r).astype(np.float64), r, q, ess)


# -- family completions ------------------------------------------------------------


def family_radices(data: Dataset, view: FamilyView) -> tuple[int, ...]:
    card = data.cardinalities
    return tuple(card[data.missing_index[p][1]] for p in view.missing_cells)


def enumerate_family_completions(data: Dataset, view: FamilyView) -> Iterator[FamilyCompletion]:
    """All assignments to the family's missing cells, lexicographically."""
    return itertools.product(*(range(r) for r in family_radices(data, view)))


def _product_array(radices: Sequence[int]) -> np.ndarray:
    if not radices:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices(tuple(radices), dtype=np.int64)
    return grids.reshape(len(radices), -1).T.copy()


class LocalScorer:
    """BDeu scorer bound to one dataset and ESS, with a score cache.

    Cache keys are ``(child, parents, family_completion)``.  Lookups and
    inserts are plain dict operations, so sharing a scorer between threads
    is safe under the GIL (a missed insert only costs a recomputation).
    """

    def __init__(self, data: Dataset, ess: float = 1.0):
        self.data = data
        self.ess = float(ess)
        self._cache: dict[tuple, float] = {}

    def __len__(self):
        return len(self._cache)

    def score(self, view: FamilyView, fc: Sequence[int]) -> float:
        fc = tuple(int(v) for v in fc)
        self._check(view, fc)
        key = (view.child, view.parents, fc)
        hit = self._cache.get(key)
        if hit is None:
            hit = float(_score_family(self.data, view, np.array([fc], dtype=np.int64).reshape(1, -1), self.ess)[0])
            self._cache[key] = hit
        return hit

    def scores(self, view: FamilyView, fcs: np.ndarray) -> np.ndarray:
        """Scores for each row of ``fcs``; only cache misses are computed."""
        fcs = as_rows(fcs, view.c)
        keys = [(view.child, view.parents, tuple(row)) for row in fcs.tolist()]
        out = np.empty(len(keys))
        misses = []
        for k, key in enumerate(keys):
            hit = self._cache.get(key)
            if hit is None:
                misses.append(k)
            else:
                out[k] = hit
        if misses:
            fresh = _score_family(self.data, view, fcs[misses], self.ess)
            for k, v in zip(misses, fresh.tolist()):
                out[k] = v
                self._cache[keys[k]] = v
        return out

    def _check(self, view: FamilyView, fc: tuple[int, ...]) -> None:
        if len(fc) != view.c:
            raise DataError(f"family completion has {len(fc)} values, family has {view.c} missing cells")
        for v, r in zip(fc, family_radices(self.data, view)):
            if not 0 <= v < r:
                raise DataError(f"family completion value {v} out of range")


def local_score_with_completion(
    data: Dataset,
    view: FamilyView,
    fc: Sequence[int],
    cfg: ScoringConfig,
    scorer: LocalScorer | None = None,
) -> float:
    """BDeu of ``view`` with its missing cells filled from ``fc``."""
    if scorer is None:
        scorer = LocalScorer(data, cfg.ess)
    elif scorer.data is not data or scorer.ess != cfg.ess:
        raise ValueError("scorer is bound to a different dataset or ess")
    return scorer.score(view, fc)


# -- candidate lists -------------------------------------------------------------


@dataclass
class FamilyScores:
    """Scores of one family for a set of family completions.

    ``fcs`` rows are family completions in lexicographic order; when
    ``dense`` is set they are the complete product space, so the row index
    of a completion equals its mixed-radix code.
    """

    view: FamilyView
    radices: tuple[int, ...]
    fcs: np.ndarray
    scores: np.ndarray
    dense: bool
    _codes: np.ndarray | None = field(default=None, repr=False)
    _table: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        space = math.prod(self.radices)
        if space < _CODE_LIMIT:
            self._strides = _strides(self.radices)
            if not self.dense:
                self._codes = self.fcs @ self._strides
        else:
            self._strides = None
            self._table = {tuple(row): s for row, s in zip(self.fcs.tolist(), self.scores.tolist())}

    def __len__(self):
        return len(self.scores)

    def lookup(self, fc_rows: np.ndarray) -> np.ndarray:
        """Scores for rows of family completions (shape ``(N, c)``)."""
        if self._strides is None:
            try:
                return np.array([self._table[tuple(r)] for r in fc_rows.tolist()])
            except KeyError as e:
                raise KeyError(f"family completion {e.args[0]} not in the candidate list") from None
        codes = fc_rows @ self._strides
        if self.dense:
            return self.scores[codes]
        pos = np.searchsorted(self._codes, codes)
        pos = np.minimum(pos, len(self._codes) - 1)
        if not np.array_equal(self._codes[pos], codes):
            bad = fc_rows[np.nonzero(self._codes[pos] != codes)[0][0]]
            raise KeyError(f"family completion {tuple(bad.tolist())} not in the candidate list")
        return self.scores[pos]

    def score_for(self, fc: Sequence[int]) -> float:
        return float(self.lookup(np.asarray(fc, dtype=np.int64).reshape(1, -1))[0])


class CandidateList:
    """Per-child scored parent-set candidates, one per family completion."""

    def __init__(self, data: Dataset, cfg: ScoringConfig, families: Sequence[Sequence[FamilyScores]]):
        self.data = data
        self.cfg = cfg
        self.families = tuple(tuple(f) for f in families)

    @property
    def m(self) -> int:
        return len(self.families)

    def __len__(self):
        return sum(len(f) for fams in self.families for f in fams)

    def for_child(self, child: int) -> list[ScoredCandidate]:
        """Candidates of ``child`` by descending score (ties: fewer parents, lexicographic)."""
        out = []
        for fam in self.families[child]:
            v = fam.view
            for row, s in zip(fam.fcs.tolist(), fam.scores.tolist()):
                out.append(ScoredCandidate(v.child, v.parents, tuple(row), s, v.missing_cells))
        out.sort(key=lambda c: (-c.log_score, len(c.parents), c.parents, c.family_completion))
        return out

    def __iter__(self) -> Iterator[ScoredCandidate]:
        for child in range(self.m):
            yield from self.for_child(child)


def parent_sets(m: int, child: int, k: int) -> Iterator[tuple[int, ...]]:
    """Parent sets of ``child`` with at most ``k`` members, by size then lexicographic."""
    others = [j for j in range(m) if j != child]
    for size in range(min(k, len(others)) + 1):
        yield from itertools.combinations(others, size)


def build_candidate_list(
    data: Dataset,
    cfg: ScoringConfig,
    completions: np.ndarray | None = None,
    scorer: LocalScorer | None = None,
    family_budget: int = DEFAULT_FAMILY_BUDGET,
) -> CandidateList:
    """Score every parent set of size ``<= cfg.k`` for every child.

    Without ``completions`` each family is scored under all its family
    completions.  With ``completions`` (rows of full completions, shape
    ``(N, C)``) only the family completions those rows induce are scored.
    """
    if scorer is None:
        scorer = LocalScorer(data, cfg.ess)
    if completions is not None:
        completions = as_rows(completions, data.n_missing)
    families = []
    for child in range(data.m):
        fams = []
        for parents in parent_sets(data.m, child, cfg.k):
            view = family_view(data, child, parents)
            radices = family_radices(data, view)
            space = math.prod(radices)
            if completions is None:
                if space > family_budget:
                    raise BudgetExceeded(
                        f"family of column {child} with parents {parents} has {space} completions "
                        f"(budget {family_budget})"
                    )
                fcs = _product_array(radices)
                dense = True
            else:
                fcs = np.unique(completions[:, list(view.missing_cells)], axis=0)
                if fcs.shape[0] == 0:
                    fcs = fcs.reshape(0, view.c)
                dense = fcs.shape[0] == space
            fams.append(FamilyScores(view, radices, fcs, scorer.scores(view, fcs), dense))
        families.append(fams)
    return CandidateList(data, cfg, families)
