"""Categorical datasets with missing cells, and completions of those cells.

A :class:`Dataset` stores an ``n x m`` integer grid where ``-1`` marks a
missing cell.  Missing cells are enumerated in row-major order; a
:class:`Completion` is a vector of states aligned with that enumeration.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

MISSING = -1


class DataError(ValueError):
    """Raised for malformed datasets, completions or missingness requests."""


@dataclass(frozen=True)
class VariableSchema:
    name: str
    states: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        if len(self.states) < 2:
            raise DataError(f"variable {self.name!r} needs at least 2 states, got {len(self.states)}")
        if len(set(self.states)) != len(self.states):
            raise DataError(f"variable {self.name!r} has duplicate state labels")

    @property
    def cardinality(self) -> int:
        return len(self.states)

    def index(self, label: str) -> int:
        try:
            return self.states.index(label)
        except ValueError:
            raise DataError(f"state {label!r} not in variable {self.name!r}") from None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable categorical dataset.

    Parameters
    ----------
    schema : sequence of VariableSchema
        One entry per column.
    cells : array_like of int, shape (n, m)
        State indices, ``-1`` for missing.
    """

    schema: tuple[VariableSchema, ...]
    cells: np.ndarray
    missing_index: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        schema = tuple(self.schema)
        cells = np.array(self.cells, dtype=np.int64, copy=True)
        if cells.ndim != 2:
            raise DataError("cells must be a 2-d grid")
        n, m = cells.shape
        if n < 1 or m < 1:
            raise DataError(f"dataset must have n >= 1 and m >= 1, got {n}x{m}")
        if len(schema) != m:
            raise DataError(f"schema has {len(schema)} variables but grid has {m} columns")
        names = [v.name for v in schema]
        if len(set(names)) != len(names):
            raise DataError("duplicate variable names")
        card = np.array([v.cardinality for v in schema])
        if np.any(cells < MISSING) or np.any(cells >= card[None, :]):
            raise DataError("observed state index out of range")
        cells.setflags(write=False)
        rows, cols = np.nonzero(cells == MISSING)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "missing_index", tuple(zip(rows.tolist(), cols.tolist())))

    @property
    def n(self) -> int:
        return self.cells.shape[0]

    @property
    def m(self) -> int:
        return self.cells.shape[1]

    @property
    def n_missing(self) -> int:
        return len(self.missing_index)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.schema)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.schema)

    @property
    def missing_radices(self) -> tuple[int, ...]:
        """Cardinality of the column owning each missing cell."""
        card = self.cardinalities
        return tuple(card[i] for _, i in self.missing_index)

    def missing_positions(self, columns: Iterable[int]) -> tuple[int, ...]:
        """Positions in ``missing_index`` whose column is in ``columns``, in order."""
        cols = set(columns)
        return tuple(p for p, (_, i) in enumerate(self.missing_index) if i in cols)

    def completion(self, values: Sequence[int]) -> Completion:
        return Completion(tuple(values), self.missing_radices)

    def completion_space_size(self) -> int:
        return int(np.prod(self.missing_radices, dtype=object)) if self.missing_index else 1

    def column_modes(self) -> tuple[int, ...]:
        """Most frequent observed state per column, ties to the lowest index."""
        modes = []
        for i, r in enumerate(self.cardinalities):
            col = self.cells[:, i]
            counts = np.bincount(col[col != MISSING], minlength=r)
            modes.append(int(np.argmax(counts)))
        return tuple(modes)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.schema == other.schema and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.schema, self.cells.tobytes()))

    def __repr__(self):
        return f"Dataset(n={self.n}, m={self.m}, missing={self.n_missing})"


@dataclass(frozen=True)
class Completion:
    """States for every missing cell of a dataset, in ``missing_index`` order.

    ``radices`` holds the cardinality of each cell's column so that
    completions from different datasets are not silently mixed.
    """

    values: tuple[int, ...]
    radices: tuple[int, ...]

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        radices = tuple(int(r) for r in self.radices)
        if len(values) != len(radices):
            raise DataError(f"completion has {len(values)} values for {len(radices)} cells")
        for v, r in zip(values, radices):
            if not 0 <= v < r:
                raise DataError(f"completion value {v} out of range for cardinality {r}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "radices", radices)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def replace(self, changes: dict[int, int]) -> Completion:
        vals = list(self.values)
        for p, v in changes.items():
            vals[p] = v
        return Completion(tuple(vals), self.radices)


@dataclass(frozen=True)
class MissingnessSpec:
    """How to blank cells of a complete dataset.

    Exactly one of ``count`` (total cells), ``per_variable`` (cells in every
    eligible column) or ``proportion`` (fraction of all eligible cells) is
    given.  ``mnar_target_state`` is a state index, or a state label
    resolved per column.  With ``disjoint`` set, repetitions draw disjoint
    blocks from one fixed permutation of the eligible cells (sampling
    without replacement across repetitions).
    """

    mode: str = "MNAR"
    count: int | None = None
    per_variable: int | None = None
    proportion: float | None = None
    mnar_target_state: int | str | None = None
    columns: tuple[int, ...] | None = None
    seed: int = 0
    disjoint: bool = False

    def __post_init__(self):
        mode = self.mode.upper()
        if mode not in ("MAR", "MNAR"):
            raise DataError(f"unknown missingness mode {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        if mode == "MNAR" and self.mnar_target_state is None:
            raise DataError("MNAR missingness requires mnar_target_state")
        if mode == "MAR" and self.mnar_target_state is not None:
            raise DataError("MAR missingness forbids mnar_target_state")
        given = [x is not None for x in (self.count, self.per_variable, self.proportion)]
        if sum(given) != 1:
            raise DataError("give exactly one of count, per_variable, proportion")
        for name in ("count", "per_variable"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise DataError(f"{name} must be >= 0")
        if self.proportion is not None and not 0 <= self.proportion <= 1:
            raise DataError("proportion must lie in [0, 1]")
        if self.columns is not None:
            object.__setattr__(self, "columns", tuple(sorted(set(int(c) for c in self.columns))))


# -- CSV ---------------------------------------------------------------------


def load_csv(path: str | Path, missing_token: str = "?") -> Dataset:
    """Read a comma-separated file with a header row.

    Each column's states are the sorted distinct observed tokens.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh)]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header")
    if not body:
        raise DataError(f"{path}: no data rows")
    m = len(header)
    tokens = []
    for lineno, row in enumerate(body, start=2):
        if len(row) != m:
            raise DataError(f"{path}:{lineno}: expected {m} fields, got {len(row)}")
        tokens.append([t.strip() for t in row])
    schema = []
    cells = np.full((len(tokens), m), MISSING, dtype=np.int64)
    for i, name in enumerate(header):
        seen = sorted({row[i] for row in tokens if row[i] != missing_token})
        if len(seen) < 2:
            raise DataError(f"{path}: column {name!r} has {len(seen)} observed state(s), need >= 2")
        lookup = {s: k for k, s in enumerate(seen)}
        for u, row in enumerate(tokens):
            if row[i] != missing_token:
                cells[u, i] = lookup[row[i]]
        schema.append(VariableSchema(name, tuple(seen)))
    return Dataset(tuple(schema), cells)


def write_csv(data: Dataset, path: str | Path, missing_token: str = "?") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(data.names)
        for row in data.cells:
            w.writerow([missing_token if s == MISSING else v.states[s] for s, v in zip(row, data.schema)])


def write_completion(data: Dataset, z: Completion, path: str | Path) -> None:
    """Write one ``row,col,state_label`` line per missing cell."""
    _check_aligned(data, z)
    with open(path, "w", encoding="utf-8") as fh:
        for (u, i), v in zip(data.missing_index, z.values):
            fh.write(f"{u},{i},{data.schema[i].states[v]}\n")


def read_cell_values(data: Dataset, path: str | Path) -> dict[tuple[int, int], int]:
    """Parse a ``row,col,state_label`` file into ``{(row, col): state}``."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected row,col,state_label")
            try:
                u, i = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: row and col must be integers") from None
            if not (0 <= u < data.n and 0 <= i < data.m):
                raise DataError(f"{path}:{lineno}: cell ({u},{i}) outside the dataset")
            out[(u, i)] = data.schema[i].index(parts[2])
    return out


def read_completion(data: Dataset, path: str | Path) -> Completion:
    values = read_cell_values(data, path)
    if set(values) != set(data.missing_index):
        raise DataError(f"{path}: cells do not match the dataset's missing cells")
    return data.completion([values[c] for c in data.missing_index])


# -- completion arithmetic -----------------------------------------------------


def _check_aligned(data: Dataset, z: Completion) -> None:
    if tuple(z.radices) != data.missing_radices:
        raise DataError(
            f"completion of length {len(z)} is not aligned with the dataset's {data.n_missing} missing cells"
        )


def apply_completion(data: Dataset, z: Completion) -> Dataset:
    """Fill every missing cell of ``data`` from ``z``."""
    _check_aligned(data, z)
    if not data.missing_index:
        return data
    cells = data.cells.copy()
    rows, cols = np.array(data.missing_index).T
    cells[rows, cols] = z.values
    return Dataset(data.schema, cells)


def hamming_distance(z1: Completion, z2: Completion) -> int:
    if len(z1) != len(z2):
        raise DataError(f"completions differ in length ({len(z1)} vs {len(z2)})")
    return sum(a != b for a, b in zip(z1.values, z2.values))


def enumerate_neighborhood(z: Completion, t: int) -> Iterator[Completion]:
    """Yield every completion within Hamming distance ``t`` of ``z``.

    ``z`` comes first, then changes of one cell, two cells, and so on; within
    a size the changed cell sets are lexicographic and so are the
    replacement values.
    """
    for row in _neighborhood_rows(z.values, z.radices, t):
        yield Completion(row, z.radices)


def _neighborhood_rows(values: Sequence[int], radices: Sequence[int], t: int) -> Iterator[tuple[int, ...]]:
    if t < 0:
        raise DataError("neighbourhood radius must be >= 0")
    values = tuple(values)
    yield values
    for size in range(1, min(t, len(values)) + 1):
        for cells in itertools.combinations(range(len(values)), size):
            options = [[s for s in range(radices[p]) if s != values[p]] for p in cells]
            for repl in itertools.product(*options):
                row = list(values)
                for p, s in zip(cells, repl):
                    row[p] = s
                yield tuple(row)


def neighborhood_array(z: Completion, t: int) -> np.ndarray:
    """The neighbourhood of ``z`` as an ``(N, C)`` array, same order as the stream."""
    rows = list(_neighborhood_rows(z.values, z.radices, t))
    return np.array(rows, dtype=np.int64).reshape(len(rows), len(z))


def as_rows(values, width: int) -> np.ndarray:
    """View ``values`` as an ``(N, width)`` int64 array of completion rows.

    A flat sequence is one row, or several when ``width`` divides it.  With
    ``width == 0`` a flat input is a single empty row.
    """
    a = np.asarray(values, dtype=np.int64)
    if a.ndim == 2 and a.shape[1] == width:
        return a
    if width == 0:
        return np.zeros((a.shape[0] if a.ndim == 2 else 1, 0), dtype=np.int64)
    return a.reshape(-1, width)


def neighborhood_size(radices: Sequence[int], t: int) -> int:
    """Number of completions within Hamming distance ``t`` (elementary symmetric sum)."""
    # coefficients of prod(1 + (r-1) x), truncated at degree t
    coef = [1]
    for r in radices:
        nxt = coef + [0]
        for d in range(len(coef)):
            nxt[d + 1] += coef[d] * (r - 1)
        coef = nxt
    return sum(coef[: t + 1])


# -- missingness simulation --------------------------------------------------------


def _resolve_target(data: Dataset, col: int, target: int | str) -> int:
    if isinstance(target, str):
        return data.schema[col].index(target)
    if not 0 <= target < data.schema[col].cardinality:
        raise DataError(f"target state {target} out of range for column {data.schema[col].name!r}")
    return int(target)


def simulate_missing(data: Dataset, spec: MissingnessSpec, fold: int = 0) -> tuple[Dataset, Completion]:
    """Blank cells of a complete dataset.

    Returns the blanked copy and the true values of the blanked cells as a
    completion aligned with the copy's ``missing_index``.  ``fold`` selects
    the block of cells used when ``spec.disjoint`` is set.
    """
    if data.n_missing:
        raise DataError("simulate_missing expects a dataset without missing cells")
    chosen = select_cells(data, spec, fold)
    if not chosen:
        return data, data.completion(())
    cells = data.cells.copy()
    rows, cols = np.array(chosen).T
    cells[rows, cols] = MISSING
    out = Dataset(data.schema, cells)
    truth = [int(data.cells[u, i]) for u, i in out.missing_index]
    return out, out.completion(truth)


def select_cells(data: Dataset, spec: MissingnessSpec, fold: int = 0) -> list[tuple[int, int]]:
    """Pick observed cells to hide according to ``spec`` (row-major order)."""
    columns = spec.columns if spec.columns is not None else tuple(range(data.m))
    for c in columns:
        if not 0 <= c < data.m:
            raise DataError(f"column {c} out of range")

    def eligible(col: int) -> np.ndarray:
        vals = data.cells[:, col]
        mask = vals != MISSING
        if spec.mode == "MNAR":
            mask &= vals == _resolve_target(data, col, spec.mnar_target_state)
        return np.nonzero(mask)[0]

    rng = np.random.default_rng(spec.seed)

    def draw(pool: list[tuple[int, int]], k: int) -> list[tuple[int, int]]:
        if spec.disjoint:
            start = fold * k
            if start + k > len(pool):
                raise DataError(f"fold {fold} needs {start + k} eligible cells, only {len(pool)} exist")
            perm = rng.permutation(len(pool))
            idx = perm[start : start + k]
        else:
            if k > len(pool):
                raise DataError(f"need {k} eligible cells, only {len(pool)} exist")
            idx = rng.choice(len(pool), size=k, replace=False)
        return [pool[j] for j in idx]

    chosen: list[tuple[int, int]] = []
    if spec.per_variable is not None:
        for c in columns:
            pool = [(int(u), c) for u in eligible(c)]
            chosen += draw(pool, spec.per_variable)
    else:
        pool = sorted((int(u), c) for c in columns for u in eligible(c))
        if spec.count is not None:
            k = spec.count
        else:
            k = int(round(spec.proportion * data.n * len(columns)))
        chosen = draw(pool, k)
    return sorted(chosen)
