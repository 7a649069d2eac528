"""Reference networks: a line-oriented file format and ancestral sampling.

File layout::

    # comments and blank lines are ignored
    variable Smoker no yes
    variable Cancer no yes | Smoker
    cpt Smoker
    0.7 0.3
    cpt Cancer
    0.95 0.05        # Smoker=no
    0.8 0.2          # Smoker=yes

``variable NAME STATE... [| PARENT...]`` declares a variable; each
``cpt NAME`` block holds one row per parent configuration, parents in
declared order with the last one varying fastest.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dataset import Dataset, VariableSchema
from ..structopt import topological_order

ROW_TOL = 1e-9


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkVariable:
    name: str
    states: tuple[str, ...]
    parents: tuple[str, ...] = ()


@dataclass(frozen=True)
class NetworkSpec:
    variables: tuple[NetworkVariable, ...]
    cpts: tuple[np.ndarray, ...]

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise NetworkError("duplicate variable names")
        if len(self.cpts) != len(self.variables):
            raise NetworkError("one CPT per variable is required")
        index = {n: k for k, n in enumerate(names)}
        cpts = []
        for v, cpt in zip(self.variables, self.cpts):
            if len(v.states) < 2:
                raise NetworkError(f"variable {v.name!r} needs at least 2 states")
            for p in v.parents:
                if p not in index:
                    raise NetworkError(f"variable {v.name!r} has unknown parent {p!r}")
            q = math.prod(len(self.variables[index[p]].states) for p in v.parents)
            cpt = np.array(cpt, dtype=np.float64)
            if cpt.shape != (q, len(v.states)):
                raise NetworkError(f"CPT of {v.name!r} must be {q}x{len(v.states)}, got {cpt.shape}")
            if np.any(cpt < 0) or np.any(np.abs(cpt.sum(axis=1) - 1.0) > ROW_TOL):
                raise NetworkError(f"CPT rows of {v.name!r} must be non-negative and sum to 1")
            cpt.setflags(write=False)
            cpts.append(cpt)
        object.__setattr__(self, "cpts", tuple(cpts))
        if self.order() is None:
            raise NetworkError("parent graph has a cycle")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def parent_indices(self) -> tuple[tuple[int, ...], ...]:
        index = {n: k for k, n in enumerate(self.names)}
        return tuple(tuple(index[p] for p in v.parents) for v in self.variables)

    def order(self):
        return topological_order(self.parent_indices())

    def schema(self) -> tuple[VariableSchema, ...]:
        return tuple(VariableSchema(v.name, v.states) for v in self.variables)

    def joint(self) -> np.ndarray:
        """Full joint table, one axis per variable (small networks only)."""
        shape = tuple(len(v.states) for v in self.variables)
        out = np.empty(shape)
        pidx = self.parent_indices()
        for states in itertools.product(*(range(s) for s in shape)):
            p = 1.0
            for i, cpt in enumerate(self.cpts):
                p *= cpt[_config(states, pidx[i], shape), states[i]]
            out[states] = p
        return out


def _config(states, parents, shape) -> int:
    j = 0
    for p in parents:
        j = j * shape[p] + states[p]
    return j


def parse_network(text: str, source: str = "<network>") -> NetworkSpec:
    variables: list[NetworkVariable] = []
    rows: dict[str, list[list[float]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "variable":
            if rows:
                raise NetworkError(f"{source}:{lineno}: variable declared after CPT blocks")
            decl, _, par = " ".join(rest).partition("|")
            parts = decl.split()
            if len(parts) < 3:
                raise NetworkError(f"{source}:{lineno}: expected 'variable NAME STATE STATE...'")
            variables.append(NetworkVariable(parts[0], tuple(parts[1:]), tuple(par.split())))
        elif head == "cpt":
            if len(rest) != 1 or rest[0] not in {v.name for v in variables}:
                raise NetworkError(f"{source}:{lineno}: 'cpt' needs one declared variable name")
            current = rest[0]
            if current in rows:
                raise NetworkError(f"{source}:{lineno}: duplicate CPT for {current!r}")
            rows[current] = []
        else:
            if current is None:
                raise NetworkError(f"{source}:{lineno}: probabilities outside a cpt block")
            try:
                rows[current].append([float(x) for x in line.split()])
            except ValueError:
                raise NetworkError(f"{source}:{lineno}: could not parse probabilities") from None
    missing = [v.name for v in variables if v.name not in rows]
    if missing:
        raise NetworkError(f"{source}: no CPT for {', '.join(missing)}")
    try:
        return NetworkSpec(tuple(variables), tuple(np.array(rows[v.name]) for v in variables))
    except NetworkError as e:
        raise NetworkError(f"{source}: {e}") from None


def load_network(path: str | Path) -> NetworkSpec:
    return parse_network(Path(path).read_text(encoding="utf-8"), str(path))


def format_network(spec: NetworkSpec) -> str:
    lines = []
    for v in spec.variables:
        tail = f" | {' '.join(v.parents)}" if v.parents else ""
        lines.append(f"variable {v.name} {' '.join(v.states)}{tail}")
    for v, cpt in zip(spec.variables, spec.cpts):
        lines.append(f"cpt {v.name}")
        lines.extend(" ".join(repr(float(p)) for p in row) for row in cpt)
    return "\n".join(lines) + "\n"


def sample_network(spec: NetworkSpec, n: int, seed: int = 0) -> Dataset:
    """Draw ``n`` complete rows by ancestral sampling."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    shape = [len(v.states) for v in spec.variables]
    pidx = spec.parent_indices()
    cells = np.zeros((n, len(shape)), dtype=np.int64)
    for i in spec.order():
        conf = np.zeros(n, dtype=np.int64)
        for p in pidx[i]:
            conf = conf * shape[p] + cells[:, p]
        cdf = np.cumsum(spec.cpts[i], axis=1)[conf]
        u = rng.random(n)
        cells[:, i] = np.minimum((u[:, None] >= cdf).sum(axis=1), shape[i] - 1)
    return Dataset(spec.schema(), cells)
