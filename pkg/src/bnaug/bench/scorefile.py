"""Parent-set score files in the plain text format read by external exact solvers.

::

    <number of variables>
    <name> <number of entries>
    <score> <number of parents> <parent names...>
    ...
"""

from __future__ import annotations

from pathlib import Path

from ..augment import AugmentedProblem
from ..structopt import ScoreTable


class ScoreFileError(ValueError):
    pass


def format_scores(table: ScoreTable | AugmentedProblem) -> str:
    if isinstance(table, AugmentedProblem):
        table = table.to_score_table()
    names = table.names
    lines = [str(table.m)]
    for i, entries in enumerate(table.entries):
        lines.append(f"{names[i]} {len(entries)}")
        for parents, score in entries:
            score = 0.0 if score == 0.0 else score
            lines.append(" ".join([f"{score:.6f}", str(len(parents))] + [names[p] for p in parents]))
    return "\n".join(lines) + "\n"


def export_scores(table: ScoreTable | AugmentedProblem, path: str | Path) -> None:
    Path(path).write_text(format_scores(table), encoding="utf-8")


def parse_scores(text: str, source: str = "<scores>") -> ScoreTable:
    lines = [(k, ln.split()) for k, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    pos = 0

    def take():
        nonlocal pos
        if pos >= len(lines):
            raise ScoreFileError(f"{source}: unexpected end of file")
        pos += 1
        return lines[pos - 1]

    def integer(tok, lineno, what):
        try:
            v = int(tok)
        except ValueError:
            raise ScoreFileError(f"{source}:{lineno}: {what} must be an integer, got {tok!r}") from None
        if v < 0:
            raise ScoreFileError(f"{source}:{lineno}: {what} must be >= 0")
        return v

    lineno, toks = take()
    if len(toks) != 1:
        raise ScoreFileError(f"{source}:{lineno}: first line must hold the variable count")
    m = integer(toks[0], lineno, "variable count")
    names, raw = [], []
    for _ in range(m):
        lineno, toks = take()
        if len(toks) != 2:
            raise ScoreFileError(f"{source}:{lineno}: expected '<name> <entry count>'")
        names.append(toks[0])
        count = integer(toks[1], lineno, "entry count")
        entries = []
        for _ in range(count):
            lineno, toks = take()
            try:
                score = float(toks[0])
            except ValueError:
                raise ScoreFileError(f"{source}:{lineno}: bad score {toks[0]!r}") from None
            k = integer(toks[1], lineno, "parent count") if len(toks) > 1 else -1
            if k < 0 or len(toks) != 2 + k:
                raise ScoreFileError(f"{source}:{lineno}: parent count does not match the parents listed")
            entries.append((lineno, score, toks[2:]))
        raw.append(entries)
    if pos != len(lines):
        raise ScoreFileError(f"{source}:{lines[pos][0]}: trailing content")
    if len(set(names)) != len(names):
        raise ScoreFileError(f"{source}: duplicate variable names")
    index = {n: k for k, n in enumerate(names)}
    table = []
    for i, entries in enumerate(raw):
        rows = []
        for lineno, score, parents in entries:
            unknown = [p for p in parents if p not in index]
            if unknown:
                raise ScoreFileError(f"{source}:{lineno}: unknown parent {unknown[0]!r}")
            rows.append((tuple(index[p] for p in parents), score))
        table.append(tuple(rows))
    try:
        return ScoreTable(tuple(table), tuple(names))
    except ValueError as e:
        raise ScoreFileError(f"{source}: {e}") from None


def import_scores(path: str | Path) -> ScoreTable:
    return parse_scores(Path(path).read_text(encoding="utf-8"), str(path))
