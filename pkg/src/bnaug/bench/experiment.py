"""Repeated hide-and-impute experiments.

Each repetition draws (or reuses) a complete dataset, hides cells per one
or more :class:`MissingnessSpec`, runs every learner on the result, and
records imputation accuracy on the hidden cells.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..dataset import MISSING, Completion, DataError, Dataset, MissingnessSpec, select_cells, simulate_missing
from ..learner import ApproxConfig, learn_approx, learn_exact
from ..scoring import ScoringConfig
from .metrics import imputation_accuracy, paired_t_test
from .network import NetworkSpec, sample_network

LEARNERS = ("exact", "approx", "mode")
TASKS = ("impute", "classify", "ssl")


@dataclass(frozen=True)
class RunRecord:
    repetition: int
    spec_index: int
    seed: int
    target: int | str | None
    n_hidden: int
    accuracy: dict[str, float]
    total: dict[str, float | None]
    seconds: dict[str, float] = field(compare=False)


@dataclass(frozen=True)
class ExperimentReport:
    learners: tuple[str, ...]
    runs: tuple[RunRecord, ...]
    config: dict
    alpha: float = 0.05

    def accuracies(self, learner: str) -> list[float]:
        return [r.accuracy[learner] for r in self.runs]

    def totals(self, learner: str) -> list[float | None]:
        return [r.total[learner] for r in self.runs]

    def mean_accuracy(self, learner: str) -> float:
        acc = self.accuracies(learner)
        return sum(acc) / len(acc)

    def compare(self, a: str, b: str, alpha: float | None = None) -> tuple[float, bool]:
        return paired_t_test(self.accuracies(a), self.accuracies(b), self.alpha if alpha is None else alpha)

    def compare_external(self, learner: str, values: Sequence[float], alpha: float | None = None):
        """t-test of ``learner`` against accuracies produced outside the harness, aligned by run."""
        if len(values) != len(self.runs):
            raise ValueError(f"{len(values)} external accuracies for {len(self.runs)} runs")
        return paired_t_test(self.accuracies(learner), list(values), self.alpha if alpha is None else alpha)

    @property
    def t_stat(self) -> float | None:
        return self.compare(*self.learners[:2])[0] if len(self.learners) > 1 and len(self.runs) > 1 else None

    @property
    def significant(self) -> bool | None:
        return self.compare(*self.learners[:2])[1] if len(self.learners) > 1 and len(self.runs) > 1 else None

    def to_csv(self, path: str | Path | None = None, timing: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["run", "repetition", "spec", "seed", "target", "hidden"]
        for name in self.learners:
            header += [f"{name}_accuracy", f"{name}_total"] + ([f"{name}_seconds"] if timing else [])
        w.writerow(header)
        for k, r in enumerate(self.runs):
            row = [k, r.repetition, r.spec_index, r.seed, "" if r.target is None else r.target, r.n_hidden]
            for name in self.learners:
                tot = r.total[name]
                row += [repr(r.accuracy[name]), "" if tot is None else repr(tot)]
                if timing:
                    row.append(f"{r.seconds[name]:.4f}")
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def summary(self) -> str:
        lines = [f"runs: {len(self.runs)}"]
        for key in sorted(self.config):
            lines.append(f"  {key}: {self.config[key]}")
        for name in self.learners:
            secs = [r.seconds[name] for r in self.runs]
            lines.append(
                f"{name:>8}: mean accuracy {self.mean_accuracy(name):.4f}  "
                f"(mean {sum(secs) / len(secs):.3f}s per run)"
            )
        if len(self.learners) > 1 and len(self.runs) > 1:
            base = self.learners[0]
            for other in self.learners[1:]:
                t, sig = self.compare(base, other)
                verdict = "significant" if sig else "not significant"
                lines.append(f"{base} vs {other}: t = {t:.4f}, {verdict} at {self.alpha:.0%}")
        return "\n".join(lines)


def mode_imputer(data: Dataset) -> Completion:
    """Impute each missing cell with its column's observed mode."""
    modes = data.column_modes()
    return data.completion([modes[i] for _, i in data.missing_index])


def _hide(data: Dataset, spec: MissingnessSpec, fold: int, task: str):
    """Blank cells; return the blanked data, hidden positions in its missing_index, and true values."""
    if task != "ssl":
        blanked, truth = simulate_missing(data, spec, fold)
        return blanked, list(range(blanked.n_missing)), list(truth.values)
    chosen = select_cells(data, spec, fold)
    cells = data.cells.copy()
    for u, i in chosen:
        cells[u, i] = MISSING
    blanked = Dataset(data.schema, cells)
    where = {c: p for p, c in enumerate(blanked.missing_index)}
    return blanked, [where[c] for c in chosen], [int(data.cells[c]) for c in chosen]


def _run_learner(name: str, data: Dataset, cfg: ScoringConfig, acfg: ApproxConfig, budget: int):
    if name == "exact":
        sol = learn_exact(data, cfg, budget=budget)
        return sol.z, sol.total
    if name == "approx":
        sol = learn_approx(data, cfg, acfg)
        return sol.z, sol.total
    if name == "mode":
        return mode_imputer(data), None
    raise ValueError(f"unknown learner {name!r}; choose from {', '.join(LEARNERS)}")


@dataclass(frozen=True)
class _Job:
    source: Dataset | NetworkSpec
    specs: tuple[MissingnessSpec, ...]
    learners: tuple[str, ...]
    cfg: ScoringConfig
    acfg: ApproxConfig
    n_rows: int
    seed: int
    task: str
    budget: int


def _repetition(job: _Job, rep: int) -> list[RunRecord]:
    seed = job.seed + rep
    if isinstance(job.source, NetworkSpec):
        data = sample_network(job.source, job.n_rows, seed)
    else:
        data = job.source
    records = []
    for s, spec in enumerate(job.specs):
        if not spec.disjoint:
            spec = dataclasses.replace(spec, seed=spec.seed + rep)
        blanked, positions, truth = _hide(data, spec, rep, job.task)
        if not positions:
            raise DataError("no cells were hidden; imputation accuracy is undefined")
        acc, tot, secs = {}, {}, {}
        acfg = dataclasses.replace(job.acfg, seed=job.acfg.seed + rep)
        for name in job.learners:
            start = time.perf_counter()
            z, total = _run_learner(name, blanked, job.cfg, acfg, job.budget)
            secs[name] = time.perf_counter() - start
            acc[name] = imputation_accuracy([z.values[p] for p in positions], truth)
            tot[name] = total
        records.append(RunRecord(rep, s, seed, spec.mnar_target_state, len(positions), acc, tot, secs))
    return records


def run_experiment(
    source: Dataset | NetworkSpec,
    missingness: MissingnessSpec | Sequence[MissingnessSpec],
    learners: Sequence[str] = ("approx",),
    repetitions: int = 1,
    *,
    cfg: ScoringConfig = ScoringConfig(),
    acfg: ApproxConfig = ApproxConfig(),
    n_rows: int = 100,
    seed: int = 0,
    task: str = "impute",
    class_column: int | None = None,
    alpha: float = 0.05,
    budget: int = 2**20,
    workers: int = 1,
) -> ExperimentReport:
    """Repeat hide / learn / score ``repetitions`` times.

    Parameters
    ----------
    source : Dataset or NetworkSpec
        A complete dataset reused every repetition (for ``task="ssl"`` it may
        hold missing class cells, which stay unlabeled), or a network sampled
        afresh with seed ``seed + repetition``.
    missingness : MissingnessSpec or sequence of them
        Every spec is run once per repetition on the same sampled data, e.g.
        one MNAR spec per target state.
    learners : sequence of str
        Any of ``"exact"``, ``"approx"``, ``"mode"``.  The first two are
        compared by a paired t-test in :attr:`ExperimentReport.significant`.
    task : {"impute", "classify", "ssl"}
        ``classify`` and ``ssl`` restrict hiding to ``class_column``.
    workers : int
        Repetitions run in this many processes; results do not depend on it.
    """
    specs = (missingness,) if isinstance(missingness, MissingnessSpec) else tuple(missingness)
    learners = tuple(learners)
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if not learners or any(name not in LEARNERS for name in learners):
        raise ValueError(f"learners must be drawn from {LEARNERS}")
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    if task != "impute":
        if class_column is None:
            raise ValueError(f"task {task!r} needs class_column")
        specs = tuple(dataclasses.replace(s, columns=(class_column,)) for s in specs)
    job = _Job(source, specs, learners, cfg, acfg, n_rows, seed, task, budget)
    reps = range(repetitions)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_repetition, [job] * repetitions, reps))
    else:
        chunks = [_repetition(job, r) for r in reps]
    runs = tuple(r for chunk in chunks for r in chunk)
    config = {
        "learners": ",".join(learners),
        "repetitions": repetitions,
        "task": task,
        "class_column": class_column,
        "seed": seed,
        "n_rows": n_rows if isinstance(source, NetworkSpec) else source.n,
        "ess": cfg.ess,
        "k": cfg.k,
        "t": acfg.t,
        "restarts": acfg.restarts,
        "missingness": "; ".join(_describe(s) for s in specs),
    }
    return ExperimentReport(learners, runs, config, alpha)


def _describe(spec: MissingnessSpec) -> str:
    if spec.per_variable is not None:
        amount = f"{spec.per_variable} per variable"
    elif spec.count is not None:
        amount = f"{spec.count} cells"
    else:
        amount = f"{spec.proportion:g} of cells"
    target = f" target={spec.mnar_target_state}" if spec.mode == "MNAR" else ""
    cols = f" columns={list(spec.columns)}" if spec.columns is not None else ""
    return f"{spec.mode} {amount}{target}{cols}{' disjoint' if spec.disjoint else ''}"
