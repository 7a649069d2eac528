"""Command line interface: ``bnaug <command> ...``.

Exit status is 0 on success, 2 on a configuration or input error and 3
when an exact computation exceeds its budget.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..augment import build_augmented_problem
from ..dataset import (
    DataError,
    Dataset,
    MissingnessSpec,
    apply_completion,
    load_csv,
    read_cell_values,
    simulate_missing,
    write_completion,
    write_csv,
)
from ..errors import BudgetExceeded
from ..learner import ApproxConfig, Solution, learn_approx, learn_exact
from ..scoring import ScoringConfig, build_candidate_list
from ..structopt import DEFAULT_COMPLETION_BUDGET, filter_candidates
from .experiment import LEARNERS, TASKS, run_experiment
from .metrics import imputation_accuracy
from .network import load_network, sample_network
from .scorefile import export_scores

EXIT_CONFIG = 2
EXIT_BUDGET = 3


def _scoring_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ess", type=float, default=1.0, help="BDeu equivalent sample size (default 1)")
    p.add_argument("--k", type=int, default=3, help="maximum number of parents (default 3)")


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("data", type=Path, help="CSV dataset with a header row")
    p.add_argument("--missing-token", default="?", help="token marking missing cells (default '?')")


def _approx_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t", type=int, default=1, help="Hamming radius of each move (default 1)")
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--init", choices=("mode", "random"), default="mode")
    p.add_argument("--seed", type=int, default=0)


def _missing_args(p: argparse.ArgumentParser, multi_target: bool = False) -> None:
    p.add_argument("--mode", choices=("MNAR", "MAR"), default="MNAR", type=str.upper)
    amount = p.add_mutually_exclusive_group(required=True)
    amount.add_argument("--per-variable", type=int, help="cells to hide in every eligible column")
    amount.add_argument("--count", type=int, help="total cells to hide")
    amount.add_argument("--proportion", type=float, help="fraction of all cells in the eligible columns to hide")
    if multi_target:
        p.add_argument("--target", action="append", help="MNAR state label or index; repeat to run several")
    else:
        p.add_argument("--target", help="MNAR state label or index")
    p.add_argument("--columns", help="comma-separated column names eligible for hiding")
    p.add_argument("--disjoint", action="store_true", help="draw disjoint cell blocks across repetitions")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bnaug", description="Structure learning and imputation for discrete data with missing cells."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a complete dataset from a network file")
    p.add_argument("network", type=Path)
    p.add_argument("--rows", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", type=Path, required=True)

    p = sub.add_parser("blank", help="hide cells of a complete dataset")
    _data_args(p)
    _missing_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fold", type=int, default=0, help="block index when --disjoint is set")
    p.add_argument("--output", "-o", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True, help="where to write the hidden true values")

    for name, helptext in (("learn-exact", "globally optimal DAG and completion"), ("learn-approx", "hill-climbing learner")):
        p = sub.add_parser(name, help=helptext)
        _data_args(p)
        _scoring_args(p)
        if name == "learn-exact":
            p.add_argument("--budget", type=int, default=DEFAULT_COMPLETION_BUDGET, help="maximum completions searched")
        else:
            _approx_args(p)
        p.add_argument("--output", "-o", type=Path, help="write the completion as row,col,state lines")
        p.add_argument("--imputed", type=Path, help="write the completed dataset as CSV")

    p = sub.add_parser("augment-export", help="write the augmented parent-set score file")
    _data_args(p)
    _scoring_args(p)
    p.add_argument("--output", "-o", type=Path, required=True)

    p = sub.add_parser("evaluate", help="imputation accuracy of predicted against true cell values")
    _data_args(p)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--pred", type=Path, required=True)

    p = sub.add_parser("experiment", help="repeated hide / learn / score runs")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--network", type=Path, help="network file sampled afresh each repetition")
    src.add_argument("--data", type=Path, help="complete CSV dataset reused each repetition")
    p.add_argument("--missing-token", default="?")
    p.add_argument("--rows", type=int, default=100, help="rows sampled per repetition from --network")
    _missing_args(p, multi_target=True)
    p.add_argument("--learner", action="append", choices=LEARNERS, help="repeat to compare (default approx)")
    p.add_argument("--repetitions", type=int, default=20)
    p.add_argument("--task", choices=TASKS, default="impute")
    p.add_argument("--class-column", help="class column name for classify / ssl tasks")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--budget", type=int, default=DEFAULT_COMPLETION_BUDGET)
    p.add_argument("--external", type=Path, help="file with one external accuracy per run, for a paired t-test")
    p.add_argument("--report", type=Path, help="CSV report path")
    p.add_argument("--no-timing", action="store_true", help="omit timing columns from the CSV report")
    _scoring_args(p)
    _approx_args(p)
    return parser


def _columns(data: Dataset, names: str | None) -> tuple[int, ...] | None:
    if names is None:
        return None
    out = []
    for name in names.split(","):
        name = name.strip()
        if name not in data.names:
            raise DataError(f"unknown column {name!r}")
        out.append(data.names.index(name))
    return tuple(out)


def _target(data: Dataset, columns, token: str | None):
    if token is None:
        return None
    cols = columns if columns is not None else range(data.m)
    if all(token in data.schema[c].states for c in cols):
        return token
    if token.isdigit():
        return int(token)
    raise DataError(f"target {token!r} is not a state of every eligible column")


def _spec(args, data: Dataset, target, seed: int) -> MissingnessSpec:
    columns = _columns(data, args.columns)
    return MissingnessSpec(
        mode=args.mode,
        count=args.count,
        per_variable=args.per_variable,
        proportion=args.proportion,
        mnar_target_state=_target(data, columns, target) if args.mode == "MNAR" else None,
        columns=columns,
        seed=seed,
        disjoint=args.disjoint,
    )


def _report_solution(data: Dataset, sol: Solution, args) -> None:
    print(f"score: {sol.total:.6f}")
    print(f"iterations: {sol.iterations}  converged: {sol.converged}")
    arcs = sol.dag.arcs
    print(f"arcs ({len(arcs)}):")
    for p, c in arcs:
        print(f"  {data.names[p]} -> {data.names[c]}")
    if args.output:
        write_completion(data, sol.z, args.output)
    if args.imputed:
        write_csv(apply_completion(data, sol.z), args.imputed, args.missing_token)


def _cmd_sample(args) -> None:
    spec = load_network(args.network)
    write_csv(sample_network(spec, args.rows, args.seed), args.output)


def _cmd_blank(args) -> None:
    data = load_csv(args.data, args.missing_token)
    blanked, truth = simulate_missing(data, _spec(args, data, args.target, args.seed), args.fold)
    write_csv(blanked, args.output, args.missing_token)
    write_completion(blanked, truth, args.truth)
    print(f"hid {blanked.n_missing} cells")


def _cmd_learn(args) -> None:
    data = load_csv(args.data, args.missing_token)
    cfg = ScoringConfig(args.ess, args.k)
    if args.command == "learn-exact":
        sol = learn_exact(data, cfg, budget=args.budget)
    else:
        acfg = ApproxConfig(args.t, args.init, args.restarts, args.max_iters, args.seed)
        sol = learn_approx(data, cfg, acfg)
    _report_solution(data, sol, args)


def _cmd_export(args) -> None:
    data = load_csv(args.data, args.missing_token)
    cands = build_candidate_list(data, ScoringConfig(args.ess, args.k))
    if data.n_missing:
        problem = build_augmented_problem(data, cands)
        export_scores(problem, args.output)
        print(f"{problem.n_nodes} variables ({problem.n_nodes - data.m} gadget), lambda = {problem.lambda_:.6f}")
    else:
        export_scores(filter_candidates(cands, ()), args.output)
        print(f"{data.m} variables")


def _cmd_evaluate(args) -> None:
    data = load_csv(args.data, args.missing_token)
    truth = read_cell_values(data, args.truth)
    pred = read_cell_values(data, args.pred)
    missing = sorted(set(truth) - set(pred))
    if missing:
        raise DataError(f"prediction file lacks cell {missing[0]}")
    cells = sorted(truth)
    acc = imputation_accuracy([pred[c] for c in cells], [truth[c] for c in cells])
    print(f"accuracy: {acc:.6f} ({len(cells)} cells)")


def _cmd_experiment(args) -> None:
    if args.network is not None:
        source = load_network(args.network)
        probe = sample_network(source, 1, 0)
    else:
        source = load_csv(args.data, args.missing_token)
        probe = source
    targets = args.target if args.target else [None]
    specs = [_spec(args, probe, t, args.seed) for t in targets]
    class_column = _columns(probe, args.class_column)[0] if args.class_column else None
    report = run_experiment(
        source,
        specs,
        learners=args.learner or ["approx"],
        repetitions=args.repetitions,
        cfg=ScoringConfig(args.ess, args.k),
        acfg=ApproxConfig(args.t, args.init, args.restarts, args.max_iters, args.seed),
        n_rows=args.rows,
        seed=args.seed,
        task=args.task,
        class_column=class_column,
        alpha=args.alpha,
        budget=args.budget,
        workers=args.workers,
    )
    print(report.summary())
    if args.external:
        values = [float(x) for x in args.external.read_text().split()]
        t, sig = report.compare_external(report.learners[0], values)
        print(f"{report.learners[0]} vs external: t = {t:.4f}, {'significant' if sig else 'not significant'}")
    if args.report:
        report.to_csv(args.report, timing=not args.no_timing)


COMMANDS = {
    "sample": _cmd_sample,
    "blank": _cmd_blank,
    "learn-exact": _cmd_learn,
    "learn-approx": _cmd_learn,
    "augment-export": _cmd_export,
    "evaluate": _cmd_evaluate,
    "experiment": _cmd_experiment,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except BudgetExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
