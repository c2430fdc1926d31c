"""
Command-line front end.

    compbcp pvals --x X.csv --y y.csv --model model.yaml --out run/
    compbcp select --pvals run/ --procedure bh --alpha 0.1 --out sel/
    compbcp simulate --scenario dirichlet-desk --reps 50 --out sim/
    compbcp oracle --canonical two-boundaries
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table
from rich.tree import Tree

from compbcp import __version__
from compbcp.config import RunConfig, load_model, load_yaml, resolve
from compbcp.dcrt.matrix import COMPUTED, SCREENED, PValueMatrix, SpeedupConfig
from compbcp.dcrt.tester import DEFAULT_FOLDS, DEFAULT_K, pvalue_matrix
from compbcp.errors import CompBcpError, ContractError, InvariantBreach
from compbcp.io.loaders import JSONLoader, read_matrix_csv, read_vector_csv
from compbcp.models.covariates import CovariateModel, DataSet, check_model_rows, make_dataset
from compbcp.oracle.ci import compute_S_D, enumerate_markov_boundaries, verify_boundary_containment, verify_dense_identity
from compbcp.oracle.table import JointTable, canonical_tables
from compbcp.parallel import THREADS_ENV, default_n_jobs
from compbcp.pch.combiners import COMBINERS, single_test
from compbcp.selection.dense import condition_on_dense
from compbcp.selection.procedures import OVERFLOW_POLICIES, adaptive_holm, bh_select
from compbcp.selection.result import SelectionResult
from compbcp.sim.runner import run_simulation
from compbcp.sim.scenario import PRESETS, preset, scenario_from_dict

logger = logging.getLogger("compbcp.cli")
console = Console()

EXIT_OK, EXIT_BREACH, EXIT_USER = 0, 1, 2
# Row sums read from text files are accepted this far from 1, then renormalized.
INPUT_SUM_TOL = 1e-6
PROCEDURES = ("holm-b", "holm-s", "bh", "by")
METRICS_FILE = "metrics.csv"
REPORT_FILE = "report.json"
SINGLE_FILE = "single.json"


def setup_logging(verbose: bool = False, quiet: bool = False) -> None:
    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, RichHandler):
            root.removeHandler(handler)
    root.addHandler(RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=verbose))
    root.setLevel(logging.DEBUG if verbose else logging.WARNING)
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO)


def _index_list(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return sorted({int(v) for v in text.split(",") if v.strip()})
    except ValueError:
        raise ContractError(f"Expected a comma-separated list of column indices, got {text!r}") from None


# --- inputs ------------------------------------------------------------------


def _load_data(x_path: Path, y_path: Path, model: CovariateModel) -> DataSet:
    X = read_matrix_csv(x_path)
    y = read_vector_csv(y_path)
    check_model_rows(X, model, tol=INPUT_SUM_TOL)
    if model.constraint == "sum-one":
        X = X / X.sum(axis=1, keepdims=True)
    return make_dataset(X, y, model)


def _dcrt_params(args: argparse.Namespace, model_path: Path) -> dict[str, Any]:
    """Built-in defaults < the model file's ``dcrt:`` section < flags."""
    defaults = {"K": DEFAULT_K, "speedups": "none", "symmetrize": False, "folds": DEFAULT_FOLDS}
    section = load_yaml(model_path).get("dcrt", {})
    flags = {
        "K": args.K,
        "speedups": args.speedups,
        "symmetrize": True if args.symmetrize else None,
        "folds": args.folds,
    }
    params = resolve(defaults, section, flags)
    speedups = params["speedups"]
    params["speedups"] = SpeedupConfig(**speedups) if isinstance(speedups, dict) else SpeedupConfig.parse(speedups)
    return params


def _compute_matrix(args: argparse.Namespace, seed: int, threads: int, dense: list[int] | None = None):
    model = load_model(args.model)
    data = _load_data(args.x, args.y, model)
    params = _dcrt_params(args, args.model)
    options = dict(
        K=int(params["K"]),
        seed=seed,
        speedups=params["speedups"],
        folds=int(params["folds"]),
        n_jobs=threads,
        progress=not args.quiet,
    )
    if dense is not None:
        matrix = condition_on_dense(data, model, dense, symmetrize=bool(params["symmetrize"]), **options)
    else:
        matrix = pvalue_matrix(data, model, symmetrize=bool(params["symmetrize"]), **options)
    echo = {
        "x": str(args.x),
        "y": str(args.y),
        "model": model.to_dict(),
        "K": options["K"],
        "folds": options["folds"],
        "symmetrize": bool(params["symmetrize"]),
        "speedups": options["speedups"].to_dict(),
    }
    return matrix, echo


# --- pvals -------------------------------------------------------------------


def cmd_pvals(args: argparse.Namespace) -> int:
    threads = args.threads or default_n_jobs()
    matrix, echo = _compute_matrix(args, args.seed, threads)
    run = RunConfig("pvals", args.out, seed=args.seed, threads=threads, params=echo)
    matrix.save(run.out)
    run.write()
    logger.info(
        f"Wrote {matrix.size}x{matrix.size} matrix to {run.out} "
        f"({matrix.count(COMPUTED)} computed, {matrix.count(SCREENED)} screened)"
    )
    return EXIT_OK


# --- select ------------------------------------------------------------------


def _matrix_for_selection(args: argparse.Namespace, threads: int, dense: list[int] | None):
    if args.pvals is not None:
        matrix = PValueMatrix.load(args.pvals)
        echo = {"pvals": str(args.pvals)}
        if dense is not None:
            matrix = matrix.submatrix([matrix.position(label) for label in dense])
            matrix.meta["dense"] = dense
        return matrix, echo
    if args.x is None or args.y is None or args.model is None:
        raise ContractError("select needs --pvals or all of --x, --y and --model")
    return _compute_matrix(args, args.seed, threads, dense)


def _selection_table(result: SelectionResult) -> Table:
    table = Table(title=f"{result.procedure} at alpha={result.alpha:g}, s_bar={result.s_bar}")
    table.add_column("step", justify="right")
    table.add_column("column", justify="right")
    table.add_column("PCH p-value", justify="right")
    table.add_column("threshold", justify="right")
    table.add_column("decision")
    for step in result.trace:
        style = "bold green" if step.decision.startswith("reject") else None
        table.add_row(
            str(step.step),
            str(step.candidate),
            f"{step.pvalue:.4g}",
            f"{step.threshold:.4g}",
            step.decision,
            style=style,
        )
    return table


def _run_procedure(matrix: PValueMatrix, procedure: str, s_bar: int, alpha: float, overflow: str) -> SelectionResult:
    if procedure == "holm-b":
        return adaptive_holm(matrix, s_bar, alpha, "bonferroni", overflow_policy=overflow)
    if procedure == "holm-s":
        return adaptive_holm(matrix, s_bar, alpha, "simes", overflow_policy=overflow)
    return bh_select(matrix, s_bar, alpha, by=procedure == "by")


def cmd_select(args: argparse.Namespace) -> int:
    threads = args.threads or default_n_jobs()
    dense = _index_list(args.dense)
    matrix, echo = _matrix_for_selection(args, threads, dense)
    d = matrix.size
    s_bar = d - 1 if args.s_bar is None else args.s_bar
    if not 1 <= s_bar <= d - 1:
        raise ContractError(f"--s-bar must lie in [1, {d - 1}] for a {d}-column matrix, got {s_bar}")
    echo.update({"s_bar": s_bar, "dense": dense})

    if args.single is not None:
        value = single_test(matrix, matrix.position(args.single), s_bar, args.combiner)
        print(f"{value:.10g}")
        if args.out is not None:
            echo.update({"single": args.single, "combiner": args.combiner})
            run = RunConfig("select", args.out, seed=args.seed, threads=threads, params=echo)
            JSONLoader(run.out / SINGLE_FILE).save({"column": args.single, "pvalue": value, "s_bar": s_bar})
            run.write()
        return EXIT_OK

    result = _run_procedure(matrix, args.procedure, s_bar, args.alpha, args.overflow)
    console.print(_selection_table(result))
    console.print(f"Rejected: {result.rejected or 'none'} ({result.validity_regime})")
    for caveat in result.caveats:
        console.print(f"[yellow]caveat:[/yellow] {caveat}")
    if args.out is not None:
        echo.update({"procedure": args.procedure, "alpha": args.alpha, "overflow": args.overflow})
        run = RunConfig("select", args.out, seed=args.seed, threads=threads, params=echo)
        result.save(run.out, config=run.to_dict())
        run.write()
    return EXIT_OK


# --- simulate ----------------------------------------------------------------


def _scenario(text: str):
    path = Path(text)
    if path.suffix in (".yaml", ".yml") or path.is_file():
        return scenario_from_dict(load_yaml(path))
    return preset(text)


def cmd_simulate(args: argparse.Namespace) -> int:
    threads = args.threads or default_n_jobs()
    scenario = _scenario(args.scenario)
    reps = scenario.reps if args.reps is None else args.reps
    if reps < 1:
        raise ContractError(f"--reps must be >= 1, got {reps}")
    run = RunConfig("simulate", args.out, seed=args.seed, threads=threads, params={"scenario": scenario.to_dict(), "reps": reps})
    metrics = run_simulation(scenario, seed=args.seed, reps=reps, n_jobs=threads, progress=not args.quiet)
    metrics.to_csv(run.out / METRICS_FILE)
    run.write()

    table = Table(title=f"{scenario.name}: {reps} replicates")
    for column in ("method", "snr", "metric", "value", "se"):
        table.add_column(column, justify="left" if column in ("method", "metric") else "right")
    for row in metrics.rows:
        table.add_row(row["method"], f"{row['snr']:g}", row["metric"], f"{row['value']:.3f}", f"{row['se']:.3f}")
    console.print(table)
    return EXIT_OK


# --- oracle ------------------------------------------------------------------


def _table(args: argparse.Namespace) -> tuple[JointTable, str]:
    if args.table is not None:
        return JointTable.load(args.table), str(args.table)
    tables = canonical_tables()
    if args.canonical not in tables:
        raise ContractError(f"Unknown canonical table {args.canonical!r}; choose from {', '.join(sorted(tables))}")
    return tables[args.canonical], args.canonical


def cmd_oracle(args: argparse.Namespace) -> int:
    table, source = _table(args)
    dense = _index_list(args.dense)
    report = enumerate_markov_boundaries(table)
    verify_boundary_containment(table, report)
    payload = {"table": source, **report.to_dict()}

    if dense is not None:
        payload["dense"] = dense
        payload["S_D"] = sorted(compute_S_D(table, dense))
        try:
            payload["dense_identity"] = "holds" if verify_dense_identity(table, dense) else "not-applicable"
        except InvariantBreach as e:
            # Tables without the connectivity condition can legitimately differ.
            payload["dense_identity"] = "differs"
            payload["notes"].append(str(e))

    tree = Tree(f"[bold blue]{source}[/bold blue] (p={table.p}, {table.constraint})")
    boundaries = tree.add(f"Markov boundaries ({len(report.boundaries)})")
    for members, trivial in zip(report.boundaries, report.trivial):
        boundaries.add(f"{sorted(members)}" + (" [dim]trivial[/dim]" if trivial else ""))
    tree.add(f"S = {sorted(report.S)}")
    tree.add(f"unique nontrivial boundary: {report.unique_nontrivial}")
    if dense is not None:
        tree.add(f"S_D = {payload['S_D']} for D = {dense} ({payload['dense_identity']})")
    for note in payload["notes"]:
        tree.add(f"[yellow]{note}[/yellow]")
    console.print(tree)

    if args.out is not None:
        run = RunConfig("oracle", args.out, params={"table": source, "dense": dense})
        JSONLoader(run.out / REPORT_FILE).save(payload)
        run.write()
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compbcp", description="Markov-boundary inference for compositional covariates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging.")
    parser.add_argument("-q", "--quiet", action="store_true", help="No progress bars, warnings only.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=0, help="Master seed (default 0).")
        p.add_argument("--threads", type=int, default=None, help=f"Worker count (default ${THREADS_ENV} or 1).")

    def data_inputs(p: argparse.ArgumentParser, required: bool) -> None:
        p.add_argument("--x", type=Path, required=required, help="Headerless covariate CSV, one row per sample.")
        p.add_argument("--y", type=Path, required=required, help="Headerless response CSV, one value per row.")
        p.add_argument("--model", type=Path, required=required, help="YAML model file with a 'model:' section.")
        p.add_argument("--K", type=int, default=None, help=f"Resamples per entry (default {DEFAULT_K}).")
        p.add_argument("--folds", type=int, default=None, help=f"Distillation CV folds (default {DEFAULT_FOLDS}).")
        p.add_argument(
            "--speedups",
            default=None,
            help="Comma list of lasso, early-stop, adaptive, or all / none (default none).",
        )
        p.add_argument("--symmetrize", action="store_true", help="Compute i < j only and mirror.")

    pvals = sub.add_parser("pvals", help="Compute the base p-value matrix.")
    data_inputs(pvals, required=True)
    common(pvals)
    pvals.add_argument("--out", type=Path, required=True, help="Output directory.")
    pvals.set_defaults(func=cmd_pvals)

    select = sub.add_parser("select", help="Select Markov-boundary columns or test one column.")
    select.add_argument("--pvals", type=Path, default=None, help="Matrix directory or CSV written by 'pvals'.")
    data_inputs(select, required=False)
    common(select)
    select.add_argument("--procedure", choices=PROCEDURES, default="bh", help="holm-b, holm-s (FWER), bh or by (FDR).")
    select.add_argument("--alpha", type=float, default=0.1, help="Target level (default 0.1).")
    select.add_argument("--s-bar", type=int, default=None, help="Strict bound on the boundary size (default d - 1).")
    select.add_argument("--dense", default=None, help="Comma list of columns to test, conditioning on the rest.")
    select.add_argument("--single", type=int, default=None, help="Print the PCH p-value of this column only.")
    select.add_argument("--combiner", choices=COMBINERS, default="simes", help="Combiner for --single.")
    select.add_argument("--overflow", choices=OVERFLOW_POLICIES, default="stop", help="Adaptive Holm past s_bar.")
    select.add_argument("--out", type=Path, default=None, help="Output directory.")
    select.set_defaults(func=cmd_select)

    simulate = sub.add_parser("simulate", help="Run a simulation scenario.")
    simulate.add_argument(
        "--scenario", required=True, help=f"Preset name ({', '.join(sorted(PRESETS))}) or YAML file."
    )
    simulate.add_argument("--reps", type=int, default=None, help="Replicates (default: the scenario's).")
    common(simulate)
    simulate.add_argument("--out", type=Path, required=True, help="Output directory.")
    simulate.set_defaults(func=cmd_simulate)

    oracle = sub.add_parser("oracle", help="Exact Markov-boundary analysis of a discrete table.")
    source = oracle.add_mutually_exclusive_group(required=True)
    source.add_argument("--table", type=Path, help="JSON table with p, constraint and atoms.")
    source.add_argument("--canonical", help=f"Built-in table ({', '.join(sorted(canonical_tables()))}).")
    oracle.add_argument("--dense", default=None, help="Comma list D; reports S_D.")
    oracle.add_argument("--out", type=Path, default=None, help="Output directory.")
    oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USER if e.code else EXIT_OK

    setup_logging(args.verbose, args.quiet)
    try:
        return args.func(args)
    except InvariantBreach as e:
        logger.error(f"Internal check failed: {e}")
        return EXIT_BREACH
    except (CompBcpError, FileNotFoundError) as e:
        console.print(f"error: {e}", style="red", markup=False, highlight=False)
        return EXIT_USER
    except Exception:
        logger.exception("Unexpected failure")
        return EXIT_BREACH


if __name__ == "__main__":
    sys.exit(main())
