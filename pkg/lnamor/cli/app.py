import logging
from pathlib import Path
from time import perf_counter
from typing import Callable, Optional

import numpy as np
import typer
from prettytable import PrettyTable
from pydantic import ValidationError

from lnamor.lib import constants as c
from lnamor.lib.errors import ConfigError, LnamorError
from lnamor.lib.lnamor import Lnamor
from lnamor.lib.logging import set_level, setup_logging
from lnamor.lib.network import parse_network
from lnamor.lib.simulate import (
    difference,
    hinf_norm,
    trajectory_header,
    trajectory_rows,
)
from lnamor.lib.simulate.moments import TrajectoryBundle
from lnamor.schemas.config import RunConfig, read_model_source
from lnamor.schemas.reports import (
    AnalysisReport,
    MatrixClassSchema,
    Meta,
    ReductionReport,
    SweepSummary,
)

from .output import write_csv, write_json

# Initialize logging before CLI runs
setup_logging()

logger = logging.getLogger(__name__)

app = typer.Typer(no_args_is_help=True)

METHOD_OPTION = typer.Option(
    c.CLI_STRUCTURED_BSP, "--method", help="Methods, comma-separated"
)
MODEL_OPTION = typer.Option(..., "--model", help="Model file or shipped model name")
OUT_OPTION = typer.Option(".", "--out", help="Output directory")
VERBOSE_OPTION = typer.Option(False, "--verbose", help="Log at DEBUG level")
X0_OPTION = typer.Option(None, "--x0", help="Initial state, comma-separated")


class Run:
    """A configured invocation: model, facade and provenance block."""

    def __init__(self, config: RunConfig):
        if config.verbose:
            set_level(logging.DEBUG)
        path, source = read_model_source(config.model_path)
        self.config = config
        x0 = None if config.x0 is None else np.array(config.x0)
        self.lna = Lnamor(parse_network(source.decode("utf-8")), x0)
        self.meta = Meta(version=c.VERSION, config_hash=config.config_hash(source))
        self.out = Path(config.output_dir)
        logger.info(f"Loaded {path} ({self.lna.network.n_species} species)")

    def csv(self, name: str, header: list[str], rows: list[list]) -> None:
        write_csv(self.out / name, header, rows, self.meta.config_hash)


def _execute(body: Callable[[], None]) -> None:
    """Run a command body and map failures to exit codes."""
    try:
        body()
    except ValidationError as e:
        typer.echo(f"error: invalid configuration: {e.errors()[0]['msg']}", err=True)
        raise typer.Exit(code=c.EXIT_CONFIG)
    except LnamorError as e:
        typer.echo(f"error: {type(e).__name__}: {e}", err=True)
        raise typer.Exit(code=e.exit_code)


def _print_table(title: str, header: list[str], rows: list[list]) -> None:
    table = PrettyTable(header)
    table.title = title
    table.float_format = ".4e"
    table.align = "r"
    for row in rows:
        table.add_row(row)
    print(table)


def _require_partition(run: Run) -> None:
    if not run.config.lump:
        raise ConfigError("--lump is required for this command")
    run.config.check_partition(run.lna.network)


@app.command()
def analyze(
    model: str = MODEL_OPTION,
    out: str = OUT_OPTION,
    x0: Optional[str] = X0_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """
    Steady state, drift matrix and drift classification.
    """

    def body():
        run = Run(
            RunConfig(
                model_path=model,
                command=c.ANALYZE,
                output_dir=out,
                x0=x0,
                verbose=verbose,
            )
        )
        start = perf_counter()
        analysis = run.lna.analyze()
        report = AnalysisReport(
            meta=run.meta,
            species=list(run.lna.species),
            steady_state=[float(v) for v in analysis.steady_state],
            drift=[[float(v) for v in row] for row in analysis.drift],
            classes=MatrixClassSchema.from_report(analysis.report),
            certificate_available=analysis.certificate_available,
        )
        write_json(run.out / c.ANALYSIS_FILE, report)
        flags = analysis.report
        _print_table(
            "analysis",
            ["species", "x_ss"],
            [
                [name, float(v)]
                for name, v in zip(run.lna.species, analysis.steady_state)
            ],
        )
        print(
            f"metzler={flags.is_metzler} sign_metzler={flags.is_sign_metzler} "
            f"H={flags.is_h} certificate={analysis.certificate_available} "
            f"({perf_counter() - start:.3f}s)"
        )

    _execute(body)


def _reduce_all(run: Run) -> list:
    """Run every structured method of the configuration; timescale is skipped."""
    config = run.config
    full = run.lna.realization()
    results = []
    for method in config.reduction_methods:
        if method == c.TIMESCALE:
            continue
        start = perf_counter()
        result = run.lna.reduce(config.preserve, config.lump, config.keep, method)
        measured = hinf_norm(difference(full, result.reduced))
        results.append((result, measured, perf_counter() - start))
    return results


@app.command()
def reduce(
    model: str = MODEL_OPTION,
    preserve: str = typer.Option("", "--preserve", help="Preserved species, a,b"),
    lump: str = typer.Option("", "--lump", help='Lumped groups, "c,d;e,f,g"'),
    keep: str = typer.Option("", "--keep", help="Kept states per group, 1,2"),
    method: str = METHOD_OPTION,
    out: str = OUT_OPTION,
    x0: Optional[str] = X0_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """
    Structure-preserving reduction of the linearised LNA.
    """

    def body():
        run = Run(
            RunConfig(
                model_path=model,
                command=c.REDUCE,
                preserve=preserve,
                lump=lump,
                keep=keep,
                methods=method,
                output_dir=out,
                x0=x0,
                verbose=verbose,
            )
        )
        _require_partition(run)
        if not run.config.keep:
            raise ConfigError("--keep is required for reduce")
        if c.TIMESCALE in run.config.reduction_methods:
            raise ConfigError("timescale has no reduction file; use validate")

        rows, sigma_rows = [], []
        for result, measured, elapsed in _reduce_all(run):
            report = ReductionReport.from_result(run.meta, result, measured)
            write_json(run.out / c.REDUCTION_FILE.format(method=result.method), report)
            kept = set(result.kept)
            for index, value in enumerate(result.sigma):
                sigma_rows.append(
                    [
                        result.method,
                        _block_of(result.layout, index),
                        index,
                        float(value),
                        index in kept,
                    ]
                )
            rows.append(
                [
                    result.method,
                    result.gramian_provenance,
                    result.reduced.n,
                    result.hankel_tail if result.hankel_tail is not None else "-",
                    measured,
                    f"{elapsed:.3f}s",
                ]
            )
        run.csv(c.SIGMA_FILE, ["method", "block", "index", "sigma", "kept"], sigma_rows)
        _print_table(
            "reduction",
            ["method", "gramians", "states", "bound", "measured", "runtime"],
            rows,
        )

    _execute(body)


def _block_of(layout, index: int) -> int:
    """0 for the preserved block, i for the i-th lumped group."""
    if index < layout.preserved:
        return 0
    for number, block in enumerate(layout.group_slices(), start=1):
        if block.start <= index < block.stop:
            return number
    raise IndexError(index)


def _write_cov_errors(run: Run, labels: list[str], reports: list) -> None:
    grid = reports[0].time_grid
    p = reports[0].cov_error.shape[1]
    for i in range(p):
        for j in range(i, p):
            rows = [
                [float(t), *(float(r.cov_error[step, i, j]) for r in reports)]
                for step, t in enumerate(grid)
            ]
            run.csv(c.COV_ERROR_FILE.format(i=i + 1, j=j + 1), ["t", *labels], rows)


@app.command()
def validate(
    model: str = MODEL_OPTION,
    preserve: str = typer.Option("", "--preserve", help="Preserved (slow) species"),
    lump: str = typer.Option("", "--lump", help='Lumped (fast) groups, "c,d;e,f,g"'),
    keep: str = typer.Option("", "--keep", help="Kept states per group"),
    method: str = METHOD_OPTION,
    slow: str = typer.Option(
        "", "--slow", help="Slow species for timescale (defaults to --preserve)"
    ),
    epsilon: float = typer.Option(0.01, "--epsilon", help="Time-scale ratio"),
    horizon: float = typer.Option(50.0, "--horizon", help="Comparison horizon"),
    sweep: str = typer.Option("", "--sweep", help="Epsilon values, descending"),
    points: int = typer.Option(501, "--points", help="Time grid points"),
    out: str = OUT_OPTION,
    workers: int = typer.Option(1, "--workers", help="Worker threads"),
    x0: Optional[str] = X0_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """
    Compare full and reduced models and run the averaging sweep.
    """

    def body():
        run = Run(
            RunConfig(
                model_path=model,
                command=c.VALIDATE,
                preserve=preserve,
                slow=slow,
                lump=lump,
                keep=keep,
                methods=method,
                epsilon=epsilon,
                horizon=horizon,
                sweep=sweep,
                points=points,
                output_dir=out,
                workers=workers,
                x0=x0,
                verbose=verbose,
            )
        )
        _require_partition(run)
        config = run.config
        slow_set = set(config.slow_species)
        fast = [name for name in run.lna.network.species if name not in slow_set]
        structured = [m for m in config.reduction_methods if m != c.TIMESCALE]
        if structured and not config.keep:
            raise ConfigError("--keep is required for structured methods")

        labels, reports, table, printed = [], [], [], []
        for tag in config.reduction_methods:
            start = perf_counter()
            if tag == c.TIMESCALE:
                reduced = run.lna.average(config.slow_species, config.epsilon)
                states = len(config.slow_species)
            else:
                reduced = run.lna.reduce(config.preserve, config.lump, config.keep, tag)
                states = reduced.reduced.n
            report = run.lna.validate(reduced, config.horizon, n_points=config.points)
            labels.append(tag)
            reports.append(report)
            table.append([tag, states, report.l1, report.l2, report.linf])
            printed.append(
                [
                    tag,
                    states,
                    report.l1,
                    report.l2,
                    report.linf,
                    f"{perf_counter() - start:.3f}s",
                ]
            )

        run.csv(c.VALIDATE_TABLE_FILE, ["method", "states", "l1", "l2", "linf"], table)
        _write_cov_errors(run, labels, reports)
        _print_table(
            "validation", ["method", "states", "L1", "L2", "Linf", "runtime"], printed
        )

        if config.sweep:
            start = perf_counter()
            result = run.lna.sweep(
                config.slow_species,
                config.sweep,
                config.horizon,
                workers=config.workers,
            )
            run.csv(
                c.SWEEP_CSV_FILE,
                ["epsilon", "mean_err", "ms_err"],
                [[r.epsilon, r.mean_err, r.ms_err] for r in result.rows],
            )
            write_json(
                run.out / c.SWEEP_JSON_FILE,
                SweepSummary.from_result(run.meta, list(config.slow_species), result),
            )
            _print_table(
                f"epsilon sweep (fast: {', '.join(fast)})",
                ["epsilon", "mean_err", "ms_err"],
                [[r.epsilon, r.mean_err, r.ms_err] for r in result.rows],
            )
            print(
                f"slopes: mean={result.mean_slope:.3f} ms={result.ms_slope:.3f} "
                f"({perf_counter() - start:.3f}s)"
            )

    _execute(body)


def _trajectory_csv(run: Run, name: str, bundle: TrajectoryBundle) -> None:
    run.csv(name, trajectory_header(bundle.mean.shape[1]), trajectory_rows(bundle))


@app.command()
def simulate(
    model: str = MODEL_OPTION,
    horizon: float = typer.Option(50.0, "--horizon", help="Simulation horizon"),
    points: int = typer.Option(501, "--points", help="Time grid points"),
    paths: int = typer.Option(0, "--paths", help="Euler-Maruyama paths (0: none)"),
    step: float = typer.Option(0.01, "--step", help="Euler-Maruyama step"),
    seed: int = typer.Option(42, "--seed", help="Seed for sample paths"),
    out: str = OUT_OPTION,
    workers: int = typer.Option(1, "--workers", help="Worker threads"),
    x0: Optional[str] = X0_OPTION,
    verbose: bool = VERBOSE_OPTION,
):
    """
    Output mean and covariance trajectories of the full model.
    """

    def body():
        run = Run(
            RunConfig(
                model_path=model,
                command=c.SIMULATE,
                horizon=horizon,
                points=points,
                paths=paths,
                step=step,
                seed=seed,
                output_dir=out,
                workers=workers,
                x0=x0,
                verbose=verbose,
            )
        )
        config = run.config
        start = perf_counter()
        bundle = run.lna.simulate(config.horizon, n_points=config.points)
        _trajectory_csv(run, c.TRAJECTORY_FILE, bundle)
        rows = [["moments", len(bundle.time_grid), f"{perf_counter() - start:.3f}s"]]
        if config.paths > 0:
            start = perf_counter()
            stats = run.lna.simulate_paths(
                config.horizon,
                config.step,
                config.paths,
                config.seed,
                workers=config.workers,
            )
            sampled = TrajectoryBundle(stats.time_grid, stats.mean, stats.covariance)
            _trajectory_csv(run, c.TRAJECTORY_EM_FILE, sampled)
            elapsed = f"{perf_counter() - start:.3f}s"
            rows.append(["euler-maruyama", len(stats.time_grid), elapsed])
        _print_table("simulation", ["trajectory", "points", "runtime"], rows)

    _execute(body)


if __name__ == "__main__":
    app()
