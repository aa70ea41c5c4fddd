"""Command-line entry point for the batching bullwhip simulator."""

from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import click

from src import __version__
from src.config import FORMATS, PRESETS, ExperimentConfig, defaults
from src.demand import DISTRIBUTIONS, read_sequence_csv
from src.diagnostics import pmf_table
from src.errors import BullwhipError
from src.experiments import compare_models, run_diagnostics, run_experiment, sweep
from src.exporters import ArtifactStore, csv_text, dumps_json, write_json
from src.ordering import SCHEDULE_KINDS
from src.report_builder import ReportBuilder
from src.variance import classify_scenario, decompose

EXPERIMENT_OPTIONS = [
    click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                 help="TOML or JSON config file; flags override its values."),
    click.option("--preset", type=click.Choice(sorted(PRESETS)), help="Named parameter preset."),
    click.option("--N", "N", type=int, help="Number of retailers."),
    click.option("--R", "R", type=int, help="Periods per review cycle."),
    click.option("--m", "m", type=float, help="Mean demand per period."),
    click.option("--sigma2", type=float, help="Demand variance per period."),
    click.option("--distribution", type=click.Choice(DISTRIBUTIONS), help="Demand distribution."),
    click.option("--phi", type=float, help="AR(1) coefficient; 0 gives i.i.d. demand."),
    click.option("--schedule", type=click.Choice(SCHEDULE_KINDS), help="Ordering schedule."),
    click.option("--cycles", type=int, help="Review cycles M per replication."),
    click.option("--reps", "replications", type=int, help="Number of replications K."),
    click.option("--seed", type=int, help="Master seed."),
    click.option("--workers", type=int, help="Worker processes for replications."),
    click.option("--tolerance", type=float, help="Scenario A tolerance."),
    click.option("--format", "output_format", type=click.Choice(FORMATS), help="Output format on stdout."),
    click.option("--output-dir", type=click.Path(file_okay=False), help="Directory for report artifacts."),
    click.option("--verbose", "-v", is_flag=True, help="Print progress to stderr."),
]


def experiment_options(func: Callable) -> Callable:
    for option in reversed(EXPERIMENT_OPTIONS):
        func = option(func)
    return func


def build_config(options: Dict[str, Any]) -> ExperimentConfig:
    """Resolve flags on top of config file, preset, environment and defaults."""
    options = dict(options)
    config_file = options.pop("config_file", None)
    preset = options.pop("preset", None)
    options["format"] = options.pop("output_format", None)
    options["verbose"] = options.get("verbose") or None
    config = ExperimentConfig.resolve(config_file=config_file, preset=preset, overrides=options)
    config.validate()
    return config


def emit(fmt: str, text: Callable[[], str], data: Callable[[], Any], table: Callable[[], Any]) -> None:
    """Print the result on stdout in the selected format."""
    if fmt == "json":
        click.echo(dumps_json(data()))
    elif fmt == "csv":
        click.echo(csv_text(table()), nl=False)
    else:
        click.echo(text(), nl=False)


def report_written(store: ArtifactStore) -> None:
    for path in store.written:
        click.echo(f"📁 Wrote {path}", err=True)


@click.group()
@click.version_option(__version__, prog_name="bullwhip")
def main() -> None:
    """Order-batching bullwhip simulator."""


@main.command()
@experiment_options
def simulate(**options: Any) -> None:
    """Run replicated experiments and report Var(Z_i) against both formulas."""
    try:
        config = build_config(options)
        report = run_experiment(config)
    except BullwhipError as e:
        raise click.ClickException(str(e)) from e

    builder = ReportBuilder()
    rows = [r.to_dict() for r in report.replications]
    for row in rows:
        row["phase_variances"] = " ".join(repr(v) for v in row["phase_variances"])
        row["demand_seeds"] = " ".join(str(s) for s in row["demand_seeds"])

    store = ArtifactStore(config.output_dir or None)
    store.json("report.json", report)
    store.csv("replications.csv", rows)
    store.text("report.txt", builder.build_report(report))

    emit(config.format, lambda: builder.build_report(report), lambda: report, lambda: rows)
    report_written(store)


@main.command("decompose")
@click.argument("input_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--R", "R", type=int, required=True, help="Periods per review cycle.")
@click.option("--tolerance", type=float, default=1e-9, show_default=True, help="Scenario A tolerance.")
@click.option("--json-out", type=click.Path(dir_okay=False), help="Write the decomposition as JSON here.")
@click.option("--format", "output_format", type=click.Choice(FORMATS), default="text", show_default=True)
def decompose_command(input_csv: str, R: int, tolerance: float, json_out: Optional[str], output_format: str) -> None:
    """Split the variance of a demand CSV (column `xi`) into within- and between-cycle parts."""
    try:
        seq = read_sequence_csv(input_csv)
        d = decompose(seq, R)
        label = classify_scenario(d, tolerance)
    except BullwhipError as e:
        raise click.ClickException(str(e)) from e

    data = {
        "source": str(input_csv),
        "T": len(seq),
        "decomposition": d.to_dict(),
        "sigma2_between_sample": d.sigma2_between_sample,
        "batched_variance": d.R ** 2 * d.sigma2_between,
        "scenario": label.to_dict(),
    }
    if json_out:
        click.echo(f"📁 Wrote {write_json(data, json_out)}", err=True)

    row = {**d.to_dict(), "label": label.label, "lhs": label.lhs, "threshold": label.threshold}
    emit(
        output_format,
        lambda: ReportBuilder().build_decomposition(d, label, source=Path(input_csv).name),
        lambda: data,
        lambda: [row],
    )


def parse_sweep(ctx: click.Context, param: click.Parameter, value: Optional[Tuple[str, str]]):
    if value is None:
        return None
    name, raw = value
    values = [v.strip() for v in raw.split(",") if v.strip()]
    if not values:
        raise click.BadParameter("expected a comma-separated list of values", ctx=ctx, param=param)
    return name, values


@main.command()
@experiment_options
@click.option("--sweep", "sweep_option", type=(str, str), callback=parse_sweep, metavar="PARAM VALUES",
              help="Sweep one of R, N, m, sigma2, phi over comma-separated values.")
def compare(sweep_option: Optional[Tuple[str, list]], **options: Any) -> None:
    """Compare empirical variance with the corrected and classical formulas."""
    builder = ReportBuilder()
    try:
        config = build_config(options)
        store = ArtifactStore(config.output_dir or None)
        if sweep_option:
            parameter, values = sweep_option
            result = sweep(config, parameter, values)
            store.json("sweep.json", result)
            store.csv("sweep.csv", result.rows)
            emit(config.format, lambda: builder.build_sweep(result), lambda: result, lambda: result.rows)
        else:
            table = compare_models(config)
            store.json("comparison.json", table)
            store.csv("comparison.csv", table.rows)
            emit(config.format, lambda: builder.build_comparison(table), lambda: table, lambda: table.rows)
    except BullwhipError as e:
        raise click.ClickException(str(e)) from e
    report_written(store)


@main.command()
@experiment_options
def diagnose(**options: Any) -> None:
    """Phase statistics of Z_t, order-count distribution and overlap diagnostics."""
    try:
        config = build_config(options)
        diagnostics = run_diagnostics(config)
    except BullwhipError as e:
        raise click.ClickException(str(e)) from e

    builder = ReportBuilder()
    table = pmf_table(diagnostics.counts)
    store = ArtifactStore(config.output_dir or None)
    store.json("diagnostics.json", diagnostics)
    store.csv("pmf.csv", table)
    if store.enabled:
        store.csv("schedule.csv", diagnostics.schedule.to_rows())
        store.csv("supplier.csv", diagnostics.supplier.to_rows())
    store.text("diagnostics.txt", builder.build_diagnostics(diagnostics))

    emit(config.format, lambda: builder.build_diagnostics(diagnostics), lambda: diagnostics, lambda: table)
    report_written(store)


@main.command("defaults")
@click.option("--format", "output_format", type=click.Choice(["text", "json"]), default="text", show_default=True)
def defaults_command(output_format: str) -> None:
    """Print every configuration field with its default and environment variable."""
    table = defaults()
    if output_format == "json":
        click.echo(dumps_json(table))
        return
    click.echo(f"{'field':<14} {'default':<14} env")
    click.echo("=" * 50)
    for name, entry in table.items():
        default = entry["default"] if entry["default"] != "" else '""'
        click.echo(f"{name:<14} {str(default):<14} {entry['env']}")
    click.echo("")
    click.echo(f"Presets: {', '.join(f'{k} {v}' for k, v in PRESETS.items())}")


if __name__ == "__main__":
    main()
