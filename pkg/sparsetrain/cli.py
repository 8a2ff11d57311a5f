"""Command-line front end."""

import json
import sys
import traceback
from functools import wraps
from typing import List, Optional

import click
import yaml
from rich.console import Console
from rich.table import Table

from .common.errors import SparseTrainError
from .common.logging_utils import log_error, setup_logging
from .config import RunConfig
from .experiments import SWEEP_AXES, ExperimentRunner
from .resources import render_estimate_table

console = Console()


def _runner(ctx: click.Context, extra: Optional[List[str]] = None) -> ExperimentRunner:
    opts = ctx.obj
    overrides = list(opts["overrides"])
    if opts["seed"] is not None:
        overrides += [f"training.init_seed={opts['seed']}", f"network.interleaver_seed={opts['seed']}"]
    if opts["threads"] is not None:
        overrides.append(f"sweep.threads={opts['threads']}")
    if opts["out"] is not None:
        overrides.append(f"output.dir={opts['out']}")
    cfg = RunConfig.load(opts["config"], overrides + (extra or []))
    return ExperimentRunner(cfg)


def handle_errors(func):
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except SparseTrainError as e:
            console.print(f"❌ {e}", style="red")
            log_error(str(e), traceback.format_exc())
            sys.exit(1)

    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="YAML configuration file")
@click.option("--set", "overrides", multiple=True, help="Override a setting, e.g. --set training.epochs=1")
@click.option("--out", help="Output directory")
@click.option("--seed", type=int, help="Initialization and interleaver seed")
@click.option("--threads", type=int, help="Worker threads for sweeps")
@click.option("--log-level", default="INFO", show_default=True)
@click.pass_context
def cli(ctx, config_path, overrides, out, seed, threads, log_level):
    """Bit-accurate training of pre-defined sparse networks on a pipelined datapath."""
    setup_logging(level=log_level)
    ctx.obj = {"config": config_path, "overrides": overrides, "out": out, "seed": seed, "threads": threads}


@cli.command()
@click.option("--epochs", type=int, help="Number of epochs (overrides training.epochs)")
@click.option("--backend", type=click.Choice(["float", "fixed"]), help="Arithmetic backend")
@click.option("--semantics", type=click.Choice(["sequential", "pipelined-stale"]), help="Update semantics")
@click.pass_context
@handle_errors
def train(ctx, epochs, backend, semantics):
    """Train and write metrics.csv, summary.json and params.npz."""
    extra = []
    if epochs is not None:
        extra.append(f"training.epochs={epochs}")
    if backend:
        extra.append(f"training.backend={backend}")
    if semantics:
        extra.append(f"training.update_semantics={semantics}")
    runner = _runner(ctx, extra)
    console.print(f"🚀 Training into {runner.out_dir}")
    summary = runner.train()
    if summary.final_accuracy is None:
        console.print("✅ No epochs run; initial parameters written")
    else:
        console.print(f"✅ Final rolling accuracy {summary.final_accuracy:.2f}% after {summary.epochs} epochs")
    console.print(f"✂️  Clip events: {summary.clip_count}, wall time {summary.wall_time_s:.1f}s")


@cli.command()
@click.argument("axis", type=click.Choice(SWEEP_AXES))
@click.option("--values", help="YAML list of values, e.g. '[[8,2,5],[12,3,8]]' or '[0.125, 0.5]'")
@click.option(
    "--rounding",
    default="config",
    show_default=True,
    type=click.Choice(["config", "truncate", "round-nearest-even", "both"]),
    help="Rounding modes for the bits sweep",
)
@click.pass_context
@handle_errors
def sweep(ctx, axis, values, rounding):
    """Sweep bits, junction density, z or seed."""
    runner = _runner(ctx)
    parsed = yaml.safe_load(values) if values else None
    frame = runner.sweep(axis, parsed, rounding)
    table = Table(title=f"Sweep over {axis}")
    for column in frame.columns:
        table.add_column(str(column))
    for _, row in frame.iterrows():
        table.add_row(*[f"{v:.4g}" if isinstance(v, float) else str(v) for v in row])
    console.print(table)


@cli.command()
@click.option("--block-cycles", type=int, help="Block cycles to simulate")
@click.option("--no-export", is_flag=True, help="Skip writing trace.csv")
@click.pass_context
@handle_errors
def trace(ctx, block_cycles, no_export):
    """Simulate banked memory accesses and check every port rule."""
    runner = _runner(ctx)
    report = runner.trace(block_cycles, export=not no_export)
    if report.clean:
        console.print(
            f"✅ {report.block_cycles} block cycles, {report.accesses_checked} accesses: no violations"
        )
        return
    console.print(f"❌ {report.violation_count} violations", style="red")
    for v in report.violations[:5]:
        console.print(f"  clock {v.clock} {v.memory}[{v.layer}] slot {v.slot} bank {v.bank}: {v.rule}")
    sys.exit(1)


@cli.command()
@click.option("--z", "z_values", help="Comma-separated z per junction, e.g. 1024,256")
@click.pass_context
@handle_errors
def estimate(ctx, z_values):
    """Arithmetic units, memory and throughput, checked against the device."""
    extra = [f"network.z=[{z_values}]"] if z_values else []
    runner = _runner(ctx, extra)
    est, fit = runner.estimate()
    console.print(render_estimate_table(est, fit))
    console.print(fit.summary, style="green" if fit.fits else "red")


@cli.command()
@click.option("--which", type=click.Choice(["sparse", "fc", "both"]), default="both", show_default=True)
@click.option("--epochs", type=int, help="Float epochs before measuring (overrides clipstats.epochs)")
@click.pass_context
@handle_errors
def clipstats(ctx, which, epochs):
    """Fraction of first-layer pre-activations beyond the fixed-point range."""
    extra = [f"clipstats.epochs={epochs}"] if epochs is not None else []
    runner = _runner(ctx, extra)
    kinds = ("sparse", "fc") if which == "both" else (which,)
    for kind, report in runner.clipstats(kinds).items():
        console.print(
            f"📊 {kind}: {100 * report.clipped_fraction:.1f}% clipped, "
            f"variance {report.variance:.3f}, max |s| {report.max_abs:.2f}"
        )


@cli.command("lut-dump")
@click.option("--activation", default="sigmoid", show_default=True)
@click.pass_context
@handle_errors
def lut_dump(ctx, activation):
    """Write the activation and derivative tables as CSV."""
    path = _runner(ctx).lut_dump(activation)
    console.print(f"✅ Wrote {path}")


@cli.command("export-interleaver")
@click.pass_context
@handle_errors
def export_interleaver(ctx):
    """Write every junction's interleaver map as CSV."""
    for path in _runner(ctx).export_interleavers():
        console.print(f"✅ Wrote {path}")


@cli.command("show-config")
@click.pass_context
@handle_errors
def show_config(ctx):
    """Show the resolved configuration."""
    runner = _runner(ctx)
    console.print("📋 Configuration:")
    console.print(json.dumps(runner.config.to_dict(), indent=2))


if __name__ == "__main__":
    cli()
