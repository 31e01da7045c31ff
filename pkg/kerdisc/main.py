from pathlib import Path
import sys

import click
import logfire
from rich.console import Console

from .config import logger, KERDISC_THREADS
from .exceptions import ParseError, SelfTestFailure
from .cli.commands import run_estimate, run_flow
from .cli.schemas import EstimateArgs, FlowConfig, METRICS, SweepConfig
from .cli.selftest import render_report, run_selftest
from .cli.sweep import run_sweep, write_sweep
from .cli.utils import estimate_json, exit_on_error, load_config
from .flow.runner import write_trajectory
from .specfun.schemas import KummerMode

logfire.configure(send_to_logfire="if-token-present", console=False)


def _open_output(out: Path):
    try:
        return out.open("w", encoding="utf-8", newline="")
    except OSError as e:
        raise ParseError(f"Cannot write {out}: {e}")


@click.group()
@click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker cap, overrides KERDISC_THREADS.")
@click.pass_context
def cli(ctx, threads):
    """Kernel discrepancy estimators, sweeps, particle flows and self-test."""
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads or KERDISC_THREADS


@cli.command()
@click.option("--metric", type=click.Choice(METRICS), required=True)
@click.option("--input", "input_path", type=click.Path(path_type=Path), required=True)
@click.option("--input2", type=click.Path(path_type=Path), default=None, help="Second sample for mmd-u.")
@click.option("--kernel", type=click.Choice(["gaussian", "imq", "vmf"]), default="gaussian")
@click.option("--prior", type=click.Choice(["gaussian", "laplace", "student-t", "uniform-sphere"]), default="gaussian")
@click.option("--gamma", type=float, default=0.5)
@click.option("--sigma", type=float, default=1.0)
@click.option("--nu", type=float, default=None, help="Student-t degrees of freedom.")
@click.option("--alpha", type=float, default=1.0, help="IMQ scale.")
@click.option("--beta", type=float, default=0.5, help="IMQ exponent.")
@click.option("--kappa", type=float, default=1.0, help="vMF concentration.")
@click.option("--slices", type=int, default=None)
@click.option("--knots", type=int, default=None)
@click.option("--seed", type=int, default=0)
@click.option("--form", type=click.Choice(["U", "V"]), default=None)
@click.option("--mode", type=click.Choice([m.value for m in KummerMode]), default=KummerMode.EXACT.value)
@exit_on_error
def estimate(input_path, **options):
    """Estimate one discrepancy on a CSV/JSONL sample file and print it as JSON."""
    args = EstimateArgs(input=input_path, **options)
    with logfire.span("estimate {metric}", metric=args.metric, seed=args.seed):
        result = run_estimate(args)
    click.echo(estimate_json(result))


@cli.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), default=None, help="CSV path, stdout when omitted.")
@click.pass_context
@exit_on_error
def sweep(ctx, config_path, out):
    """Run a slice/dimension sweep described by a TOML or JSON config."""
    config = load_config(config_path, SweepConfig)
    with logfire.span("sweep {estimator}", estimator=config.estimator.kind, dims=config.dims, slice_counts=config.slice_counts):
        frame = run_sweep(config, threads=ctx.obj["threads"])
    if out is None:
        write_sweep(frame, sys.stdout)
    else:
        with _open_output(out) as handle:
            write_sweep(frame, handle)
        logger.info(f"Wrote {len(frame)} sweep rows to {out}")


@cli.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Trajectory CSV path, stdout when omitted.")
@exit_on_error
def flow(config_path, out):
    """Run a particle flow described by a TOML or JSON config and write its trajectory."""
    config = load_config(config_path, FlowConfig)
    with logfire.span("flow {estimator}", estimator=config.estimator.kind, steps=config.steps, init=config.init):
        result, metadata = run_flow(config)
    if out is None:
        write_trajectory(result.trajectory, sys.stdout, metadata)
    else:
        with _open_output(out) as handle:
            write_trajectory(result.trajectory, handle, metadata)
        logger.info(f"Wrote trajectory with {len(result.trajectory)} checkpoints to {out}")


@cli.command()
@click.option("--filter", "pattern", default=None, help="Only checks whose name or tag contains this text.")
@click.option("--fast", is_flag=True, help="Reduced Monte-Carlo budgets.")
@click.option("--corrupt", default=None, help="Perturb the named check's constant.")
@click.option("--seed", type=int, default=0)
@exit_on_error
def selftest(pattern, fast, corrupt, seed):
    """Run the oracle-equivalence checks and print a report."""
    with logfire.span("selftest", pattern=pattern, fast=fast):
        outcomes = run_selftest(pattern=pattern, fast=fast, corrupt=corrupt, seed=seed)
    render_report(outcomes, Console())
    failed = [o.name for o in outcomes if not o.passed]
    if failed:
        raise SelfTestFailure(f"{len(failed)} check(s) failed: {', '.join(failed)}")


if __name__ == "__main__":
    cli()
