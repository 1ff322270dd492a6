"""
Command-line interface: one subcommand per model operation, tabular output
on stdout or to --out.

Exit codes: 0 success, 1 a verify check failed, 2 invalid config or input,
3 non-convergence, 4 I/O error.
"""

import logging
from contextlib import contextmanager
from typing import Optional

import typer

from . import create_runner
from .errors import ElderCultureError
from .utils.output import FORMATS, write_table

logger = logging.getLogger(__name__)

app = typer.Typer(help="Overlapping-generations models of the treatment of the elderly.",
                  add_completion=False, no_args_is_help=True)

ConfigOption = typer.Option(None, '--config', help="Scenario INI file (baseline when omitted).")
OutOption = typer.Option(None, '--out', help="Output file (stdout when omitted).")
FormatOption = typer.Option(None, '--format', help="Output format: csv or json.")
JobsOption = typer.Option(None, '--jobs', min=1, help="Parallel workers for sweeps.")


@contextmanager
def _exit_codes():
    """Report model errors on stderr and exit with their code"""
    try:
        yield
    except ElderCultureError as exc:
        logger.debug("Command failed", exc_info=True)
        typer.echo(f"Error: {exc}", err=True)
        raise typer.Exit(code=exc.exit_code)


def _emit(runner, scenario, table, out: Optional[str], fmt: Optional[str]):
    fmt = fmt or scenario.output.get('format') or runner.config.OUTPUT_FORMAT
    if fmt not in FORMATS:
        typer.echo(f"Error: --format must be one of {', '.join(FORMATS)}, got {fmt!r}", err=True)
        raise typer.Exit(code=2)
    out = out or scenario.output.get('path')
    text = write_table(table, out, fmt, runner.config.CSV_SIGNIFICANT_DIGITS)
    if not out:
        typer.echo(text, nl=False)


def _run(command: str, config: Optional[str], out: Optional[str], fmt: Optional[str], **options):
    with _exit_codes():
        runner = create_runner()
        scenario = runner.load_scenario(config)
        table = getattr(runner, command)(scenario, **options)
        _emit(runner, scenario, table, out, fmt)


@app.command('steady-state')
def steady_state(config: Optional[str] = ConfigOption, out: Optional[str] = OutOption,
                 fmt: Optional[str] = FormatOption):
    """Equilibrium of the scenario's model."""
    _run('steady_state', config, out, fmt)


@app.command('simulate')
def simulate(config: Optional[str] = ConfigOption, out: Optional[str] = OutOption,
             fmt: Optional[str] = FormatOption):
    """Equilibrium path of the economy with capital accumulation."""
    _run('simulate', config, out, fmt)


@app.command('sweep-phi')
def sweep_phi(config: Optional[str] = ConfigOption, out: Optional[str] = OutOption,
              fmt: Optional[str] = FormatOption, jobs: Optional[int] = JobsOption):
    """Relative elderly income and consumption across property-rights levels."""
    _run('sweep_phi', config, out, fmt, jobs=jobs)


@app.command('sweep-capital-intensity')
def sweep_capital_intensity(config: Optional[str] = ConfigOption, out: Optional[str] = OutOption,
                            fmt: Optional[str] = FormatOption, jobs: Optional[int] = JobsOption):
    """Steady states across capital intensities (1-alpha)/alpha."""
    _run('sweep_capital_intensity', config, out, fmt, jobs=jobs)


@app.command('sweep-tau')
def sweep_tau(config: Optional[str] = ConfigOption, out: Optional[str] = OutOption,
              fmt: Optional[str] = FormatOption, jobs: Optional[int] = JobsOption):
    """Capital-intensity sweep repeated for several elderly labour endowments."""
    _run('sweep_tau', config, out, fmt, jobs=jobs)


@app.command('indices')
def indices(traits: Optional[str] = typer.Argument(None, help="Trait table CSV."),
            config: Optional[str] = ConfigOption, out: Optional[str] = OutOption,
            fmt: Optional[str] = FormatOption,
            specs: Optional[str] = typer.Option(None, '--specs', help="Index definition JSON file."),
            summary: bool = typer.Option(False, '--summary', help="Mean, SD, Min, Max and N per index.")):
    """Per-society index scores from a coded trait table."""
    _run('indices', config, out, fmt, traits=traits, specs=specs, summary=summary)


@app.command('correlate')
def correlate(traits: Optional[str] = typer.Argument(None, help="Trait table CSV."),
              config: Optional[str] = ConfigOption, out: Optional[str] = OutOption,
              fmt: Optional[str] = FormatOption,
              specs: Optional[str] = typer.Option(None, '--specs', help="Index definition JSON file."),
              jobs: Optional[int] = JobsOption):
    """Pairwise index correlations with significance markers."""
    _run('correlate', config, out, fmt, traits=traits, specs=specs, jobs=jobs)


@app.command('verify')
def verify(out: Optional[str] = OutOption, fmt: Optional[str] = FormatOption,
           seed: Optional[int] = typer.Option(None, '--seed', help="Seed for the randomized draws.")):
    """Check every closed form against brute force and print a residual summary."""
    with _exit_codes():
        runner = create_runner()
        report = runner.verify(seed=seed)
        fmt = fmt or runner.config.OUTPUT_FORMAT
        if fmt not in FORMATS:
            typer.echo(f"Error: --format must be one of {', '.join(FORMATS)}, got {fmt!r}", err=True)
            raise typer.Exit(code=2)
        text = write_table(report['checks'], out, fmt, runner.config.CSV_SIGNIFICANT_DIGITS)
        if not out:
            typer.echo(text, nl=False)
        summary = report['summary']
        typer.echo(f"{summary['passed_checks']}/{summary['total_checks']} checks passed (seed {report['seed']})",
                   err=True)
        if not report['passed']:
            typer.echo(f"Failed: {', '.join(summary['failed'])}", err=True)
            raise typer.Exit(code=1)


def main():
    app()
