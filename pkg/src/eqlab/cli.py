"""Command-line experiment harness.

One subcommand per scenario; every subcommand takes the same flags:

    --config PATH   JSON experiment config (see README for the schema)
    --out DIR       output directory (default ./out)
    --seed U64      override the config seed
    --format        csv | json | both (default both)
    --jobs N        worker threads for sweep points (default 1)

Exit status: 0 success, 2 invalid config, 3 numerical-failure threshold
exceeded (or a failed check suite), 4 conjecture anomaly. Log verbosity
via the LAB_LOG environment variable (DEBUG, INFO, WARNING, ERROR).
"""

from __future__ import annotations

import logging
import os
import sys

import click

from eqlab.config import load_config
from eqlab.errors import ConfigError
from eqlab.output import emit
from eqlab.runner import run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ANOMALY = 4

log = logging.getLogger("eqlab")


def _setup_logging():
    level_name = os.environ.get("LAB_LOG", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


@click.group()
def main():
    """Equilibrium-manifold laboratory."""
    _setup_logging()


def _scenario_command(scenario: str, help_text: str):
    @click.option("--config", "config_path", required=True,
                  type=click.Path(exists=True, dir_okay=False), help="JSON config file.")
    @click.option("--out", "out_dir", default="out", show_default=True,
                  type=click.Path(file_okay=False), help="Output directory.")
    @click.option("--seed", default=None, type=click.IntRange(min=0),
                  help="Override the config seed.")
    @click.option("--format", "fmt", default="both", show_default=True,
                  type=click.Choice(["csv", "json", "both"]), help="Output format.")
    @click.option("--jobs", default=1, show_default=True, type=click.IntRange(min=1),
                  help="Worker threads for sweep points.")
    def command(config_path, out_dir, seed, fmt, jobs):
        try:
            cfg = load_config(config_path, seed_override=seed)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        if cfg.scenario != scenario:
            click.echo(f"config error: scenario: config says {cfg.scenario!r}, "
                       f"command is {scenario!r}", err=True)
            sys.exit(EXIT_CONFIG)
        result = run(cfg, jobs=jobs)
        paths = emit(result, cfg.echo, out_dir, scenario, fmt=fmt, plot_data=cfg.plot_data)
        for path in paths:
            click.echo(f"wrote {path}")
        _echo_summary(result)
        sys.exit(_exit_code(cfg, result))

    command.__name__ = scenario.replace("-", "_")
    command.__doc__ = help_text
    return main.command(name=scenario)(command)


def _echo_summary(result):
    for key in sorted(result.summary):
        click.echo(f"  {key}: {result.summary[key]!r}")
    if result.failures:
        click.echo(f"  failures: {result.failures}/{result.total_points}")


def _exit_code(cfg, result) -> int:
    if result.summary.get("anomaly"):
        return EXIT_ANOMALY
    if result.failure_fraction > cfg.tolerances.max_failure_fraction:
        return EXIT_NUMERICAL
    if result.summary.get("ok") is False:
        return EXIT_NUMERICAL
    return EXIT_OK


_scenario_command("equilibria", "Count equilibrium prices over endowments.")
_scenario_command("curvature-scan", "Mean-curvature reports over a chart grid.")
_scenario_command("entropy", "Riemannian volume and entropy of a neighborhood box.")
_scenario_command("helicoid-check", "Minimality and hyperplane intersections of helicoids.")
_scenario_command("geodesic-check", "Tangential acceleration along the zero-fiber curve.")
_scenario_command("mvp-probe", "Volume under boundary-fixing normal perturbations.")
_scenario_command("conjecture-sweep", "Multiplicity vs. minimality contingency sweep.")


if __name__ == "__main__":
    main()
