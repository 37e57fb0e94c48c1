"""``conifold-forge`` command line: run checks and plot their reports."""

from __future__ import annotations

import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from .checks import CHECKS, SCHEMA, ExperimentReport, RunConfig, run_check
from .errors import ConifoldError
from .plotting import EmptyDataError, plot_directory

ALL = "all"


def _fmt(x) -> str:
    """CSV cell: floats with 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, (complex, np.complexfloating)):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    return str(x)


def write_csv(report: ExperimentReport, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(report.columns)
        for row in report.rows:
            w.writerow([_fmt(v) for v in row])


def write_summary(reports: list[ExperimentReport], seed: int, path: Path) -> None:
    body = {
        "schema": SCHEMA,
        "seed": seed,
        "passed": all(r.passed for r in reports),
        "checks": {r.name: r.summary() for r in sorted(reports, key=lambda r: r.name)},
    }
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def _job(args):
    name, cfg = args
    return run_check(name, cfg)


def run_many(names: list[str], cfg: RunConfig, jobs: int = 1) -> list[ExperimentReport]:
    """Run checks, in parallel when ``jobs > 1``, and return them sorted by name."""
    names = sorted(names)
    if jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reports = list(ex.map(_job, [(n, cfg) for n in names]))
    else:
        reports = [run_check(n, cfg) for n in names]
    return sorted(reports, key=lambda r: r.name)


@click.group()
def main():
    """Numerical checks of conifold local models."""


@main.command()
@click.argument("check", type=click.Choice(sorted(CHECKS) + [ALL]), metavar="CHECK")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="key = value file")
@click.option("--seed", type=int, default=None, help="random seed (overrides the config)")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="results", show_default=True)
@click.option("--R", "R", type=float, default=None, help="gluing scale R")
@click.option("--t", "t", type=str, default=None, help="smoothing parameter, complex literal allowed")
@click.option("--set", "overrides", multiple=True, help="extra key=value setting (repeatable)")
@click.option("--jobs", type=int, default=1, show_default=True, help="parallel worker processes")
def run(check, config_path, seed, out_dir, R, t, overrides, jobs):
    """Run CHECK (or all checks) and write CSV rows plus summary.json."""
    text = Path(config_path).read_text() if config_path else ""
    extra = list(overrides)
    if R is not None:
        extra.append(f"R = {R!r}")
    if t is not None:
        extra.append(f"t = {t}")
    try:
        cfg = RunConfig.parse(text + "\n" + "\n".join(extra), seed)
    except ValueError as exc:
        raise click.UsageError(f"bad config: {exc}") from exc
    names = sorted(CHECKS) if check == ALL else [check]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        reports = run_many(names, cfg, jobs)
    except (ConifoldError, ArithmeticError, ValueError) as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        sys.exit(1)
    for rep in reports:
        write_csv(rep, out / f"{rep.name}.csv")
        click.echo(f"{'PASS' if rep.passed else 'FAIL'} {rep.name} ({rep.wall_time:.1f} s)")
    write_summary(reports, cfg.seed, out / "summary.json")
    timing = {r.name: round(r.wall_time, 3) for r in reports}
    (out / "timing.json").write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n")
    sys.exit(0 if all(r.passed for r in reports) else 1)


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
def plot(directory):
    """Write SVG decay plots for the reports in DIRECTORY."""
    try:
        paths = plot_directory(Path(directory))
    except (EmptyDataError, OSError, KeyError) as exc:
        click.echo(f"plot failed: {exc}", err=True)
        sys.exit(1)
    for p in paths:
        click.echo(str(p))


if __name__ == "__main__":  # pragma: no cover
    main()
