"""Static log-log plots of decay checks."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class EmptyDataError(ValueError):
    """Raised when there is nothing to plot."""


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        rows = [r for r in reader if r]
    if not header or not rows:
        raise EmptyDataError(f"{path} has no data rows")
    return header, rows


def _series(header, rows, spec):
    ix, iy = header.index(spec["x"]), header.index(spec["y"])
    flt = spec.get("filter")
    if flt:
        jf = header.index(flt[0])
        rows = [r for r in rows if r[jf] == flt[1]]
    groups: dict[str, list] = {}
    gcol = spec.get("group")
    for r in rows:
        key = r[header.index(gcol)] if gcol else ""
        groups.setdefault(key, []).append((float(r[ix]), float(r[iy])))
    out = []
    for key in sorted(groups, key=lambda k: float(k) if k else 0.0):
        pts = np.array(sorted(groups[key]))
        pts = pts[(pts[:, 0] > 0) & (pts[:, 1] > 0)]
        if len(pts):
            out.append((key, pts[:, 0], pts[:, 1]))
    if not out:
        raise EmptyDataError("no positive samples to plot")
    return out


def plot_report(csv_path: Path, spec: dict, out_path: Path, title: str = "") -> Path:
    """Write a log-log SVG of one report with fitted and reference slopes.

    The SVG carries no date stamp and a fixed hash salt, so identical
    inputs give identical files.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    header, rows = read_csv(csv_path)
    series = _series(header, rows, spec)
    slopes = list(spec.get("slopes", []))
    with matplotlib.rc_context({"svg.hashsalt": "conifold-forge", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(5.5, 4.0))
        for k, (key, x, y) in enumerate(series):
            label = f"{spec.get('group')} = {float(key):.3g}" if key else "samples"
            ax.loglog(x, y, "o", ms=4, label=label)
            lx, ly = np.log(x), np.log(y)
            if np.ptp(lx) > 0:
                slope, icpt = np.polyfit(lx, ly, 1)
                ax.loglog(x, np.exp(icpt) * x**slope, "-", lw=1, label=f"fit {slope:.3f}")
            if k < len(slopes):
                xm, ym = np.exp(lx.mean()), np.exp(ly.mean())
                ax.loglog(x, ym * (x / xm) ** slopes[k], "--", lw=1, color="gray", label=f"reference {slopes[k]:.3f}")
        ax.set_xlabel(spec.get("xlabel", spec["x"]))
        ax.set_ylabel(spec.get("ylabel", spec["y"]))
        if title:
            ax.set_title(title)
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(out_path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return out_path


def plot_directory(directory: Path) -> list[Path]:
    """Plot every report in ``directory`` that declares a plot spec."""
    directory = Path(directory)
    summary_path = directory / "summary.json"
    if not summary_path.exists():
        raise EmptyDataError(f"no summary.json in {directory}")
    summary = json.loads(summary_path.read_text())
    checks = summary.get("checks", {})
    jobs = []
    for name in sorted(checks):
        spec = checks[name].get("plot")
        csv_path = directory / f"{name}.csv"
        if spec and csv_path.exists():
            _series(*read_csv(csv_path), spec)  # validate before writing anything
            jobs.append((name, csv_path, spec))
    if not jobs:
        raise EmptyDataError("no plottable reports found")
    return [plot_report(p, spec, directory / f"{name}.svg", name) for name, p, spec in jobs]


__all__ = ["EmptyDataError", "plot_directory", "plot_report", "read_csv"]
