"""CSV -> SVG line plots with matplotlib.

The SVG backend is pinned to a fixed hash salt and no date stamp, so
identical input gives byte-identical files.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from .errors import EmptyData, MissingColumn
from .formats import read_csv, write_text_atomic

FIGSIZE = (6.4, 4.2)
SVG_RC = {
    "svg.hashsalt": "regperc",
    "svg.fonttype": "none",
}


@dataclass(frozen=True)
class PlotSpec:
    input: str
    x: str
    y: str
    output: str
    group: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    title: str | None = None
    step: bool = False


def plot_svg(spec: PlotSpec) -> Path:
    header, rows = read_csv(spec.input)
    return write_text_atomic(spec.output, render_svg(header, rows, spec))


def build_figure(header: Sequence[str], rows: Sequence[Sequence[str]], spec: PlotSpec) -> Figure:
    """One line per series; the caller owns the figure and must close it."""
    series = _collect_series(header, rows, spec)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for name, pts in series.items():
        xs = [x for x, _ in pts]
        ys = [y for _, y in pts]
        (line,) = ax.plot(
            xs, ys, label=name, linewidth=1.5,
            drawstyle="steps-post" if spec.step else "default",
        )
        line.set_gid(f"series-{name}")
    ax.set_xlabel(spec.xlabel or spec.x)
    ax.set_ylabel(spec.ylabel or spec.y)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    return fig


def render_svg(header: Sequence[str], rows: Sequence[Sequence[str]], spec: PlotSpec) -> str:
    with plt.rc_context(SVG_RC):
        fig = build_figure(header, rows, spec)
        try:
            buf = io.StringIO()
            fig.savefig(buf, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buf.getvalue()


def _collect_series(header, rows, spec: PlotSpec) -> dict[str, list[tuple[float, float]]]:
    wanted = [("--x", spec.x), ("--y", spec.y)] + ([("--group", spec.group)] if spec.group else [])
    for flag, col in wanted:
        if col not in header:
            raise MissingColumn(f"column {col!r} not in {list(header)}", flag=flag)
    ix, iy = header.index(spec.x), header.index(spec.y)
    ig = header.index(spec.group) if spec.group else None
    series: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        try:
            x, y = float(row[ix]), float(row[iy])
        except (ValueError, IndexError):
            continue
        if not (math.isfinite(x) and math.isfinite(y)):
            continue
        name = row[ig] if ig is not None else spec.y
        series.setdefault(name, []).append((x, y))
    if not series:
        raise EmptyData(f"no plottable rows in {spec.input}")
    for pts in series.values():
        pts.sort()
    return series
