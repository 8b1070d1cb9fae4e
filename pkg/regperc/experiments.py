"""End-to-end runs that combine the graph ensemble and the tree model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from .config import ExperimentConfig
from .formats import write_csv
from .level_sets import CriticalCurveRow, critical_curve_experiment, write_critical_curve_csv
from .logging import RunLogger
from .percolation_model import ModelCurveRow, model_curve, write_model_curve_csv
from .plot import PlotSpec, plot_svg


@dataclass(frozen=True)
class BinComparison:
    lam: float
    graph_alpha_c: float
    graph_stderr: float
    model_alpha_c: float
    count: int

    @property
    def gap(self) -> float:
        return abs(self.graph_alpha_c - self.model_alpha_c)

    def agrees(self, slack: float = 0.1) -> bool:
        """|graph - model| <= slack + 2 stderr (a single sample always fails)."""
        if math.isnan(self.graph_stderr):
            return self.gap <= slack
        return self.gap <= slack + 2 * self.graph_stderr


@dataclass(frozen=True)
class Fig5Result:
    d: int
    graph_rows: list[CriticalCurveRow]
    model_rows: list[ModelCurveRow]
    graph_csv: Path
    model_csv: Path
    overlay_csv: Path
    svg: Path

    def comparisons(self) -> list[BinComparison]:
        return [
            BinComparison(g.lambda_bin_center, g.alpha_c_mean, g.alpha_c_stderr, m.alpha_c, g.count)
            for g, m in zip(self.graph_rows, self.model_rows)
        ]

    def summary(self) -> str:
        comps = self.comparisons()
        worst = max((c.gap for c in comps), default=math.nan)
        agree = sum(c.agrees() for c in comps)
        return f"fig5 d={self.d}: {len(comps)} bins, {agree} agree, max |gap| {worst:.4f}"


def fig5(config: ExperimentConfig, out_dir: str | Path, logger: RunLogger | None = None) -> Fig5Result:
    """Empirical alpha_c per lambda bin against the model at each bin center."""
    config.validate("fig5")
    out = Path(out_dir)
    d = config.d
    graph_rows = critical_curve_experiment(
        d, config.n, config.realizations, config.lambda_bins, config.seed,
        smoothing_window=config.smoothing_window, generator=config.generator,
        restarts=config.restarts, workers=config.workers, logger=logger,
    )
    model_rows = model_curve(
        d, [r.lambda_bin_center for r in graph_rows],
        tol=config.tol, quad_nodes=config.quad_nodes, truncation=config.truncation,
        workers=config.workers, logger=logger,
    ) if graph_rows else []

    graph_csv = write_critical_curve_csv(d, graph_rows, out / f"fig5_d{d}_graph.csv")
    model_csv = write_model_curve_csv(d, model_rows, out / f"fig5_d{d}_model.csv")
    overlay = [("graph", r.lambda_bin_center, r.alpha_c_mean) for r in graph_rows]
    overlay += [("model", r.lam, r.alpha_c) for r in model_rows]
    overlay_csv = write_csv(out / f"fig5_d{d}_overlay.csv", ["source", "lambda", "alpha_c"], overlay)
    svg = plot_svg(PlotSpec(
        input=str(overlay_csv), x="lambda", y="alpha_c", group="source",
        output=str(out / f"fig5_d{d}.svg"),
        xlabel="lambda", ylabel="alpha_c", title=f"critical level, d={d}, n={config.n}",
    ))
    return Fig5Result(d, graph_rows, model_rows, graph_csv, model_csv, overlay_csv, svg)
