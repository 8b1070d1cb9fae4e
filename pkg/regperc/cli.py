"""CLI for regperc: generate graphs, sweep level sets, and solve the tree model."""

from __future__ import annotations

import argparse
import sys
from typing import Any

from .config import ExperimentConfig
from .errors import NoTransition, NumericalError, TooFewPoints, UnknownCommand, ValidationError
from .experiments import fig5
from .formats import write_text_atomic
from .gaussian_wave import WaveModel, sample_ball, write_phi_csv, write_sample_csv
from .level_sets import (
    critical_curve_experiment,
    sharpening_experiment,
    steepest_point,
    sweep_ratio_curve,
    write_critical_curve_csv,
    write_curve_csv,
    write_curves_csv,
    write_sharpening_csv,
)
from .logging import RunLogger
from .percolation_model import default_lambda_grid, model_curve, write_model_curve_csv
from .plot import PlotSpec, plot_svg
from .regular_graph import GENERATORS, generate_regular, graph_stats, read_graph
from .spectral import (
    eigendecompose,
    mckay_histogram_distance,
    nearest_eigenpair,
    write_eigen_csv,
    write_vector_csv,
)

_SEEDING = (
    "Task k of a run draws from the 64-bit seed mixed from (--seed, k) with "
    "numpy SeedSequence, so output does not depend on --workers."
)
_RESTARTS_HELP = (
    "Pairing restart budget: fixed (10*d^2, the default), scaled (20x the expected "
    "attempt count exp((d^2-1)/4), capped at 10^6) or a positive count"
)


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting on bad input."""

    def error(self, message: str):
        raise UnknownCommand(message)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.split(",") if p.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value config file (flags override it)")
    common.add_argument("--workers", type=int, help="Worker processes (env REGPERC_WORKERS)")
    common.add_argument("--log-json", dest="log_json", help="Write the run log as JSON")
    common.add_argument("--verbose", action="store_true", help="Print the run log to stderr")
    common.add_argument("--out", "-o", help="Output path (default: stdout)")

    parser = _Parser(prog="regperc", description="Level-set percolation of random regular graph eigenvectors",
                     epilog=_SEEDING)
    sub = parser.add_subparsers(dest="command")

    def graph_flags(p):
        p.add_argument("--n", type=int, help="Number of vertices")
        p.add_argument("--d", type=int, help="Degree")
        p.add_argument("--seed", type=int, help="Master seed")
        p.add_argument("--generator", choices=GENERATORS, help="Graph sampler")
        p.add_argument("--restarts", help=_RESTARTS_HELP)

    # generate
    gen_p = sub.add_parser("generate", parents=[common], help="Sample a random d-regular graph (JSON)")
    graph_flags(gen_p)
    gen_p.add_argument("--stats", action="store_true", help="Report cycle counts, diameter and components")

    # spectrum
    spec_p = sub.add_parser("spectrum", parents=[common], help="Eigenvalues and residuals (CSV)")
    graph_flags(spec_p)
    spec_p.add_argument("--graph", help="Read the graph from a JSON file")
    spec_p.add_argument("--lambda", dest="lam", type=float, help="Target eigenvalue for --vector-out")
    spec_p.add_argument("--vector-out", dest="vector_out", help="Write the eigenvector nearest --lambda")

    # sweep
    sweep_p = sub.add_parser("sweep", parents=[common], help="Ratio curve of one eigenvector (CSV)")
    graph_flags(sweep_p)
    sweep_p.add_argument("--graph", help="Read the graph from a JSON file")
    sweep_p.add_argument("--lambda", dest="lam", type=float, help="Use the eigenvector nearest this eigenvalue")
    sweep_p.add_argument("--index", dest="indices", type=int, action="append",
                         help="Sweep eigenvector INDEX of the ascending spectrum (repeatable; overrides --lambda)")
    sweep_p.add_argument("--negate", action="store_true", help="Sweep -f instead of f")
    sweep_p.add_argument("--window", dest="smoothing_window", type=int, help="Smoothing window (odd)")

    # critical-curve
    cc_p = sub.add_parser("critical-curve", parents=[common], help="Empirical alpha_c per lambda bin (CSV)",
                          epilog=_SEEDING)
    graph_flags(cc_p)
    cc_p.add_argument("--realizations", type=int, help="Number of graphs")
    cc_p.add_argument("--lambda-bins", dest="lambda_bins", type=int, help="Equal-width bins over the spectrum")
    cc_p.add_argument("--window", dest="smoothing_window", type=int, help="Smoothing window (odd)")

    # model-phi
    phi_p = sub.add_parser("model-phi", parents=[common], help="Covariance kernel phi(k) (CSV)")
    phi_p.add_argument("--d", type=int, help="Degree")
    phi_p.add_argument("--lambda", dest="lam", type=float, help="Eigenvalue")
    phi_p.add_argument("--kmax", type=int, help="Largest distance")

    # model-critical
    mc_p = sub.add_parser("model-critical", parents=[common], help="Model alpha_c over a lambda grid (CSV)")
    mc_p.add_argument("--d", type=int, help="Degree")
    mc_p.add_argument("--lambda-grid", dest="lambda_grid", type=_float_list, help="Comma-separated lambdas")
    mc_p.add_argument("--lambda-step", dest="lambda_step", type=float, help="Grid step when no grid is given")
    mc_p.add_argument("--quad-nodes", dest="quad_nodes", type=int, help="Gauss-Legendre nodes")
    mc_p.add_argument("--truncation", type=float, help="Integration window length above alpha")
    mc_p.add_argument("--tol", type=float, help="Bisection width")

    # sample-wave
    sw_p = sub.add_parser("sample-wave", parents=[common], help="Exact wave samples on a tree ball (CSV)",
                          epilog=_SEEDING)
    sw_p.add_argument("--d", type=int, help="Degree")
    sw_p.add_argument("--lambda", dest="lam", type=float, help="Eigenvalue")
    sw_p.add_argument("--radius", type=int, help="Ball radius")
    sw_p.add_argument("--count", type=int, help="Number of samples")
    sw_p.add_argument("--seed", type=int, help="Master seed")

    # fig5
    f5_p = sub.add_parser("fig5", parents=[common], help="Graph vs model critical curves (CSVs + SVG)",
                          epilog=_SEEDING)
    graph_flags(f5_p)
    f5_p.add_argument("--realizations", type=int, help="Number of graphs")
    f5_p.add_argument("--lambda-bins", dest="lambda_bins", type=int, help="Equal-width bins over the spectrum")
    f5_p.add_argument("--window", dest="smoothing_window", type=int, help="Smoothing window (odd)")
    f5_p.add_argument("--quad-nodes", dest="quad_nodes", type=int, help="Gauss-Legendre nodes")
    f5_p.add_argument("--truncation", type=float, help="Integration window length above alpha")
    f5_p.add_argument("--tol", type=float, help="Bisection width")

    # sharpening
    sh_p = sub.add_parser("sharpening", parents=[common], help="Descent-window width versus n (CSV)",
                          epilog=_SEEDING)
    sh_p.add_argument("--d", type=int, help="Degree")
    sh_p.add_argument("--sizes", type=_int_list, help="Comma-separated graph sizes")
    sh_p.add_argument("--samples", type=int, help="Graphs per size")
    sh_p.add_argument("--lambda", dest="lam", type=float, help="Target eigenvalue")
    sh_p.add_argument("--seed", type=int, help="Master seed")
    sh_p.add_argument("--generator", choices=GENERATORS, help="Graph sampler")
    sh_p.add_argument("--restarts", help=_RESTARTS_HELP)
    sh_p.add_argument("--window", dest="smoothing_window", type=int, help="Smoothing window (odd)")

    # plot
    plot_p = sub.add_parser("plot", parents=[common], help="Render a CSV as an SVG line plot")
    plot_p.add_argument("input", help="Input CSV")
    plot_p.add_argument("--x", required=True, help="x column")
    plot_p.add_argument("--y", required=True, help="y column")
    plot_p.add_argument("--group", help="One polyline per value of this column")
    plot_p.add_argument("--xlabel")
    plot_p.add_argument("--ylabel")
    plot_p.add_argument("--title")
    plot_p.add_argument("--step", action="store_true", help="Draw a staircase")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UnknownCommand as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    if not args.command:
        parser.print_help()
        return 1

    logger = RunLogger(args.command)
    status = 0
    try:
        config = ExperimentConfig.resolve(args.config, _flags(args))
        config.validate(args.command)
        _COMMANDS[args.command](config, args, logger)
    except ValidationError as e:
        print(f"Error: {e}", file=sys.stderr)
        logger.run.errors.append(str(e))
        status = 1
    except NumericalError as e:
        print(f"Error: {e}", file=sys.stderr)
        logger.run.errors.append(str(e))
        status = 2
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        logger.run.errors.append(str(e))
        status = 1

    run = logger.finish()
    if args.verbose:
        print(run.summary(), file=sys.stderr)
    if args.log_json:
        try:
            write_text_atomic(args.log_json, run.to_json(pretty=True) + "\n")
        except OSError as e:
            print(f"Error: cannot write log: {e}", file=sys.stderr)
            status = status or 1
    return status


def _flags(args: argparse.Namespace) -> dict[str, Any]:
    names = ExperimentConfig.field_names()
    return {k: v for k, v in vars(args).items() if k in names}


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _target(config: ExperimentConfig):
    """CSV destination: the --out path, else stdout."""
    return config.out or sys.stdout


def _report(config: ExperimentConfig, line: str) -> None:
    """Summary goes to stdout unless stdout carries the data."""
    print(line, file=sys.stdout if config.out else sys.stderr)


def _load_graph(config: ExperimentConfig, args: argparse.Namespace):
    path = getattr(args, "graph", None)
    if path:
        try:
            return read_graph(path)
        except OSError as e:
            raise ValidationError(f"cannot read graph file {path}: {e.strerror}", flag="--graph") from e
    return generate_regular(config.n, config.d, config.seed, method=config.generator, max_restarts=config.restarts)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_generate(config: ExperimentConfig, args, logger: RunLogger) -> None:
    logger.start_task("generate", "graph", n=config.n, d=config.d, seed=config.seed)
    g = generate_regular(config.n, config.d, config.seed, method=config.generator, max_restarts=config.restarts)
    logger.complete_task("generate", rejections=g.rejections)
    text = g.to_json() + "\n"
    if config.out:
        write_text_atomic(config.out, text)
    else:
        sys.stdout.write(text)
    line = f"generated n={g.n} d={g.d} seed={g.seed} ({g.generator}, {g.rejections} restarts)"
    if args.stats:
        line += f"; {graph_stats(g).summary()}"
    _report(config, line)


def _cmd_spectrum(config: ExperimentConfig, args, logger: RunLogger) -> None:
    g = _load_graph(config, args)
    logger.start_task("eigendecompose", "spectrum", n=g.n)
    pairs = eigendecompose(g)
    logger.complete_task("eigendecompose")
    write_eigen_csv(pairs, _target(config))
    if args.vector_out:
        write_vector_csv(nearest_eigenpair(pairs, config.lam), args.vector_out)
    tv = mckay_histogram_distance([p.eigenvalue for p in pairs], g.d)
    worst = max(p.residual for p in pairs)
    _report(config, f"spectrum n={g.n} d={g.d}: max residual {worst:.3e}, McKay TV distance {tv:.4f}")


def _cmd_sweep(config: ExperimentConfig, args, logger: RunLogger) -> None:
    g = _load_graph(config, args)
    pairs = eigendecompose(g)
    if args.indices:
        bad = [i for i in args.indices if not 0 <= i < len(pairs)]
        if bad:
            raise ValidationError(f"eigenvector indices {bad} outside 0..{len(pairs) - 1}", flag="--index")
        chosen = [(i, pairs[i]) for i in args.indices]
    else:
        target = nearest_eigenpair(pairs, config.lam)
        chosen = [(next(i for i, p in enumerate(pairs) if p is target), target)]

    sign = -1.0 if args.negate else 1.0
    curves = []
    for i, pair in chosen:
        logger.start_task(f"sweep-{i}", "level-set", eigenvalue=pair.eigenvalue)
        curves.append((i, pair.eigenvalue, sweep_ratio_curve(g, sign * pair.vector)))
        logger.complete_task(f"sweep-{i}", points=len(curves[-1][2]))

    if args.indices:
        write_curves_csv(curves, _target(config))
    else:
        write_curve_csv(curves[0][2], _target(config))
    for i, lam, curve in curves:
        try:
            est = steepest_point(curve, config.smoothing_window)
        except (NoTransition, TooFewPoints) as e:
            logger.skip_task(f"steepest-{i}", "steepest-point", str(e))
            _report(config, f"sweep index={i} lambda={lam:.6f}: no alpha_c ({e})")
            continue
        _report(
            config,
            f"sweep index={i} lambda={lam:.6f}: alpha_c={est.alpha_c:.4f}, "
            f"window [{est.window[0]:.4f}, {est.window[1]:.4f}]",
        )


def _cmd_critical_curve(config: ExperimentConfig, args, logger: RunLogger) -> None:
    rows = critical_curve_experiment(
        config.d, config.n, config.realizations, config.lambda_bins, config.seed,
        smoothing_window=config.smoothing_window, generator=config.generator,
        restarts=config.restarts, workers=config.workers, logger=logger,
    )
    write_critical_curve_csv(config.d, rows, _target(config))
    samples = sum(r.count for r in rows)
    _report(config, f"critical-curve d={config.d} n={config.n}: {len(rows)} bins, {samples} samples")


def _cmd_model_phi(config: ExperimentConfig, args, logger: RunLogger) -> None:
    model = WaveModel(config.lam, config.d)
    write_phi_csv(model, config.kmax, _target(config))
    _report(config, f"model-phi {model.describe()}: k=0..{config.kmax}")


def _cmd_model_critical(config: ExperimentConfig, args, logger: RunLogger) -> None:
    grid = list(config.lambda_grid) or default_lambda_grid(config.d, config.lambda_step)
    rows = model_curve(
        config.d, grid, tol=config.tol, quad_nodes=config.quad_nodes,
        truncation=config.truncation, workers=config.workers, logger=logger,
    )
    write_model_curve_csv(config.d, rows, _target(config))
    low = min(rows, key=lambda r: r.alpha_c)
    _report(config, f"model-critical d={config.d}: {len(rows)} points, minimum alpha_c={low.alpha_c:.4f} at lambda={low.lam:g}")


def _cmd_sample_wave(config: ExperimentConfig, args, logger: RunLogger) -> None:
    model = WaveModel(config.lam, config.d)
    batch = sample_ball(model, config.radius, config.count, config.seed, workers=config.workers, logger=logger)
    write_sample_csv(batch, _target(config))
    worst = float(batch.eigen_residuals().max()) if batch.ball.radius else 0.0
    _report(config, f"sample-wave {model.describe()}: {batch.count} samples on {batch.ball.size} vertices, max eigen residual {worst:.2e}")


def _cmd_fig5(config: ExperimentConfig, args, logger: RunLogger) -> None:
    result = fig5(config, config.out or ".", logger)
    print(result.summary())
    print(f"wrote {result.graph_csv}, {result.model_csv}, {result.overlay_csv}, {result.svg}")


def _cmd_sharpening(config: ExperimentConfig, args, logger: RunLogger) -> None:
    rows = sharpening_experiment(
        config.d, config.sizes, config.samples, config.seed,
        target_lambda=config.lam, smoothing_window=config.smoothing_window,
        generator=config.generator, restarts=config.restarts, workers=config.workers, logger=logger,
    )
    write_sharpening_csv(config.d, rows, _target(config))
    widths = ", ".join(f"n={r.n}: {r.mean_width:.4f}" for r in rows)
    _report(config, f"sharpening d={config.d}: {widths}")


def _cmd_plot(config: ExperimentConfig, args, logger: RunLogger) -> None:
    if not config.out:
        raise ValidationError("plot needs an output path", flag="--out")
    path = plot_svg(PlotSpec(
        input=args.input, x=args.x, y=args.y, output=config.out, group=args.group,
        xlabel=args.xlabel, ylabel=args.ylabel, title=args.title, step=args.step,
    ))
    print(f"wrote {path}")


_COMMANDS = {
    "generate": _cmd_generate,
    "spectrum": _cmd_spectrum,
    "sweep": _cmd_sweep,
    "critical-curve": _cmd_critical_curve,
    "model-phi": _cmd_model_phi,
    "model-critical": _cmd_model_critical,
    "sample-wave": _cmd_sample_wave,
    "fig5": _cmd_fig5,
    "sharpening": _cmd_sharpening,
    "plot": _cmd_plot,
}


if __name__ == "__main__":
    sys.exit(main())
