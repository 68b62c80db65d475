"""Command-line front end.

Verbs: simulate, montecarlo, compare, backtest <csv>, calibrate <csv>.
Exit codes: 0 success, 2 validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import baselines, costs, pricemodels, strategies
from .calibration import calibrate_ou_jump
from .errors import ConfigError, CsvParseError, DomainError, PathexecError
from .harness import emit_plotdata, ingest_csv, load_config, run_scenario
from .pathcalc import SampledPath, TimeGrid

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 2, 3


def _add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required, help="scenario config file")
    p.add_argument("--seed", type=int, default=None, help="override root seed")
    p.add_argument("--paths", type=int, default=None, help="override path count")
    p.add_argument("--grid", type=int, default=None, help="override grid steps")
    p.add_argument("--out", default=None, help="override output directory")
    p.add_argument("--dump-trajectories", action="store_true",
                   help="write per-path trajectory CSVs")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pathexec",
                                 description="pathwise-optimal trade execution toolkit")
    sub = ap.add_subparsers(dest="verb", required=True)

    for verb, blurb in (("simulate", "run a scenario and emit trajectory plot data"),
                        ("montecarlo", "run a scenario for aggregates only"),
                        ("compare", "print a strategy comparison table")):
        p = sub.add_parser(verb, help=blurb)
        _add_common(p)

    p = sub.add_parser("backtest", help="replay strategies on a historical csv")
    p.add_argument("csv", help="price series file")
    p.add_argument("--format", choices=("time-price", "lobster-mid"),
                   default="time-price")
    p.add_argument("--window", type=float, default=None,
                   help="moving-average window for the price forecast")
    _add_common(p)

    p = sub.add_parser("calibrate", help="fit the jump-diffusion model to a csv")
    p.add_argument("csv", help="price series file")
    p.add_argument("--format", choices=("time-price", "lobster-mid"),
                   default="time-price")
    p.add_argument("--window", type=float, default=None,
                   help="moving-average window (default: a tenth of the span)")
    p.add_argument("--threshold", type=float, default=4.0,
                   help="jump threshold in transition standard deviations")
    return ap


def _apply_overrides(config, args) -> None:
    if args.seed is not None:
        config.seed = args.seed
    if args.paths is not None:
        config.paths = args.paths
    if args.grid is not None:
        config.grid_steps = args.grid
    if args.out is not None:
        config.out_dir = args.out
    if args.dump_trajectories:
        config.dump_trajectories = True
    config.validate()


def _print_stats(artifact) -> None:
    print(f"paths={artifact.path_count} criterion={artifact.config.criterion} "
          f"seed={artifact.config.seed}")
    header = f"{'strategy':<24} {'mean cost':>16} {'stderr':>12} {'mean q_T err':>14} {'stderr':>12}"
    print(header)
    for s in artifact.stats:
        print(f"{s.tag:<24} {s.mean_cost:>16.6g} {s.cost_stderr:>12.3g} "
              f"{s.mean_terminal_error:>14.6g} {s.terminal_stderr:>12.3g}")
        if s.xi_quantiles:
            q = s.xi_quantiles
            print(f"{'':<24}  xi quantiles: q10={q['q10']:.4g} "
                  f"q50={q['q50']:.4g} q90={q['q90']:.4g}")


def _cmd_scenario(args, dump_default: bool) -> int:
    config = load_config(args.config)
    _apply_overrides(config, args)
    if dump_default and not config.dump_trajectories:
        config.dump_trajectories = True
    artifact = run_scenario(config)
    _print_stats(artifact)
    files = emit_plotdata(artifact, config.out_dir)
    print(f"wrote {len(files)} files to {config.out_dir}")
    return EXIT_OK


def _cmd_backtest(args) -> int:
    series = ingest_csv(args.csv, args.format)
    config = load_config(args.config)
    _apply_overrides(config, args)
    # window in the series' own time units
    window = args.window if args.window is not None else series.span / 10.0

    # historical path becomes the realized trajectory on a uniform grid over
    # the normalized horizon; the forecast is the smoothed reversion target
    grid = TimeGrid.uniform(config.params.horizon, config.grid_steps)
    scale = config.params.horizon / series.span
    t_norm = (series.timestamps - series.timestamps[0]) * scale
    idx = np.clip(np.searchsorted(t_norm, grid.times, side="right") - 1, 0,
                  series.prices.size - 1)
    realized = SampledPath(grid, series.prices[idx])
    target = calibrate_ou_jump(series, window).target
    expected = SampledPath(grid, np.exp(np.interp(grid.times / scale, target.grid.times,
                                                  target.values)))

    config.model = pricemodels.DeterministicPrice.from_path(realized)
    plans = {
        "static": baselines.static_optimal(config.params, expected),
        "good": strategies.good_exec_quadratic_closed(config.params, realized, expected),
        "aposteriori": baselines.aposteriori_optimal(config.params, realized),
        "twap": baselines.twap(config.params, grid),
    }
    print(f"backtest of {args.csv}: {series.prices.size} rows, horizon "
          f"{config.params.horizon}")
    for tag, plan in plans.items():
        j = costs.cost_J(config.criterion, config.params, realized, plan)
        print(f"{tag:<14} cost={j:.6g} terminal={plan.terminal:.6g}")
    from .harness import RunArtifact, TrajectoryBundle

    bundle = TrajectoryBundle(
        times=grid.times, price=realized.values, expected=expected.values,
        q_static=plans["static"].q.values, q_good=plans["good"].q.values,
        q_aposteriori=plans["aposteriori"].q.values, rate_good=plans["good"].r.values,
    )
    artifact = RunArtifact(config=config, stats=[], path_count=1,
                           trajectories=[bundle])
    files = emit_plotdata(artifact, config.out_dir)
    print(f"wrote {len(files)} files to {config.out_dir}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    series = ingest_csv(args.csv, args.format)
    window = args.window if args.window is not None else series.span / 10.0
    fit = calibrate_ou_jump(series, window, k=args.threshold)
    print(f"calibrated {args.csv}: {series.prices.size} rows, span {series.span:.6g}")
    print(f"reversion speed alpha = {fit.ou.alpha:.6g}"
          + (" (boundary)" if fit.ou.boundary else ""))
    print(f"ou volatility  sigma  = {fit.ou.sigma:.6g}")
    print(f"jump intensity lambda = {fit.jumps.intensity:.6g} ({fit.jumps.count} jumps)")
    print(f"mark size (two-point) = {fit.jumps.mark_size:.6g}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.verb == "simulate":
            return _cmd_scenario(args, dump_default=True)
        if args.verb in ("montecarlo", "compare"):
            return _cmd_scenario(args, dump_default=False)
        if args.verb == "backtest":
            return _cmd_backtest(args)
        if args.verb == "calibrate":
            return _cmd_calibrate(args)
        raise ConfigError(f"unknown verb {args.verb!r}")
    except (ConfigError, CsvParseError, DomainError, PathexecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
