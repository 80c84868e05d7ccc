"""Command line interface.

Subcommands::

    simulate   emit a correlated simulated trade pair as two CSVs
    sweep      estimator curve over return intervals for two trade CSVs
    ensemble   normalized ensemble average over a manifest of pairs
    moments    dump discretization-error moments for one instrument

Exit codes: 0 success, 1 usage or configuration, 2 data error,
3 numerical degeneracy (failed cells are reported on stderr).
Parallelism is bounded by the EPPS_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from typing import IO, Sequence

from .errors import ConfigError, DataError, EppsError, NumericalError
from .harness import (
    GRID_ESTIMATORS,
    EppsCurve,
    SweepConfig,
    ensemble_average,
    epps_sweep,
)
from ._core import COMBINED, ESTIMATOR_KINDS
from .market_data import CsvTradeFormat, load_trades, write_trades
from .simulator import (
    DEFAULT_ALPHA0,
    DEFAULT_ALPHA1,
    DEFAULT_BETA1,
    GarchConfig,
    SimMarketConfig,
    simulate_pair,
)
from .market_data import previous_tick_sample
from .tick_correction import (
    TRIANGULAR,
    UNIFORM,
    build_histogram,
    estimate_moments,
    write_moments,
)

import numpy as np

DEFAULT_VOL_SCALE = 1e-3

_NUMERICAL_NAMES = (
    "DegenerateVarianceError",
    "DegenerateStatisticsError",
    "NoOverlapError",
    "IncompleteMomentsError",
    "CorrectionOvershootError",
)


class _Parser(argparse.ArgumentParser):
    """argparse parser that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _csv_ints(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def _csv_floats(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def _csv_names(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def build_parser() -> _Parser:
    parser = _Parser(prog="epps", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat key=value file with option defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="emit a simulated trade pair as CSVs")
    sim.add_argument("--c", type=float, required=True, help="target correlation in [0,1]")
    sim.add_argument("--n", type=int, default=720_000, help="underlying steps (seconds)")
    sim.add_argument("--wait", default="15,25", help="mean waiting times, e.g. 15,25")
    sim.add_argument("--start", type=float, default=1000.0, help="start price in ticks")
    sim.add_argument("--round", action=argparse.BooleanOptionalAction, default=True,
                     help="round trade prices to whole ticks")
    sim.add_argument("--seed", type=int, default=7)
    sim.add_argument("--alpha0", type=float, default=DEFAULT_ALPHA0)
    sim.add_argument("--alpha1", type=float, default=DEFAULT_ALPHA1)
    sim.add_argument("--beta1", type=float, default=DEFAULT_BETA1)
    sim.add_argument("--vol-scale", type=float, default=DEFAULT_VOL_SCALE,
                     help="return scale factor; 1e-3 keeps year-length price paths sane")
    sim.add_argument("--q-scale", type=float, default=1.0, help="tick coarseness multiplier")
    sim.add_argument("--tick-size", type=float, default=0.01)
    sim.add_argument("--symbols", default="SIMA,SIMB")
    sim.add_argument("--out-a", required=True, help="output CSV for the first instrument")
    sim.add_argument("--out-b", required=True, help="output CSV for the second instrument")

    def add_sweep_options(p):
        p.add_argument("--dt", default="60,120,180,300,600,900,1800",
                       help="comma-separated return intervals in seconds")
        p.add_argument("--est", default=",".join(GRID_ESTIMATORS),
                       help=f"estimators from {', '.join(ESTIMATOR_KINDS)}")
        p.add_argument("--tick-size", type=float, default=0.01)
        p.add_argument("--grid-free", action="store_true",
                       help="accept prices off the tick grid (continuous simulated data)")
        p.add_argument("--w-max", type=float, default=50.0)
        p.add_argument("--prior", choices=(TRIANGULAR, UNIFORM), default=TRIANGULAR)
        p.add_argument("--moments", choices=("auto", "interpolated", "uniform_null", "zero"),
                       default="auto")
        p.add_argument("--min-hist", type=int, default=100,
                       help="minimum price changes for a histogram")
        p.add_argument("--include-all", action="store_true",
                       help="textbook Pearson over all samples, ignoring overlap exclusion")
        p.add_argument("--out", default="-", help="output CSV path, '-' for stdout")

    swp = sub.add_parser("sweep", help="estimator curve for one instrument pair")
    swp.add_argument("--a", required=True, help="first instrument trade CSV")
    swp.add_argument("--b", required=True, help="second instrument trade CSV")
    add_sweep_options(swp)

    ens = sub.add_parser("ensemble", help="normalized ensemble over a manifest of pairs")
    ens.add_argument("--manifest", required=True,
                     help="text file, one 'a.csv,b.csv' pair per line")
    ens.add_argument("--anchor", type=int, required=True,
                     help="return interval of the normalization anchor")
    ens.add_argument("--anchor-est", default=COMBINED)
    add_sweep_options(ens)

    mom = sub.add_parser("moments", help="dump discretization-error moments")
    mom.add_argument("--a", required=True, help="instrument trade CSV")
    mom.add_argument("--dt", type=int, required=True, help="return interval in seconds")
    mom.add_argument("--prior", choices=(TRIANGULAR, UNIFORM), default=TRIANGULAR)
    mom.add_argument("--tick-size", type=float, default=0.01)
    mom.add_argument("--min-hist", type=int, default=100)
    mom.add_argument("--out", default="-")

    return parser


def _read_config(path: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _apply_config(parser: argparse.ArgumentParser, cfg: dict[str, str]) -> None:
    """Install config values as defaults on every matching option."""
    containers = [parser]
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            containers.extend(action.choices.values())
    for container in containers:
        updates = {}
        for action in container._actions:
            if action.dest in cfg:
                raw = cfg[action.dest]
                if action.type is not None:
                    updates[action.dest] = action.type(raw)
                elif isinstance(action.const, bool) or isinstance(action.default, bool):
                    updates[action.dest] = raw.lower() in ("1", "true", "yes", "on")
                else:
                    updates[action.dest] = raw
        if updates:
            container.set_defaults(**updates)


@contextlib.contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _sweep_config(args) -> SweepConfig:
    return SweepConfig(
        w_max=args.w_max,
        prior=args.prior,
        moments=args.moments,
        min_hist_changes=args.min_hist,
        include_all=args.include_all,
    )


def _load_pair(path_a: str, path_b: str, args):
    fmt = CsvTradeFormat(
        tick_size=args.tick_size, grid="free" if args.grid_free else "strict"
    )
    with open(path_a) as fh:
        a = load_trades(fh, fmt)
    with open(path_b) as fh:
        b = load_trades(fh, fmt)
    return a, b


def _report_cells(curve: EppsCurve, label: str) -> int:
    """Print failed cells; return the exit code they imply."""
    code = 0
    for cell in curve.errors():
        print(f"{label}: dt={cell.dt} {cell.estimator}: {cell.error}", file=sys.stderr)
        numerical = cell.error is not None and cell.error.startswith(_NUMERICAL_NAMES)
        code = max(code, 3 if numerical else 2)
    return code


def cmd_simulate(args) -> int:
    waits = _csv_floats(args.wait)
    if len(waits) != 2:
        raise ConfigError("--wait needs exactly two comma-separated values")
    symbols = _csv_names(args.symbols)
    if len(symbols) != 2:
        raise ConfigError("--symbols needs exactly two comma-separated names")
    garch = GarchConfig(
        c=args.c, n_steps=args.n, seed=args.seed,
        alpha0=args.alpha0, alpha1=args.alpha1, beta1=args.beta1,
        scale=args.vol_scale,
    )
    market = SimMarketConfig(
        start_price=args.start,
        mean_waiting_times=(waits[0], waits[1]),
        rounding=args.round,
        q_scale=args.q_scale,
        tick_size=args.tick_size,
        symbols=(symbols[0], symbols[1]),
    )
    pair = simulate_pair(garch, market)
    with open(args.out_a, "w") as fh:
        write_trades(pair.series1, fh)
    with open(args.out_b, "w") as fh:
        write_trades(pair.series2, fh)
    print(
        f"wrote {args.out_a} ({len(pair.series1)} trades) and "
        f"{args.out_b} ({len(pair.series2)} trades); "
        f"rejected seeds: {pair.n_rejected_seeds}",
        file=sys.stderr,
    )
    return 0


def cmd_sweep(args) -> int:
    series1, series2 = _load_pair(args.a, args.b, args)
    curve = epps_sweep(
        series1, series2, _csv_ints(args.dt), _csv_names(args.est), _sweep_config(args)
    )
    with _open_out(args.out) as fh:
        curve.to_csv(fh)
    return _report_cells(curve, "sweep")


def cmd_ensemble(args) -> int:
    pairs: list[tuple[str, str]] = []
    with open(args.manifest) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = _csv_names(line)
            if len(parts) != 2:
                raise DataError(f"{args.manifest}:{lineno}: expected 'a.csv,b.csv'")
            pairs.append((parts[0], parts[1]))
    if not pairs:
        raise DataError(f"{args.manifest}: no pairs")

    dts = _csv_ints(args.dt)
    names = _csv_names(args.est)
    cfg = _sweep_config(args)
    code = 0
    curves = []
    for path_a, path_b in pairs:
        series1, series2 = _load_pair(path_a, path_b, args)
        curve = epps_sweep(series1, series2, dts, names, cfg)
        code = max(code, _report_cells(curve, f"{path_a},{path_b}"))
        curves.append(curve)

    result = ensemble_average(curves, anchor_dt=args.anchor, anchor_estimator=args.anchor_est)
    for index, reason in result.excluded:
        print(f"excluded pair {pairs[index][0]},{pairs[index][1]}: {reason}", file=sys.stderr)
    with _open_out(args.out) as fh:
        result.to_csv(fh)
    return code


def cmd_moments(args) -> int:
    fmt = CsvTradeFormat(tick_size=args.tick_size)
    with open(args.a) as fh:
        series = load_trades(fh, fmt)
    n_points = (series.last_time - series.first_time) // args.dt
    if n_points < 1:
        raise DataError(f"data span supports no return at dt={args.dt}")
    path = previous_tick_sample(series, series.first_time, args.dt, int(n_points))
    changes = np.rint(np.diff(path.prices)).astype(np.int64)
    hist = build_histogram(changes, args.dt, series.tick_size, args.min_hist)
    moments = estimate_moments(hist, prior=args.prior)
    with _open_out(args.out) as fh:
        write_moments(moments, fh)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)

    parser = build_parser()
    try:
        if known.config:
            _apply_config(parser, _read_config(known.config))
        args = parser.parse_args(argv)
        handler = {
            "simulate": cmd_simulate,
            "sweep": cmd_sweep,
            "ensemble": cmd_ensemble,
            "moments": cmd_moments,
        }[args.command]
        return handler(args)
    except ConfigError as err:
        print(f"epps: {err}", file=sys.stderr)
        return 1
    except NumericalError as err:
        print(f"epps: {err}", file=sys.stderr)
        return 3
    except (DataError, EppsError) as err:
        print(f"epps: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"epps: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
