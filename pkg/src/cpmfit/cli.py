"""Command-line interface: fit, predict, and simulate subcommands.

Exit codes: 0 success (fit converged), 1 input or usage error, 2 fit did
not converge (the report is still written).  Machine output goes to
stdout or --out; warnings and errors go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import replace
from pathlib import Path

from .data import censor_transform, read_csv, validate_bounds
from .exceptions import CensoredMeanError, CpmError, InvalidBoundsError
from .inference import conditional_cdf, conditional_mean, conditional_quantile
from .links import LINK_NAMES
from .report import build_report, load_report, report_csv, report_json
from .simulate import (
    DEFAULT_BOUND_PAIRS,
    DEFAULT_GRID,
    SimDesign,
    ahat_bias_curve,
    bound_file_label,
    run_study,
)
from .solver import fit


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as exit code 1."""

    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="cpmfit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model to CSV data")
    p_fit.add_argument("--data", required=True, help="input CSV file")
    p_fit.add_argument("--outcome", required=True, help="outcome column name")
    p_fit.add_argument(
        "--covariates", default="", help="comma-separated covariate column names"
    )
    p_fit.add_argument("--link", choices=LINK_NAMES, default="logit")
    p_fit.add_argument("--lower", type=float, default=None, help="lower censoring bound")
    p_fit.add_argument("--upper", type=float, default=None, help="upper censoring bound")
    p_fit.add_argument(
        "--alpha-table",
        action="store_true",
        help="include the full transformation table (needed to predict later)",
    )
    p_fit.add_argument(
        "--residuals", action="store_true", help="include probability-scale residuals"
    )
    p_fit.add_argument("--out", default=None, help="output path (default stdout)")
    p_fit.add_argument("--format", choices=("json", "csv"), default="json")
    p_fit.set_defaults(func=_cmd_fit)

    p_pred = sub.add_parser("predict", help="prediction from a saved report")
    p_pred.add_argument("--model", required=True, help="JSON report saved with --alpha-table")
    p_pred.add_argument("--at", required=True, help="CSV of covariate rows")
    p_pred.add_argument("--cdf", type=float, default=None, help="P(Y <= value | z)")
    p_pred.add_argument("--exceed", type=float, default=None, help="P(Y > value | z)")
    p_pred.add_argument("--quantile", type=float, default=None, help="conditional quantile")
    p_pred.add_argument("--mean", action="store_true", help="conditional mean")
    p_pred.set_defaults(func=_cmd_predict)

    p_sim = sub.add_parser("simulate", help="run the Monte Carlo study")
    p_sim.add_argument("--n", type=int, default=100)
    p_sim.add_argument("--replicates", type=int, default=1000)
    p_sim.add_argument("--seed", type=int, default=2021)
    p_sim.add_argument(
        "--bounds",
        action="append",
        default=None,
        metavar="L,U",
        help="censoring pair 'L,U' or 'none'; repeatable (default: the four study pairs)",
    )
    p_sim.add_argument("--link", choices=LINK_NAMES, default="probit")
    p_sim.add_argument(
        "--grid", default=None, help="comma-separated y values for the bias curves"
    )
    p_sim.add_argument("--out-dir", default=".", help="directory for output files")
    p_sim.add_argument("--threads", type=int, default=1)
    p_sim.set_defaults(func=_cmd_simulate)
    return parser


def _split_names(text: str):
    return tuple(name.strip() for name in text.split(",") if name.strip())


def _write_out(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _cmd_fit(args) -> int:
    if (args.lower is None) != (args.upper is None):
        raise InvalidBoundsError("--lower and --upper must be given together")
    covariates = _split_names(args.covariates)
    y, z, names = read_csv(args.data, outcome=args.outcome, covariates=covariates)
    bounds = (args.lower, args.upper) if args.lower is not None else None
    ds = censor_transform(y, z, bounds, names=names or None)
    if bounds is not None and ds.n_left + ds.n_right == 0:
        print(
            "warning: no observation falls outside the bounds "
            f"[{bounds[0]!r}, {bounds[1]!r}]; censoring has no effect",
            file=sys.stderr,
        )
    result = fit(ds, link=args.link)
    report = build_report(result, alpha_table=args.alpha_table, residuals=args.residuals)
    text = report_json(report) if args.format == "json" else report_csv(report)
    _write_out(text, args.out)
    return 0 if result.converged else 2


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def _cmd_predict(args) -> int:
    model = load_report(args.model)
    _, z, _ = read_csv(args.at, outcome=None, covariates=model.covariate_names)
    wanted = (
        args.cdf is not None
        or args.exceed is not None
        or args.quantile is not None
        or args.mean
    )
    if not wanted:
        raise _UsageError(
            "nothing to predict; pass --cdf, --exceed, --quantile, or --mean"
        )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", "estimand", "arg", "estimate", "se", "ci_low", "ci_high", "note"])
    for i in range(z.shape[0]):
        zrow = z[i]
        if args.cdf is not None:
            r = conditional_cdf(model, args.cdf, zrow)
            writer.writerow(
                [i + 1, "cdf", repr(args.cdf), _fmt(r.estimate), _fmt(r.se),
                 _fmt(r.ci[0]), _fmt(r.ci[1]), r.note or ""]
            )
        if args.exceed is not None:
            r = conditional_cdf(model, args.exceed, zrow)
            ci_low = None if r.ci[1] is None else 1.0 - r.ci[1]
            ci_high = None if r.ci[0] is None else 1.0 - r.ci[0]
            writer.writerow(
                [i + 1, "exceed", repr(args.exceed), _fmt(1.0 - r.estimate),
                 _fmt(r.se), _fmt(ci_low), _fmt(ci_high), r.note or ""]
            )
        if args.quantile is not None:
            r = conditional_quantile(model, args.quantile, zrow)
            writer.writerow(
                [i + 1, "quantile", repr(args.quantile), _fmt(r.estimate), "",
                 _fmt(r.ci[0]), _fmt(r.ci[1]), r.note or ""]
            )
        if args.mean:
            try:
                r = conditional_mean(model, zrow)
                writer.writerow(
                    [i + 1, "mean", "", _fmt(r.estimate), _fmt(r.se),
                     _fmt(r.ci[0]), _fmt(r.ci[1]), ""]
                )
            except CensoredMeanError as exc:
                writer.writerow([i + 1, "mean", "", "", "", "", "", str(exc)])
    sys.stdout.write(buf.getvalue())
    return 0


def _parse_bound_arg(text: str):
    text = text.strip()
    if text.lower() == "none":
        return None
    parts = text.split(",")
    if len(parts) != 2:
        raise InvalidBoundsError(f"bounds must be 'L,U' or 'none', got {text!r}")
    try:
        pair = (float(parts[0]), float(parts[1]))
    except ValueError:
        raise InvalidBoundsError(f"cannot parse bounds {text!r}") from None
    return validate_bounds(pair)


def _cmd_simulate(args) -> int:
    if args.bounds:
        bound_pairs = tuple(_parse_bound_arg(b) for b in args.bounds)
    else:
        bound_pairs = DEFAULT_BOUND_PAIRS
    if args.grid is not None:
        try:
            grid = tuple(float(t) for t in args.grid.split(",") if t.strip())
        except ValueError:
            raise _UsageError(f"cannot parse --grid {args.grid!r}") from None
    else:
        grid = DEFAULT_GRID
    design = SimDesign(
        n=args.n,
        replicates=args.replicates,
        link=args.link,
        bound_pairs=bound_pairs,
        seed=args.seed,
        grid=grid,
    )
    threads = max(1, args.threads)
    table = run_study(design, threads=threads)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "metrics.csv").write_text(table.to_csv())
    (out_dir / "table1.txt").write_text(table.table1_text())
    for bounds in design.bound_pairs:
        points = tuple(
            g for g in design.grid if bounds is None or bounds[0] < g < bounds[1]
        )
        if not points:
            continue
        curve = ahat_bias_curve(replace(design, grid=points), bounds, threads=threads)
        name = f"bias_curve_{bound_file_label(bounds)}.csv"
        (out_dir / name).write_text(curve.to_csv())
    warning = table.nonconvergence_warning()
    if warning:
        print(warning, file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (CpmError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
