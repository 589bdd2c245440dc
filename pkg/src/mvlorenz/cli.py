"""Command-line interface.

Exit codes: 0 success, 1 invalid input or usage, 2 I/O failure. Primary
output is assembled in memory and written only when the command succeeds.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import secrets
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .core import GridSpec
from .copulas import (
    FAMILIES,
    PARAMETRIC,
    CopulaModel,
    MarginalModel,
    parametric_megc_mc,
    parametric_megc_quadrature,
    parametric_surface,
    spearman_to_param,
)
from .errors import MvLorenzError
from .estimator import megc, megc_decomposition, meilc_surface, pseudo_observations
from .ingestion import (
    PipelineConfig,
    format_float,
    load_table,
    preprocess,
    read_dataset,
    write_dataset_csv,
)
from .lorenz import CONVENTIONS, PLUGIN, TRAPEZOID, gini
from .reporting import (
    dominance_graph,
    export_dot,
    export_surface,
    report,
    reports_from_summary,
)
from .transfers import apply_transfers, parse_transfer_specs

log = logging.getLogger("mvlorenz")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2
THREADS_ENV = "MVLORENZ_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class _Out:
    """Collects primary output; numbers at 6 or 17 significant digits."""

    def __init__(self, full_precision: bool):
        self.digits = 17 if full_precision else 6
        self.parts: List[str] = []

    def num(self, x) -> str:
        return format_float(x, self.digits)

    def line(self, *cells):
        self.parts.append(",".join(self.num(c) if isinstance(c, float) else str(c) for c in cells) + "\n")

    def text(self, s: str):
        self.parts.append(s)

    def getvalue(self) -> str:
        return "".join(self.parts)


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        try:
            n = int(os.environ.get(THREADS_ENV, "1"))
        except ValueError:
            raise MvLorenzError(f"{THREADS_ENV} must be an integer") from None
    if n < 1:
        raise MvLorenzError("thread count must be positive")
    return n


def _seed(args) -> int:
    if args.seed is None:
        seed = secrets.randbelow(2**32)
        print(f"seed: {seed}", file=sys.stderr)
        return seed
    return args.seed


def _load(args):
    return read_dataset(args.input, args.columns, args.weight_column, args.delimiter)


def _write_or_return(text: str, path: Optional[str], out: _Out):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        out.text(text)


def _model(args) -> tuple:
    if not args.margin_a:
        raise MvLorenzError("--margin-a is required, one exponent per dimension")
    margins = [MarginalModel.power(a) for a in args.margin_a]
    dim = len(margins)
    family = args.family
    if family in PARAMETRIC:
        if (args.rho is None) == (args.theta is None):
            raise MvLorenzError(f"{family} needs exactly one of --rho or --theta")
        param = spearman_to_param(family, args.rho) if args.rho is not None else args.theta
    else:
        if args.rho is not None or args.theta is not None:
            raise MvLorenzError(f"{family} copula takes no parameter")
        param = None
    return CopulaModel(family, param, dim), margins


# ---------------------------------------------------------------------------
# subcommands


def cmd_gini(args, out: _Out):
    data = _load(args)
    conventions = CONVENTIONS if args.convention == "both" else (args.convention,)
    out.line("variable", "convention", "gini")
    for i, name in enumerate(data.var_names):
        for conv in conventions:
            out.line(name, conv, gini(data.values[:, i], data.weights, conv))


def cmd_megc(args, out: _Out):
    pseudo = pseudo_observations(_load(args))
    out.line("quantity", "value")
    out.line("megc", megc(pseudo))
    if pseudo.d == 2:
        dec = megc_decomposition(pseudo)
        out.line("cross_moment", dec.cross_moment)
        out.line("plugin_gini_1", dec.g1)
        out.line("plugin_gini_2", dec.g2)


def cmd_pseudo(args, out: _Out):
    data = _load(args)
    pseudo = pseudo_observations(data)
    lines = [",".join(data.var_names) + "\n"]
    lines += [",".join(format_float(x) for x in row) + "\n" for row in pseudo.stars.tolist()]
    _write_or_return("".join(lines), args.output, out)


def cmd_surface(args, out: _Out):
    if args.input:
        if args.family:
            raise MvLorenzError("give either --input or --family, not both")
        data = _load(args)
        surface = meilc_surface(pseudo_observations(data), GridSpec.uniform(data.d, args.grid_points))
    elif args.family:
        copula, margins = _model(args)
        surface = parametric_surface(copula, margins, GridSpec.uniform(copula.dim, args.grid_points))
    else:
        raise MvLorenzError("give --input or --family")
    _write_or_return(export_surface(surface, args.format), args.output, out)


def cmd_simulate(args, out: _Out):
    copula, margins = _model(args)
    out.line("model", str(copula).replace(",", ";"))
    out.line("margin_exponents", " ".join(format_float(a, 6) for a in args.margin_a))
    out.line("method", "estimate", "std_error")
    if args.method in ("mc", "both"):
        seed = _seed(args)
        est, se = parametric_megc_mc(copula, margins, args.count, seed, _threads(args))
        out.line("mc", est, se)
    if args.method in ("quadrature", "both"):
        est, err = parametric_megc_quadrature(copula, margins, return_error=True)
        out.line("quadrature", est, err)


def cmd_transfer(args, out: _Out):
    data = _load(args)
    with open(args.transfers, encoding="utf-8") as fh:
        specs = parse_transfer_specs(fh)
    data, records = apply_transfers(data, specs)
    for rec in records:
        doc = rec.as_dict()
        doc["before_megc"] = float(out.num(rec.before_megc))
        doc["after_megc"] = float(out.num(rec.after_megc))
        out.text(json.dumps(doc) + "\n")
    if args.output:
        write_dataset_csv(data, args.output)


def cmd_compare(args, out: _Out):
    if args.summary:
        if args.input:
            raise MvLorenzError("give either --input files or --summary, not both")
        reports = reports_from_summary(Path(args.summary).read_text(encoding="utf-8"))
    elif args.input:
        labels = args.labels or [Path(p).stem for p in args.input]
        if len(labels) != len(args.input):
            raise MvLorenzError("need one label per input file")
        reports = [
            report(read_dataset(p, args.columns, args.weight_column, args.delimiter), lab)
            for p, lab in zip(args.input, labels)
        ]
    else:
        raise MvLorenzError("give --input files or --summary")
    graph = dominance_graph(reports, reduce=not args.no_reduce)
    out.text(export_dot(graph))
    if args.reports:
        Path(args.reports).write_text(
            json.dumps([r.as_dict() for r in reports], indent=2) + "\n", encoding="utf-8"
        )


def cmd_ingest(args, out: _Out):
    config = PipelineConfig.from_file(args.config)
    table = load_table(args.input, delimiter=args.delimiter, required=config.used_columns())
    data, drops = preprocess(table, config)
    _write_or_return(write_dataset_csv(data), args.output, out)
    if args.drop_report:
        Path(args.drop_report).write_text(drops.to_json() + "\n", encoding="utf-8")
    else:
        print(drops.to_json(), file=sys.stderr)


# ---------------------------------------------------------------------------


def _data_options(p, multiple=False):
    if multiple:
        p.add_argument("--input", nargs="+", help="input CSV files")
    else:
        p.add_argument("--input", required=True, help="input CSV file")
    p.add_argument("--columns", nargs="+", help="value columns (default: all but the weight column)")
    p.add_argument("--weight-column", help="weight column (default: 'weight' if present)")
    p.add_argument("--delimiter", default=",")


def _model_options(p, required=True):
    p.add_argument("--family", choices=FAMILIES, required=required)
    p.add_argument("--rho", type=float, help="Spearman rank correlation to calibrate to")
    p.add_argument("--theta", type=float, help="copula parameter (gaussian: correlation)")
    p.add_argument("--margin-a", type=float, nargs="+", help="power exponents of u**a margins")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--full-precision", action="store_true", help="17 significant digits")
    common.add_argument("--threads", type=int, help=f"worker threads (env {THREADS_ENV})")
    common.add_argument("--seed", type=int, help="random seed")

    parser = _Parser(prog="mvlorenz", description="Multivariate Lorenz surfaces and Gini coefficients.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gini", parents=[common], help="univariate Gini per column")
    _data_options(p)
    p.add_argument("--convention", choices=(TRAPEZOID, PLUGIN, "both"), default=TRAPEZOID)
    p.set_defaults(func=cmd_gini)

    p = sub.add_parser("megc", parents=[common], help="multivariate Gini (+ decomposition for d=2)")
    _data_options(p)
    p.set_defaults(func=cmd_megc)

    p = sub.add_parser("pseudo", parents=[common], help="pseudo-observation matrix as CSV")
    _data_options(p)
    p.add_argument("--output")
    p.set_defaults(func=cmd_pseudo)

    p = sub.add_parser("surface", parents=[common], help="empirical or parametric surface grid")
    p.add_argument("--input")
    p.add_argument("--columns", nargs="+")
    p.add_argument("--weight-column")
    p.add_argument("--delimiter", default=",")
    _model_options(p, required=False)
    p.add_argument("--grid-points", type=int, default=101)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("simulate", parents=[common], help="parametric multivariate Gini")
    _model_options(p)
    p.add_argument("--count", type=int, default=10**6)
    p.add_argument("--method", choices=("mc", "quadrature", "both"), default="both")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("transfer", parents=[common], help="apply JSON-lines transfer specs")
    _data_options(p)
    p.add_argument("--transfers", required=True, help="JSON-lines file of transfer specs")
    p.add_argument("--output", help="write the transformed dataset here")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("compare", parents=[common], help="reports and dominance Hasse diagram")
    _data_options(p, multiple=True)
    p.add_argument("--labels", nargs="+")
    p.add_argument("--summary", help="CSV of precomputed figures (entity, Ginis..., megc)")
    p.add_argument("--no-reduce", action="store_true", help="keep transitively implied edges")
    p.add_argument("--reports", help="write report JSON here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("ingest", parents=[common], help="survey preprocessing pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--config", required=True, help="pipeline config (.json or .toml)")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--output", help="processed CSV (default: stdout)")
    p.add_argument("--drop-report", help="drop report JSON (default: stderr)")
    p.set_defaults(func=cmd_ingest)
    return parser


def run(argv: Optional[List[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        out = _Out(args.full_precision)
        args.func(args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except MvLorenzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    stdout.write(out.getvalue())
    return EXIT_OK


def main():  # pragma: no cover
    sys.exit(run())
