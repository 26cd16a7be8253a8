"""Command-line front end: magnetic-gaps <subcommand>.

Exit codes: 0 success, 2 gap violation (verify-gaps), 3 numeric failure,
64 usage error. All numeric output uses 17 significant digits so reruns
with identical configs are byte-identical.
"""

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .bloch import bloch_spectrum
from .eig import EigOptions
from .errors import InvalidConfig, MagneticGapsError
from .fields import analyze_zeros, find_zeros, load_field, vanishing_order
from .harness import VerificationConfig, run_verification
from .intervals import GapWindow, TransferParams, gap_exponent, optimal_kappa, transfer
from .model_op import ModelProblem, default_problem, model_spectrum, poincare_gauge

log = logging.getLogger("magnetic_gaps")

USAGE_EXIT = 64
GAP_VIOLATION_EXIT = 2
NUMERIC_EXIT = 3


def _fmt(x):
    return f"{x:.17g}"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class UsageError(Exception):
    pass


def _build_parser():
    parser = _Parser(prog="magnetic-gaps", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("zeros", help="locate field zeros and their orders")
    p.add_argument("--field", required=True)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("model-spectrum", help="low spectrum of one zero's model operator")
    p.add_argument("--field", required=True)
    p.add_argument("--zero-index", type=int, default=0)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--box", type=float, default=0.0, help="box halfwidth (0 = auto)")
    p.add_argument("--grid", type=int, default=0, help="grid points per axis (0 = auto)")
    p.add_argument("--scaled", action="store_true", help="divide by h^((2k+2)/(k+2))")
    p.add_argument("--seed", type=int, default=0)

    for name in ("bloch-spectrum", "bands"):
        p = sub.add_parser(
            name,
            help="theta-swept fiber spectra" if name == "bloch-spectrum" else "merged bands",
        )
        p.add_argument("--field", required=True)
        p.add_argument("--h", type=float, required=True)
        p.add_argument("--theta-grid", type=int, default=8)
        p.add_argument("--cutoff", type=float, required=True)
        p.add_argument("--grid", type=int, default=0)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("verify-gaps", help="end-to-end gap verification")
    p.add_argument("--config", required=True)
    p.add_argument("--svg", action="store_true")

    p = sub.add_parser("transfer", help="gap-transfer window map")
    p.add_argument("--params", required=True, help="flat key = value parameter file")
    p.add_argument("--a1", type=float, required=True)
    p.add_argument("--b1", type=float, required=True)

    p = sub.add_parser("kappa", help="optimal cutoff exponent and shrink rate")
    p.add_argument("--k", type=int, required=True)
    return parser


def _load_params(path):
    kv = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidConfig(f"{path}: expected 'key = value', got {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            kv[key] = float(val)
    try:
        return TransferParams(**kv)
    except TypeError as exc:
        raise InvalidConfig(f"{path}: {exc}") from exc


def _cmd_zeros(args):
    field = load_field(args.field)
    print("x,y,k,comp_lower,comp_upper")
    for datum in analyze_zeros(field, seed_grid=args.grid, tol=args.tol):
        print(
            f"{_fmt(datum.position[0])},{_fmt(datum.position[1])},{datum.order},"
            f"{_fmt(datum.comp_lower)},{_fmt(datum.comp_upper)}"
        )
    return 0


def _cmd_model_spectrum(args):
    field = load_field(args.field)
    data = analyze_zeros(field)
    if not 0 <= args.zero_index < len(data):
        raise UsageError(f"zero index {args.zero_index} out of range (found {len(data)} zeros)")
    datum = data[args.zero_index]
    gauge = poincare_gauge(datum.leading_form)
    if args.box and args.grid:
        problem = ModelProblem(
            gauge=gauge, h=args.h, box_halfwidth=args.box, grid_n=args.grid
        )
    elif args.box or args.grid:
        raise UsageError("--box and --grid must be given together (or neither)")
    else:
        problem = default_problem(gauge, args.h)
    log.info("model problem: k=%d box=%g grid=%d", datum.order, problem.box_halfwidth, problem.grid_n)
    slc = model_spectrum(problem, args.levels, options=EigOptions(m=args.levels, seed=args.seed))
    scale = args.h ** gap_exponent(datum.order) if args.scaled else 1.0
    print("index,eigenvalue,residual")
    for i, (ev, res) in enumerate(zip(slc.eigenvalues, slc.residuals)):
        print(f"{i},{_fmt(ev / scale)},{_fmt(res)}")
    return 0


def _cmd_bloch(args, bands_only):
    field = load_field(args.field)
    bands = bloch_spectrum(
        field,
        args.h,
        theta_samples=args.theta_grid,
        cutoff=args.cutoff,
        grid_n=args.grid or None,
        options=EigOptions(m=4, seed=args.seed),
    )
    if bands_only:
        print("lo,hi")
        for lo, hi in bands.merged_bands:
            print(f"{_fmt(lo)},{_fmt(hi)}")
    else:
        print("theta1,theta2,index,eigenvalue")
        for (i1, i2) in sorted(bands.slices):
            slc = bands.slices[(i1, i2)]
            th = slc.meta["theta"]
            for i, ev in enumerate(slc.eigenvalues):
                print(f"{_fmt(th[0])},{_fmt(th[1])},{i},{_fmt(ev)}")
    return 0


def _cmd_verify(args):
    config = VerificationConfig.from_file(args.config)
    if args.svg and not config.svg:
        config = VerificationConfig(**{**vars(config), "svg": True})
    log.info("effective config: %s", config)
    report = run_verification(config)
    print(f"ladder: {' '.join(_fmt(v) for v in report.ladder.values)}")
    for row in report.rows:
        verdicts = " ".join("empty" if r[0] else "HIT" for r in row.interval_results)
        print(f"N={row.n} ground_dev={_fmt(row.ground_deviation)} intervals: {verdicts}")
    print(f"N0={report.n0} pass={report.passed}")
    if report.partial:
        log.error("partial report: %s", report.error)
        return NUMERIC_EXIT
    return 0 if report.passed else GAP_VIOLATION_EXIT


def _cmd_transfer(args):
    if not args.a1 < args.b1:
        raise UsageError(f"need a1 < b1, got {args.a1} >= {args.b1}")
    params = _load_params(args.params)
    res = transfer(params, GapWindow(args.a1, args.b1))
    verdict = "yes" if res.valid else "no:" + ";".join(res.violated)
    print(f"{_fmt(res.a2)} {_fmt(res.b2)} valid:{verdict}")
    return 0


def _cmd_kappa(args):
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    kappa_star, s_star = optimal_kappa(args.k)
    print(
        f"kappa_star {kappa_star.numerator}/{kappa_star.denominator} {_fmt(float(kappa_star))} "
        f"s_star {s_star.numerator}/{s_star.denominator} {_fmt(float(s_star))}"
    )
    return 0


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose > 1 else (logging.INFO if args.verbose else logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    log.info("magnetic-gaps %s, numpy %s", __version__, np.__version__)

    try:
        if args.command == "zeros":
            return _cmd_zeros(args)
        if args.command == "model-spectrum":
            return _cmd_model_spectrum(args)
        if args.command == "bloch-spectrum":
            return _cmd_bloch(args, bands_only=False)
        if args.command == "bands":
            return _cmd_bloch(args, bands_only=True)
        if args.command == "verify-gaps":
            return _cmd_verify(args)
        if args.command == "transfer":
            return _cmd_transfer(args)
        if args.command == "kappa":
            return _cmd_kappa(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except InvalidConfig as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except MagneticGapsError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return NUMERIC_EXIT
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
