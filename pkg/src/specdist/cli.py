"""Command-line front end.

Subcommands: ``mp`` (evaluate the limit law), ``simulate`` (one seeded
matrix to a spectrum CSV), ``rates`` (replication sweeps with a fitted
log-log slope), ``haar-test`` (bridge-statistic diagnostic), and
``check-bounds`` (three-term bound report).

Exit codes: 0 success, 1 validation error, 2 numeric error.  Output is
deterministic for fixed flags: JSON carries 17 significant digits, tables
6.  Timing fields are omitted unless ``--timing`` is given, so rerunning
the same command line reproduces output files byte for byte.
"""

import argparse
import json
import sys

from . import _jsonfmt
from .ensemble import EntryDistribution, condition_entries, default_eta, sample_entries
from .errors import DomainError, NumericError, SpecdistError
from .metrics import BoundContext, berry_esseen_bound
from .mp_law import MPLaw
from .ratelab import (
    ExperimentConfig,
    run_expected_sweep,
    run_haar_experiment,
    run_pathwise_sweep,
)
from .spectra import DirectionSpec, dump_spectrum_csv, make_vesd, spectrum_of

__all__ = ["main", "entry_point"]


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; this package reserves 2 for
    # numeric failures, so usage errors are remapped to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _fmt6(x):
    return format(float(x), ".6g")


def _comma_floats(text):
    try:
        return [float(t) for t in text.split(",") if t != ""]
    except ValueError:
        raise DomainError(f"expected comma-separated numbers, got {text!r}") from None


def _comma_ints(text):
    try:
        return [int(t) for t in text.split(",") if t != ""]
    except ValueError:
        raise DomainError(f"expected comma-separated integers, got {text!r}") from None


def _complex_points(text):
    """Parse ``u,v`` pairs separated by semicolons into upper-half-plane points."""
    points = []
    for chunk in text.split(";"):
        parts = chunk.split(",")
        if len(parts) != 2:
            raise DomainError(f"expected 'u,v' pairs, got {chunk!r}")
        try:
            u, v = float(parts[0]), float(parts[1])
        except ValueError:
            raise DomainError(f"expected 'u,v' pairs, got {chunk!r}") from None
        points.append(complex(u, v))
    return points


def _write_output(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _build_parser():
    parser = _Parser(prog="specdist", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_mp = sub.add_parser("mp",
                          help="evaluate the limit law: pdf, cdf, Stieltjes transforms")
    p_mp.add_argument("--y", type=float, required=True, help="aspect ratio index in (0, 1]")
    p_mp.add_argument("--support", action="store_true", help="print the support edges (a, b)")
    p_mp.add_argument("--pdf-at", metavar="X[,X...]", help="density at the given points")
    p_mp.add_argument("--cdf-at", metavar="X[,X...]", help="CDF at the given points")
    p_mp.add_argument("--stieltjes-at", metavar="U,V[;U,V...]",
                      help="Stieltjes transform at z = u + iv (v > 0)")
    p_mp.add_argument("--companion-at", metavar="U,V[;U,V...]",
                      help="companion transform at z = u + iv (v > 0)")
    p_mp.add_argument("--format", choices=("text", "json"), default="text",
                      help="text tables use 6 significant digits, JSON 17 (default: text)")
    p_mp.add_argument("--out", help="write to this file instead of stdout")

    p_sim = sub.add_parser("simulate",
                           help="one seeded matrix -> spectrum CSV (eigenvalues and weights)")
    p_sim.add_argument("--dist", default="complex-gaussian",
                       help="entry law: real-gaussian, complex-gaussian, rademacher, "
                            "uniform-centered, student-t(DF) (default: complex-gaussian)")
    p_sim.add_argument("--n", type=int, required=True, help="rows (dimension)")
    p_sim.add_argument("--N", type=int, required=True, help="columns (sample size), n <= N")
    p_sim.add_argument("--seed", type=int, default=0, help="64-bit seed token (default: 0)")
    p_sim.add_argument("--direction", default="basis:1",
                       help="projection direction: basis:K, uniform, random-unit:SEED "
                            "(default: basis:1)")
    p_sim.add_argument("--condition", action="store_true",
                       help="apply truncation/centralization/rescaling before the covariance")
    p_sim.add_argument("--eta", type=float, default=None,
                       help="truncation scale (default: max(0.5, 2 N^-0.05))")
    p_sim.add_argument("--out", required=True, help="output CSV path")

    p_rates = sub.add_parser("rates",
                             help="replication sweep over N with a fitted log-log slope")
    p_rates.add_argument("--config", help="JSON sweep config (mirrors the flags below); "
                                          "other experiment flags must be omitted")
    p_rates.add_argument("--metric", choices=("vesd-expected", "vesd-pathwise", "esd"),
                         help="distance to sweep (default: vesd-pathwise)")
    p_rates.add_argument("--y", type=float, help="target aspect ratio; n = round(y N)")
    p_rates.add_argument("--grid", metavar="N1,N2,...", help="ascending sample sizes")
    p_rates.add_argument("--reps", type=int, help="replications per sample size")
    p_rates.add_argument("--seed", type=int, help="base seed")
    p_rates.add_argument("--dist", help="entry law (default: complex-gaussian)")
    p_rates.add_argument("--direction", help="projection direction (default: basis:1)")
    p_rates.add_argument("--condition", action="store_true", help="condition entries first")
    p_rates.add_argument("--eta", type=float, default=None, help="truncation scale")
    p_rates.add_argument("--format", choices=("json", "csv"), default="json",
                         help="report format (default: json)")
    p_rates.add_argument("--timing", action="store_true",
                         help="include wall-clock fields (breaks byte-for-byte reruns)")
    p_rates.add_argument("--out", help="write the report to this file")

    p_haar = sub.add_parser("haar-test",
                            help="bridge-statistic sample vs the Kolmogorov limit law")
    p_haar.add_argument("--dist", default="real-gaussian",
                        help="entry law (default: real-gaussian; the sqrt(n/2) bridge "
                             "normalization is calibrated for real data)")
    p_haar.add_argument("--y", type=float, required=True, help="aspect ratio; n = round(y N)")
    p_haar.add_argument("--N", type=int, required=True, help="sample size")
    p_haar.add_argument("--reps", type=int, required=True, help="replications (>= 50)")
    p_haar.add_argument("--seed", type=int, default=0, help="base seed (default: 0)")
    p_haar.add_argument("--direction", default="random-unit:0",
                        help="projection direction (default: random-unit:0; redrawn "
                             "per replication)")
    p_haar.add_argument("--out", help="write the JSON report to this file")

    p_bounds = sub.add_parser("check-bounds",
                              help="three-term distance bound plus the smoothing bound")
    p_bounds.add_argument("--dist", default="complex-gaussian", help="entry law for the sample")
    p_bounds.add_argument("--n", type=int, required=True, help="rows (dimension)")
    p_bounds.add_argument("--N", type=int, required=True, help="columns (sample size)")
    p_bounds.add_argument("--seed", type=int, default=0, help="seed (default: 0)")
    p_bounds.add_argument("--direction", default="basis:1", help="projection direction")
    p_bounds.add_argument("--v", type=float, required=True, help="imaginary height v > 0")
    p_bounds.add_argument("--A", type=float, required=True, help="outer integration limit")
    p_bounds.add_argument("--B", type=float, required=True, help="tail cutoff, A > B > 5")
    p_bounds.add_argument("--K1", type=float, default=1.0, help="constant K1 (default: 1)")
    p_bounds.add_argument("--K2", type=float, default=1.0, help="constant K2 (default: 1)")
    p_bounds.add_argument("--K3", type=float, default=1.0, help="constant K3 (default: 1)")
    p_bounds.add_argument("--out", help="write the JSON report to this file")
    return parser


def _cmd_mp(args):
    law = MPLaw(args.y)
    rows = [("y", law.y), ("a", law.a), ("b", law.b)] if args.support else [("y", law.y)]
    requested = args.support
    for flag, name, fn in (
        ("pdf_at", "pdf", law.pdf),
        ("cdf_at", "cdf", law.cdf),
    ):
        text = getattr(args, flag)
        if text is None:
            continue
        requested = True
        for x in _comma_floats(text):
            rows.append((f"{name}({_fmt6(x)})", fn(x)))
    for flag, name, fn in (
        ("stieltjes_at", "m", law.stieltjes),
        ("companion_at", "m_comp", law.companion_stieltjes),
    ):
        text = getattr(args, flag)
        if text is None:
            continue
        requested = True
        for z in _complex_points(text):
            rows.append((f"{name}({_fmt6(z.real)},{_fmt6(z.imag)})", fn(z)))
    if not requested:
        raise DomainError("nothing to evaluate: pass --support, --pdf-at, --cdf-at, "
                          "--stieltjes-at, or --companion-at")
    if args.format == "json":
        payload = {}
        for key, val in rows:
            if isinstance(val, complex):
                payload[key] = {"re": val.real, "im": val.imag}
            else:
                payload[key] = float(val)
        text = _jsonfmt.dumps(payload) + "\n"
    else:
        lines = []
        for key, val in rows:
            if isinstance(val, complex):
                lines.append(f"{key} = {_fmt6(val.real)} + {_fmt6(val.imag)}i")
            else:
                lines.append(f"{key} = {_fmt6(val)}")
        text = "\n".join(lines) + "\n"
    _write_output(text, args.out)
    return 0


def _simulated_spectrum(args):
    X = sample_entries(EntryDistribution.parse(args.dist), args.n, args.N, args.seed)
    if getattr(args, "condition", False):
        X = condition_entries(X, args.eta if args.eta is not None else default_eta(args.N))
    return spectrum_of(X, DirectionSpec.parse(args.direction))


def _cmd_simulate(args):
    dump_spectrum_csv(_simulated_spectrum(args), args.out)
    return 0


def _rates_config(args):
    flag_names = ("metric", "y", "grid", "reps", "seed", "dist", "direction")
    if args.config is not None:
        given = [f"--{n}" for n in flag_names if getattr(args, n) is not None]
        if args.condition:
            given.append("--condition")
        if args.eta is not None:
            given.append("--eta")
        if given:
            raise DomainError(f"--config replaces the experiment flags; drop {', '.join(given)}")
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                return ExperimentConfig.from_dict(json.load(fh))
        except OSError as exc:
            raise DomainError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise DomainError(f"config is not valid JSON: {exc}") from None
    missing = [f"--{name}" for name in ("y", "grid", "reps", "seed") if getattr(args, name) is None]
    if missing:
        raise DomainError(f"missing {', '.join(missing)} (or use --config)")
    return ExperimentConfig(
        distribution=EntryDistribution.parse(args.dist or "complex-gaussian"),
        y=args.y,
        sample_sizes=tuple(_comma_ints(args.grid)),
        replications=args.reps,
        direction=DirectionSpec.parse(args.direction or "basis:1"),
        base_seed=args.seed,
        condition=args.condition,
        eta=args.eta,
        metric=args.metric or "vesd-pathwise",
    )


def _cmd_rates(args):
    cfg = _rates_config(args)
    runner = run_expected_sweep if cfg.metric == "vesd-expected" else run_pathwise_sweep
    report = runner(cfg)
    for p in report.points:
        sys.stderr.write(
            f"N={p.N} n={p.n} median={_fmt6(p.median)} ({_fmt6(p.wallclock_ms)} ms)\n"
        )
    if args.format == "csv":
        text = report.to_csv(include_timing=args.timing)
    else:
        text = report.to_json(include_timing=args.timing)
    _write_output(text, args.out)
    return 0


def _cmd_haar(args):
    cfg = ExperimentConfig(
        distribution=EntryDistribution.parse(args.dist),
        y=args.y,
        sample_sizes=(args.N,),
        replications=args.reps,
        direction=DirectionSpec.parse(args.direction),
        base_seed=args.seed,
    )
    stats, ks = run_haar_experiment(cfg)
    payload = {
        "schema": "specdist.haar/v1",
        "config": cfg.to_dict(),
        "n": cfg.dim_of(args.N),
        "statistics": list(stats),
        "ks_vs_kolmogorov": ks,
    }
    _write_output(_jsonfmt.dumps(payload) + "\n", args.out)
    return 0


def _cmd_check_bounds(args):
    spec = _simulated_spectrum(args)
    law = MPLaw(spec.y_n)
    ctx = BoundContext(A=args.A, B=args.B, v=args.v, K1=args.K1, K2=args.K2, K3=args.K3)
    H = make_vesd(spec.eigenvalues, spec.weights)
    report = berry_esseen_bound(H, law, ctx)
    lhs_smooth, rhs_smooth = law.smoothing_integral(args.v)
    payload = {
        "schema": "specdist.bounds/v1",
        "dist": args.dist,
        "n": args.n,
        "N": args.N,
        "seed": args.seed,
        "direction": args.direction,
        "bound": report.to_dict(),
        "smoothing": {"v": args.v, "lhs": lhs_smooth, "rhs": rhs_smooth,
                      "holds": lhs_smooth < rhs_smooth},
    }
    _write_output(_jsonfmt.dumps(payload) + "\n", args.out)
    return 0


_COMMANDS = {
    "mp": _cmd_mp,
    "simulate": _cmd_simulate,
    "rates": _cmd_rates,
    "haar-test": _cmd_haar,
    "check-bounds": _cmd_check_bounds,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except DomainError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except NumericError as exc:
        sys.stderr.write(f"numeric error: {exc}\n")
        return 2
    except SpecdistError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


def entry_point():
    raise SystemExit(main())
