"""``rqm`` command line: one binary, one subcommand per pipeline stage.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 insufficient
data for a statistical estimate.  Every randomised path takes ``--seed``
(default 0), so repeated runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path

import numpy as np

from .applications import SurrogateSpec, sync_index, twin_surrogate
from .core import InsufficientDataError, Metric, RecurrenceError, format_report
from .recmat import build_matrix, calibrate_epsilon, export_pgm, load_matrix, save_matrix
from .reconstruct import PROXIES, reconstruct
from .rqa import correlation_sum, curve_csv, d2_slope, diagonal_histogram, k2_fit
from .stats import (
    ball_row,
    return_times,
    test_exponential,
    test_independence,
    test_poisson_counts,
)
from .systems import STATE_DIM, SystemSpec, delay_embed, generate, load_csv, save_csv
from .verify import check_separation, collapse_twins

EXIT_USAGE, EXIT_DATA, EXIT_INSUFFICIENT = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _threshold_flags(p, required=True, what="recurrence rate"):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--epsilon", type=float, help="recurrence threshold (strict d < epsilon)")
    g.add_argument("--rate", type=float, help=f"target {what}; epsilon is calibrated to it")
    p.add_argument("--metric", default="euclidean", choices=[m.value for m in Metric])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rqm", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None,
                        help="cap on BLAS/OpenMP worker threads (default: all cores)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="simulate a map or flow to CSV")
    p.add_argument("--system", required=True, choices=sorted(STATE_DIM))
    p.add_argument("--n", type=int, default=1000, help="samples kept")
    p.add_argument("--dt", type=float, default=0.01, help="RK4 step (flows)")
    p.add_argument("--transient", type=int, default=0, help="samples discarded first")
    p.add_argument("--x0", default=None, help="comma-separated initial state")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                   help="system parameter override (repeatable)")
    p.add_argument("--noise", type=float, default=1e-12, help="Bernoulli kick amplitude")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("recmat", help="build a recurrence matrix (RQM1 file)")
    p.add_argument("--in", dest="inp", required=True, help="trajectory CSV")
    _threshold_flags(p)
    p.add_argument("--embed-dim", type=int, default=None,
                   help="delay-embed a 1-D series into this dimension first")
    p.add_argument("--lag", type=int, default=1, help="delay embedding lag")
    p.add_argument("--seed", type=int, default=0, help="seed for calibration subsampling")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", default=None, help="also write a PGM recurrence plot")
    p.add_argument("--report", default=None)

    p = sub.add_parser("verify", help="check the separation condition and twins")
    p.add_argument("--in", dest="inp", required=True, help="RQM1 matrix")
    p.add_argument("--collapse-out", default=None, help="write the twin-collapsed matrix")
    p.add_argument("--report", default=None)

    p = sub.add_parser("reconstruct", help="rebuild a point set from a matrix")
    p.add_argument("--in", dest="inp", required=True, help="RQM1 matrix")
    p.add_argument("--m", type=int, default=3, help="embedding dimension")
    p.add_argument("--proxy", default="completed", choices=PROXIES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="reconstructed trajectory CSV")
    p.add_argument("--report", default=None)

    p = sub.add_parser("stats", help="return-time statistics for one reference point")
    p.add_argument("--in", dest="inp", required=True,
                   help="RQM1 matrix, or trajectory CSV (then --epsilon/--rate set the ball)")
    p.add_argument("--index", type=int, default=0, help="reference point")
    _threshold_flags(p, required=False, what="ball measure")
    p.add_argument("--window", type=int, default=None,
                   help="window for Poisson counts (default: 5 x mean return time)")
    p.add_argument("--shuffles", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples-out", default=None, help="return times as one-column CSV")
    p.add_argument("--report", default=None)

    p = sub.add_parser("invariants", help="K2 entropy and correlation sum")
    p.add_argument("--in", dest="inp", required=True, help="trajectory CSV")
    _threshold_flags(p)
    p.add_argument("--lmin", type=int, default=2, help="minimum line length in the histogram")
    p.add_argument("--lrange", default="2:12", help="K2 fit lengths LO:HI")
    p.add_argument("--d2-eps", default=None, metavar="LO:HI:COUNT",
                   help="log-spaced thresholds for the correlation sum")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--histogram-out", default=None)
    p.add_argument("--corrsum-out", default=None)
    p.add_argument("--report", default=None)

    p = sub.add_parser("surrogate", help="twin surrogates of a trajectory")
    p.add_argument("--in", dest="inp", required=True, help="trajectory CSV")
    _threshold_flags(p)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--min-twins", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True, help="files PREFIX_000.csv, ...")

    p = sub.add_parser("sync", help="synchronization index of two matrices")
    p.add_argument("--x", required=True, help="RQM1 matrix of the first system")
    p.add_argument("--y", required=True, help="RQM1 matrix of the second system")
    p.add_argument("--report", default=None)
    return parser


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _matrix_from(traj, args):
    if args.epsilon is not None:
        eps, rate = args.epsilon, None
    else:
        cal = calibrate_epsilon(traj, args.rate, args.metric, seed=args.seed)
        eps, rate = cal.epsilon, cal.achieved_rate
    return build_matrix(traj, eps, args.metric), rate


def _cmd_generate(args):
    params = {}
    for item in args.param:
        name, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects NAME=VALUE, got {item!r}")
        try:
            params[name] = float(value)
        except ValueError:
            raise UsageError(f"--param {name}: not a number: {value!r}") from None
    x0 = [float(v) for v in args.x0.split(",")] if args.x0 else None
    spec = SystemSpec(args.system, n=args.n, params=params, x0=x0, dt=args.dt,
                      transient=args.transient, seed=args.seed, noise=args.noise)
    save_csv(generate(spec), args.out, comment=f"system={args.system} seed={args.seed}")


def _cmd_recmat(args):
    traj = load_csv(args.inp)
    if args.embed_dim:
        if traj.dim != 1:
            raise UsageError("--embed-dim needs a one-column input series")
        traj = delay_embed(traj.points[:, 0], args.embed_dim, args.lag, dt=traj.dt)
    R, rate = _matrix_from(traj, args)
    save_matrix(R, args.out)
    if args.plot:
        export_pgm(R, args.plot)
    if args.report:
        from .rqa import recurrence_rate
        _emit(format_report({"n": R.n, "epsilon": R.epsilon, "metric": R.metric.value,
                             "recurrence_rate": recurrence_rate(R) if R.n > 1 else None}),
              args.report)


def _cmd_verify(args):
    R = load_matrix(args.inp)
    _emit(check_separation(R).to_text(), args.report)
    if args.collapse_out:
        save_matrix(collapse_twins(R)[0], args.collapse_out)


def _cmd_reconstruct(args):
    R = load_matrix(args.inp)
    res = reconstruct(R, m=args.m, seed=args.seed, proxy=args.proxy)
    save_csv(res.embedded, args.out, comment=f"reconstructed m={args.m} seed={args.seed}")
    _emit(res.to_text(), args.report)


def _cmd_stats(args):
    if args.inp.endswith(".csv"):
        if args.epsilon is None and args.rate is None:
            raise UsageError("a CSV input needs --epsilon or --rate to define the ball")
        traj = load_csv(args.inp)
        if args.epsilon is not None:
            from .recmat import recurrence_row
            row, eps = recurrence_row(traj, args.index, args.epsilon, args.metric), args.epsilon
        else:
            row, eps = ball_row(traj, args.index, args.rate, args.metric)
        source = row
    else:
        source = load_matrix(args.inp)
        eps = source.epsilon
    sample = return_times(source, args.index)
    sample.epsilon = eps
    if args.samples_out:
        Path(args.samples_out).write_text(sample.to_csv())
    out = {"reference_index": args.index, "epsilon": float(eps), "n_times": len(sample)}
    insufficient = []
    try:
        ex = test_exponential(sample, seed=args.seed)
        out.update(exp_statistic=ex.statistic, exp_p_value=ex.p_value, mean_time=ex.extra["mean"])
    except InsufficientDataError as exc:
        insufficient.append(str(exc))
    try:
        ind = test_independence(sample, n_shuffles=args.shuffles, seed=args.seed)
        out.update(lag1_autocorrelation=ind.statistic, independence_p_value=ind.p_value,
                   independence_status=ind.extra["status"])
    except InsufficientDataError as exc:
        insufficient.append(str(exc))
    window = args.window
    if window is None and len(sample):
        window = max(1, int(round(5 * float(np.mean(sample.times)))))
    try:
        if window is None:
            raise InsufficientDataError("no return times: cannot choose a window")
        po = test_poisson_counts(source, args.index, window)
        out.update(window=window, dispersion=po.statistic, poisson_p_value=po.p_value)
    except InsufficientDataError as exc:
        insufficient.append(str(exc))
    if insufficient:
        out["insufficient"] = "; ".join(insufficient)
    _emit(format_report(out), args.report)
    if insufficient:
        raise InsufficientDataError(out["insufficient"])


def _cmd_invariants(args):
    traj = load_csv(args.inp)
    R, rate = _matrix_from(traj, args) if args.histogram_out else (None, None)
    eps = R.epsilon if R is not None else (
        args.epsilon if args.epsilon is not None
        else calibrate_epsilon(traj, args.rate, args.metric, seed=args.seed).epsilon)
    try:
        lo, hi = (int(v) for v in args.lrange.split(":"))
    except ValueError:
        raise UsageError(f"--lrange expects LO:HI, got {args.lrange!r}") from None
    out = {"n": traj.n, "epsilon": float(eps), "metric": args.metric}
    if R is not None:
        hist = diagonal_histogram(R, args.lmin)
        Path(args.histogram_out).write_text(hist.to_csv())
    if args.d2_eps:
        try:
            a, b, c = args.d2_eps.split(":")
            grid = np.geomspace(float(a), float(b), int(c))
        except ValueError:
            raise UsageError(f"--d2-eps expects LO:HI:COUNT, got {args.d2_eps!r}") from None
        curve = correlation_sum(traj, grid, args.metric)
        slope, resid = d2_slope(curve)
        out.update(d2=slope, d2_residual=resid)
        if args.corrsum_out:
            Path(args.corrsum_out).write_text(curve_csv(curve))
    fit = k2_fit(traj, eps, args.metric, (lo, hi))
    out.update(k2=fit.k2, k2_residual=fit.residual, diagonal_segments=fit.n_segments)
    _emit(format_report(out), args.report)


def _cmd_surrogate(args):
    traj = load_csv(args.inp)
    R, _ = _matrix_from(traj, args)
    spec = SurrogateSpec(count=args.count, seed=args.seed, min_twin_classes=args.min_twins)
    for k, s in enumerate(twin_surrogate(traj, R, spec)):
        save_csv(s, f"{args.out_prefix}_{k:03d}.csv",
                 comment=f"surrogate={k} seed={args.seed} epsilon={R.epsilon!r}")


def _cmd_sync(args):
    rx, ry = load_matrix(args.x), load_matrix(args.y)
    _emit(format_report({"n": rx.n, "sync_index": sync_index(rx, ry)}), args.report)


COMMANDS = {
    "generate": _cmd_generate,
    "recmat": _cmd_recmat,
    "verify": _cmd_verify,
    "reconstruct": _cmd_reconstruct,
    "stats": _cmd_stats,
    "invariants": _cmd_invariants,
    "surrogate": _cmd_surrogate,
    "sync": _cmd_sync,
}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        limits = contextlib.nullcontext()
        if args.threads is not None:
            from threadpoolctl import threadpool_limits
            limits = threadpool_limits(args.threads)
        with limits:
            COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except InsufficientDataError as exc:
        print(f"rqm: insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (RecurrenceError, OSError) as exc:
        print(f"rqm: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
