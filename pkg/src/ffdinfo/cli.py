"""Command-line front end.

Exit codes: 0 success, 1 a runtime finding (a fired condition contradicting
the exact ordering, a failed regime check, a threshold-table mismatch), 2 usage or
validation errors.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import sys
from typing import Iterator, TextIO

from . import asymptotics, clt, compare as cmp
from .config import DEFAULT_TOLERANCES, ConfigError, RunConfig, load_config, parse_assignment
from .ffd import FfdSpec, pmf_bernoulli_dp, pmf_stirling
from .inference import Design, mle_sample_i, mle_sample_ii, simulate_mle, write_mle_csv
from .sampling import DEFAULT_SEED, DesignParams, SampleIDraw, SampleIIDraw

EXIT_OK, EXIT_FINDING, EXIT_USAGE = 0, 1, 2


def fmt4(x: float) -> str:
    return f"{x:.4g}"


# -- argument parsing helpers -------------------------------------------------

def int_range(text: str) -> list[int]:
    """``a..b`` (inclusive) or a comma list of integers."""
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}; use a..b or a,b,c") from None


def float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def theta_grid(text: str) -> list[float]:
    """``log:lo:hi:count``, ``lin:lo:hi:count`` or a comma list."""
    if text.startswith(("log:", "lin:")):
        try:
            kind, lo, hi, count = text.split(":")
            lo, hi, count = float(lo), float(hi), int(count)
            if kind == "log":
                return cmp.log_grid(lo, hi, count)
            if count < 2 or hi <= lo:
                raise ValueError
            step = (hi - lo) / (count - 1)
            return [lo + i * step for i in range(count)]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid {text!r}; use log:lo:hi:count") from None
    return float_list(text)


@contextlib.contextmanager
def open_out(path: str | None) -> Iterator[TextIO]:
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run options")
    g.add_argument("--seed", type=lambda v: int(v, 0), default=None,
                   help=f"master seed, 64-bit unsigned (default {DEFAULT_SEED})")
    g.add_argument("--threads", default=None,
                   help="worker threads, integer or 'auto' (default: $FFDINFO_THREADS or 1)")
    g.add_argument("--config", default=None, help="key=value file overriding seed, threads, tolerances")
    g.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                   help="override a tolerance; names: " + ", ".join(DEFAULT_TOLERANCES))
    g.add_argument("--csv", nargs="?", const="-", default=None, metavar="PATH",
                   help="emit CSV (12 significant digits) to PATH, or stdout if PATH is omitted")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(
        prog="ffdinfo",
        description="Falling factorial distribution and Fisher information of "
                    "stratified (s samples of n) vs pooled (one sample of ns) Ewens sampling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pmf", parents=[common], help="pmf and cdf of FFD(m, theta)")
    p.add_argument("--m", type=int, required=True, help="sample size (elements, >= 1)")
    p.add_argument("--theta", type=float, required=True, help="diversity parameter (> 0)")
    p.add_argument("--method", choices=("stirling", "dp"), default="stirling",
                   help="Stirling recurrence or Bernoulli-sum DP (default stirling)")

    p = sub.add_parser("compare", parents=[common], help="I1 vs I2 and the sufficient conditions")
    p.add_argument("--n", type=int, required=True, help="per-sample size")
    p.add_argument("--s", type=int, required=True, help="number of samples")
    p.add_argument("--theta", type=float, required=True, help="diversity parameter (> 0)")

    p = sub.add_parser("scan", parents=[common], help="grid scan of relation vs fired conditions")
    p.add_argument("--n", type=int_range, required=True, help="range a..b or list a,b,c")
    p.add_argument("--s", type=int_range, required=True, help="range a..b or list a,b,c")
    p.add_argument("--theta-grid", type=theta_grid, required=True,
                   help="log:lo:hi:count, lin:lo:hi:count or a comma list")
    p.add_argument("--crossings", default=None, metavar="PATH",
                   help="write theta intervals where sign(g) flips, per (n, s), as CSV")

    p = sub.add_parser("mle", parents=[common], help="maximum-likelihood estimate of theta")
    p.add_argument("--design", choices=[d.value for d in Design], required=True)
    p.add_argument("--n", type=int, required=True, help="per-sample size")
    p.add_argument("--s", type=int, default=1, help="number of samples (default 1)")
    p.add_argument("--counts", type=int_range, default=None,
                   help="stratified data: block counts X_1,...,X_s")
    p.add_argument("--y", type=int, default=None, help="pooled data: block count Y")
    p.add_argument("--simulate", action="store_true", help="simulate datasets instead of reading data")
    p.add_argument("--theta", type=float, default=None, help="true theta for --simulate")
    p.add_argument("--replicates", type=int, default=2000, help="datasets for --simulate (default 2000)")

    p = sub.add_parser("regime", parents=[common], help="asymptotic regime convergence check")
    p.add_argument("--tag", choices=[t.value for t in asymptotics.RegimeTag], required=True)
    p.add_argument("--K", type=float, default=None, help="limit constant, regime IIIc only")
    p.add_argument("--n", type=int, default=3, help="fixed n for regimes III-V (default 3)")
    p.add_argument("--points", type=int, default=asymptotics.PATH_POINTS,
                   help=f"path points (default {asymptotics.PATH_POINTS})")

    p = sub.add_parser("clt", parents=[common], help="Monte Carlo normality check of T or Y")
    p.add_argument("--n", type=int, required=True, help="per-sample size")
    p.add_argument("--s", type=int, required=True, help="number of samples")
    p.add_argument("--theta", type=float, required=True, help="diversity parameter (> 0)")
    p.add_argument("--replicates", type=int, default=100_000, help="default 100000")
    p.add_argument("--statistic", choices=("T", "Y"), default="T",
                   help="T = stratified total, Y = pooled count (default T)")

    p = sub.add_parser("table1", parents=[common], help="threshold table of the T1 condition (theta >= 2)")
    p.add_argument("--s", type=int_range, default=list(cmp.TABLE1_S), help="default 2,3,10")
    p.add_argument("--theta", type=float_list, default=list(cmp.TABLE1_THETAS),
                   help="default 2,3,4,5,10,100")

    p = sub.add_parser("mgf", parents=[common], help="exact mgf of T vs the product formula")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--t", type=float_list, default=[-1.0, 0.0, 0.5, 1.0], help="default -1,0,0.5,1")
    return parser


def make_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.override("seed", str(args.seed))
    if args.threads is not None:
        cfg.override("threads", args.threads)
    for item in args.tol:
        cfg.override(*parse_assignment(item))
    cfg.output = args.csv
    return cfg


# -- subcommands --------------------------------------------------------------

def cmd_pmf(args, cfg: RunConfig) -> int:
    spec = FfdSpec(args.m, args.theta)
    table = pmf_stirling(spec) if args.method == "stirling" else pmf_bernoulli_dp(spec)
    probs, cdf = table.probs, table.cdf()
    if args.csv:
        with open_out(args.csv) as out:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(("x", "pmf", "cdf"))
            for x, (p, c) in enumerate(zip(probs, cdf), start=1):
                w.writerow((x, cmp.fmt_float(p), cmp.fmt_float(c)))
        return EXIT_OK
    print(f"{'x':>6} {'pmf':>12} {'cdf':>12}")
    for x, (p, c) in enumerate(zip(probs, cdf), start=1):
        print(f"{x:>6} {fmt4(p):>12} {fmt4(c):>12}")
    return EXIT_OK


def cmd_compare(args, cfg: RunConfig) -> int:
    params = DesignParams(args.n, args.s, args.theta)
    res = cmp.compare(params, cfg.tol("equal_rtol"))
    try:
        v = cmp.verdict(params)
    except cmp.InconsistentVerdictError as exc:
        print(f"FINDING: {exc}", file=sys.stderr)
        return EXIT_FINDING
    row = cmp.ScanRow(res, v)
    if args.csv:
        with open_out(args.csv) as out:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(cmp.CSV_HEADER)
            w.writerow(cmp.scan_csv_row(row))
    else:
        rel = {"I1_greater": "I1>I2", "I2_greater": "I1<I2", "equal": "I1=I2"}[res.relation.value]
        print(f"n={params.n} s={params.s} theta={fmt4(params.theta)}")
        print(f"I1 = {fmt4(res.i1)}  I2 = {fmt4(res.i2)}  g = s*ell_n - ell_ns = {fmt4(res.g)}")
        print(f"relation: {rel}")
        if v.fired:
            print(f"verdict: fired {v.tags}; guarantees {v.guarantee.value}")
        else:
            print("verdict: no sufficient condition fires")
    if row.contradictions:
        print(f"FINDING: {'+'.join(sorted(c.value for c in row.contradictions))} "
              f"contradicts the exact relation", file=sys.stderr)
        return EXIT_FINDING
    return EXIT_OK


def cmd_scan(args, cfg: RunConfig) -> int:
    rows = cmp.grid_scan(args.n, args.s, args.theta_grid, cfg.tol("equal_rtol"))
    crossings: list[tuple[int, int, float, float]] = []
    last: dict = {}

    def track(stream):
        for row in stream:
            if args.crossings:
                p, rel = row.params, row.comparison.relation
                key = (p.n, p.s)
                if rel is not cmp.Relation.EQUAL:
                    prev = last.get(key)
                    if prev is not None and prev[1] is not rel:
                        crossings.append((p.n, p.s, prev[0], p.theta))
                    last[key] = (p.theta, rel)
            yield row

    if args.csv:
        with open_out(args.csv) as out:
            summary = cmp.write_scan_csv(track(rows), out)
        report = sys.stderr
    else:
        summary = cmp.summarize(track(rows))
        report = sys.stdout
    if args.crossings:
        with open_out(args.crossings) as out:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(("n", "s", "theta_lo", "theta_hi"))
            for n, s, lo, hi in crossings:
                w.writerow((n, s, cmp.fmt_float(lo), cmp.fmt_float(hi)))
    print(f"rows: {summary.rows}  with a fired condition: {summary.fired_rows}", file=report)
    print(f"rows contradicting the exact relation: {summary.contradictions}", file=report)
    print(f"rows firing opposite guarantees: {summary.conflicts}", file=report)
    for c, count in summary.by_condition.items():
        if count:
            print(f"  {c.value}: {count} contradictions", file=report)
    return EXIT_FINDING if summary.contradictions or summary.conflicts else EXIT_OK


def cmd_mle(args, cfg: RunConfig) -> int:
    design = Design(args.design)
    tol = cfg.tol("residual_tol")
    if args.simulate:
        if args.theta is None:
            raise ValueError("--simulate needs --theta")
        params = DesignParams(args.n, args.s, args.theta)
        sim = simulate_mle(params, design, args.replicates, cfg.seed, cfg.threads, tol)
        if args.csv:
            with open_out(args.csv) as out:
                write_mle_csv([sim], out)
            return EXIT_OK
        print(f"{design.value} design, n={params.n} s={params.s} theta={fmt4(params.theta)}, "
              f"{args.replicates} datasets, seed {cfg.seed}")
        print(f"interior estimates: {int(sim.interior.sum())}")
        print(f"mean theta_hat = {fmt4(sim.mean)}  var = {fmt4(sim.variance)}  "
              f"1/I = {fmt4(sim.inverse_information)}  ratio = {fmt4(sim.variance_ratio)}")
        return EXIT_OK
    if design is Design.STRATIFIED:
        if args.counts is None:
            raise ValueError("stratified design needs --counts (or --simulate)")
        res = mle_sample_i(SampleIDraw(tuple(args.counts)), args.n, tol)
    else:
        if args.y is None:
            raise ValueError("pooled design needs --y (or --simulate)")
        res = mle_sample_ii(SampleIIDraw(args.y), DesignParams(args.n, args.s, 1.0), tol)
    se = "undefined" if res.std_error is None else fmt4(res.std_error)
    if args.csv:
        with open_out(args.csv) as out:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(("theta_hat", "status", "residual", "std_error"))
            w.writerow((cmp.fmt_float(res.theta_hat), res.status.value, cmp.fmt_float(res.residual),
                        "" if res.std_error is None else cmp.fmt_float(res.std_error)))
        return EXIT_OK
    print(f"theta_hat = {fmt4(res.theta_hat)}  status = {res.status.value}  "
          f"residual = {res.residual:.3g}  std_error = {se}")
    return EXIT_OK


def cmd_regime(args, cfg: RunConfig) -> int:
    regime = asymptotics.Regime(args.tag, args.K)
    ks, path = asymptotics.default_path(regime, args.n, args.points)
    report = asymptotics.convergence_check(regime, path, cfg.tol("ratio_band"), ks)
    if args.csv:
        with open_out(args.csv) as out:
            asymptotics.write_convergence_csv(report, out)
        out_info = sys.stderr
    else:
        out_info = sys.stdout
        print(f"{'k':>4} {'n':>10} {'s':>10} {'theta':>10} {'ratio1':>8} {'ratio2':>8}")
        for r in report.rows:
            p = r.params
            print(f"{r.k:>4} {fmt4(p.n):>10} {fmt4(p.s):>10} {fmt4(p.theta):>10} "
                  f"{fmt4(r.ratio1):>8} {fmt4(r.ratio2):>8}")
    second = "lower bound at every point" if regime.tag is asymptotics.RegimeTag.IV else "ratio2 in band"
    print(f"ratio1 in band: {report.ratio1_ok}; {second}: {report.ratio2_ok}", file=out_info)
    print(f"predicted {report.prediction.value}; exact at path end {report.final_relation.value}",
          file=out_info)
    return EXIT_OK if report.passed else EXIT_FINDING


def cmd_clt(args, cfg: RunConfig) -> int:
    params = DesignParams(args.n, args.s, args.theta)
    run = clt.run_clt_experiment if args.statistic == "T" else clt.run_clt_experiment_y
    rep = run(params, args.replicates, cfg.seed, cfg.threads)
    if args.csv:
        with open_out(args.csv) as out:
            clt.write_clt_csv([rep], out)
        return EXIT_OK
    if rep.ks_distance < cfg.tol("ks_pass"):
        call = "consistent with normal"
    elif rep.ks_distance > cfg.tol("ks_fail"):
        call = "not normal"
    else:
        call = "indeterminate"
    print(f"statistic {rep.statistic}: n={params.n} s={params.s} theta={fmt4(params.theta)}, "
          f"{rep.replicates} replicates, seed {rep.seed}")
    print(f"condition value = {fmt4(rep.condition_value)}  sigma = {fmt4(rep.sigma)}")
    print(f"mean shift = {fmt4(rep.mean_shift)}  KS = {fmt4(rep.ks_distance)} ({call})  "
          f"midpoint KS = {fmt4(rep.ks_midpoint)}")
    return EXIT_OK


def cmd_table1(args, cfg: RunConfig) -> int:
    cells = []
    for s in args.s:
        for th in args.theta:
            v = cmp.table1_quantity(th, s)
            ref = cmp.REFERENCE_TABLE1.get((th, s))
            cells.append((v, ref))
    mismatch = any(ref is not None and abs(v.without_one - ref) > 0.01 for v, ref in cells)
    if args.csv:
        with open_out(args.csv) as out:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(("theta", "s", "with_leading_one", "without_leading_one", "reference"))
            for v, ref in cells:
                w.writerow((cmp.fmt_float(v.theta), v.s, cmp.fmt_float(v.with_one),
                            cmp.fmt_float(v.without_one), "" if ref is None else f"{ref:.2f}"))
    else:
        print(f"{'theta':>6} {'s':>4} {'1+(...)':>10} {'(...)':>10} {'reference':>10}")
        for v, ref in cells:
            r = "" if ref is None else f"{ref:.2f}*"
            print(f"{fmt4(v.theta):>6} {v.s:>4} {v.with_one:>10.2f} {v.without_one:>10.2f} {r:>10}")
        print("* reference value; it matches the column without the leading 1 "
              "((floor(theta)-1+1/s)/ell_floor(theta)).")
    return EXIT_FINDING if mismatch else EXIT_OK


def cmd_mgf(args, cfg: RunConfig) -> int:
    params = DesignParams(args.n, args.s, args.theta)
    res = clt.t_mgf_check(params, args.t)
    m, th = res.closest_ffd
    if args.csv:
        with open_out(args.csv) as out:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(("n", "s", "theta", "max_rel_error", "min_tv_to_ffd", "closest_m", "closest_theta"))
            w.writerow((params.n, params.s, cmp.fmt_float(params.theta), cmp.fmt_float(res.max_rel_error),
                        cmp.fmt_float(res.min_tv_to_ffd), m, cmp.fmt_float(th)))
        return EXIT_OK
    print(f"max relative mgf error: {res.max_rel_error:.3g}")
    print(f"min total variation to FFD(m, theta'): {fmt4(res.min_tv_to_ffd)} "
          f"at m={m}, theta'={fmt4(th)}")
    return EXIT_OK


COMMANDS = {
    "pmf": cmd_pmf, "compare": cmd_compare, "scan": cmd_scan, "mle": cmd_mle,
    "regime": cmd_regime, "clt": cmd_clt, "table1": cmd_table1, "mgf": cmd_mgf,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(args)
        return COMMANDS[args.command](args, cfg)
    except (ValueError, TypeError, ConfigError, OSError) as exc:
        print(f"ffdinfo {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
