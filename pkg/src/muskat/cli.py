"""Command-line interface: ``muskat <subcommand> ...``.

Exit codes: 0 success or PASS, 1 usage or configuration error, 2 numerical
failure or verification FAIL.  The worker count comes from ``--workers`` or
the ``MUSKAT_WORKERS`` environment variable.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import config_io as io, parallel
from .grid_spectral import make_grid
from .monitor import check_inequality, decay_surveillance, smallness_gate
from .norms import DEFAULT_C, norm_report
from .timestepper import BlowUpError, run, scale_to_smallness
from .verify import (
    equivalence_study,
    identity_suite,
    interpolation_suite,
    linear_symbol_fit,
)

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="muskat", description="Muskat flow with surface tension: simulation and checks.")
    p.add_argument("--workers", type=int, default=None, help="worker threads (default: $MUSKAT_WORKERS or 1)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="integrate a configured simulation")
    r.add_argument("--config", required=True)
    r.add_argument("--resume", help="continue from a snapshot")
    r.add_argument("--out", default="out", help="output directory (default: out)")

    v = sub.add_parser("verify-identities", help="closed-form alpha derivatives vs differencing")
    v.add_argument("--n", type=int, default=256)
    v.add_argument("--alphas", type=_floats, default=[0.1, 0.25, 0.5, 1.0])
    v.add_argument("--tol", type=float, default=1e-5)
    v.add_argument("--min-ratio", type=float, default=3.5)

    e = sub.add_parser("verify-equivalence", help="slope form vs seven-term form")
    e.add_argument("--field", default="0.2 sin(x) + 0.05 sin(3x)")
    e.add_argument("--sigma", type=float, default=1.0)
    e.add_argument("--refinements", type=int, default=3)
    e.add_argument("--n", type=int, default=256)
    e.add_argument("--tol", type=float, default=1e-3,
                   help="mismatch threshold at the finest level (relax for steep fields)")

    s = sub.add_parser("linear-symbol", help="small-amplitude growth rates")
    s.add_argument("--k-max", type=int, default=8)
    s.add_argument("--sigma", type=_floats, default=[1.0])
    s.add_argument("--n", type=int, default=256)
    s.add_argument("--amplitude", type=float, default=1e-6)
    s.add_argument("--formulation", default="cp1", choices=("cp0", "cp1", "nf"))
    s.add_argument("--tol", type=float, default=0.01)

    i = sub.add_parser("verify-interpolation", help="Hoelder interpolation on random fields")
    i.add_argument("--samples", type=int, default=100)
    i.add_argument("--seed", type=int, default=0)

    m = sub.add_parser("monitor", help="check a saved series against the integrated inequality")
    m.add_argument("--series", required=True)
    m.add_argument("--K", type=float, required=True)
    m.add_argument("--slack", type=float, default=1e-8)

    nm = sub.add_parser("norms", help="norm report of a snapshot")
    nm.add_argument("--snapshot", required=True)
    nm.add_argument("--C", type=float, default=DEFAULT_C)
    return p


# --- subcommands -------------------------------------------------------------

def _fmt_report(nr) -> str:
    return (f"l2={nr.l2:.6e} h32={nr.h32:.6e} h3={nr.h3:.6e} b1={nr.b1_inf_1:.6e} "
            f"lip={nr.lip:.6e} smallness={nr.smallness:.6e}")


def cmd_run(args) -> int:
    warnings: list[str] = []
    try:
        cfg = io.load_config(args.config, warnings)
    except io.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    t0 = 0.0
    if args.resume:
        try:
            f0, meta = io.load_snapshot(args.resume)
        except (OSError, io.SnapshotError) as exc:
            print(f"cannot resume: {exc}", file=sys.stderr)
            return EXIT_USAGE
        if f0.grid != cfg.grid:
            print("cannot resume: snapshot grid differs from the configured grid", file=sys.stderr)
            return EXIT_USAGE
        t0 = meta["time"]
        if not t0 < cfg.t_end:
            print(f"cannot resume: snapshot time {t0} is not before t_end", file=sys.stderr)
            return EXIT_USAGE
    else:
        try:
            f0 = io.parse_field(cfg.init, cfg.grid, cfg.seed)
            if cfg.init_smallness is not None:
                f0 = scale_to_smallness(f0, cfg.init_smallness, cfg.smallness_C, cfg.rule)
        except ValueError as exc:
            print(f"config error: init: {exc}", file=sys.stderr)
            return EXIT_USAGE

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    code = EXIT_OK
    try:
        traj = run(cfg, f0, t0=t0)
    except BlowUpError as exc:
        traj = exc.trajectory
        print(f"numerical failure: {exc}", file=sys.stderr)
        code = EXIT_FAIL
    if traj is not None and traj.reports:
        io.write_timeseries(traj, out / "timeseries.csv", "csv")
        io.write_timeseries(traj, out / "timeseries.json", "json")
    if traj is not None and traj.final_field is not None:
        t_last = traj.times[-1] if traj.times else t0
        io.save_snapshot(traj.final_field, {"time": t_last, "params": cfg.params}, out / "final.snap")
    summary = _summary(cfg, traj, code)
    (out / "summary.txt").write_text(summary, encoding="utf-8")
    print(summary, end="")
    return code


def _summary(cfg, traj, code) -> str:
    lines = [f"formulation={cfg.formulation} n={cfg.grid.n_points} dt={cfg.dt:g} t_end={cfg.t_end:g}"]
    if traj is None or not traj.reports:
        lines.append("no reports recorded")
        return "\n".join(lines) + "\n"
    lines.append(f"initial: {_fmt_report(traj.reports[0])}")
    lines.append(f"final (t={traj.times[-1]:.6g}): {_fmt_report(traj.reports[-1])}")
    gate = smallness_gate(traj)
    verdict = "held throughout" if gate["held_throughout"] else f"violated at t={gate['first_violation']:.6g}"
    lines.append(f"smallness gate: {verdict}")
    kreq = max(e.K_required for e in traj.energies)
    lines.append(f"realized K_required (max over reports): {kreq:.6e}")
    drift = max(abs(m - traj.means[0]) for m in traj.means)
    lines.append(f"max mean drift: {drift:.3e}")
    if traj.halted:
        lines.append(f"halted: {traj.halt_reason}")
    lines.append("status: " + ("completed" if code == EXIT_OK else "numerical failure"))
    return "\n".join(lines) + "\n"


def cmd_identities(args) -> int:
    try:
        rows = identity_suite(args.n, args.alphas, tol=args.tol, min_ratio=args.min_ratio)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"{'field':<20} {'alpha':>6} {'identity':<8} {'max_err':>10} {'ratio':>7}  result")
    bad_alpha = False
    for r in rows:
        if r.message:
            bad_alpha = True
            print(f"{r.field:<20} {r.alpha:>6g} {'-':<8} {'-':>10} {'-':>7}  ERROR: {r.message}")
            continue
        ratio = "-" if r.ratio is None else f"{r.ratio:.2f}"
        print(f"{r.field:<20} {r.alpha:>6g} {r.identity:<8} {r.error:>10.3e} {ratio:>7}  "
              f"{'PASS' if r.passed else 'FAIL'}")
    if bad_alpha:
        print("usage: alphas must be nonzero; rows marked ERROR were skipped", file=sys.stderr)
        return EXIT_USAGE
    ok = all(r.passed for r in rows)
    print("overall:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_equivalence(args) -> int:
    try:
        grid = make_grid(args.n)
        f = io.parse_field(args.field, grid)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not args.sigma > 0 or args.refinements < 1:
        print("error: need sigma > 0 and refinements >= 1", file=sys.stderr)
        return EXIT_USAGE
    res = equivalence_study(f, args.sigma, args.refinements)
    print(f"{'level':>5} {'n_alpha':>8} {'alpha_max':>10} {'mismatch':>12}")
    for lv in res["levels"]:
        print(f"{lv['level']:>5} {lv['n_alpha']:>8} {lv['alpha_max']:>10.4g} {lv['mismatch']:>12.4e}")
    print("term L2 norms at the finest level:")
    for k, v in res["levels"][-1]["terms"].items():
        print(f"  {k:<14} {v:.6e}")
    ok = res["final"] <= args.tol and res["decreasing"]
    print(f"decreasing: {res['decreasing']}  final: {res['final']:.3e}  tol: {args.tol:g}")
    print("overall:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_linear_symbol(args) -> int:
    if args.k_max < 1:
        print("error: --k-max must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    res = linear_symbol_fit(args.k_max, args.sigma, n=args.n, amplitude=args.amplitude,
                            formulation=args.formulation)
    ok = True
    print(f"{'sigma':>6} {'k':>3} {'rate':>14} {'expected':>10} {'rel_err':>10}")
    for s, k, rate, exp, err in res["surface"]:
        ok &= err <= args.tol
        print(f"{s:>6g} {k:>3d} {rate:>14.8g} {exp:>10g} {err:>10.2e}")
    print(f"{'k':>3} {'c_g(k)':>14}")
    for k, c in res["gravity"]:
        print(f"{k:>3d} {c:>14.10g}")
    ok &= res["c_g_spread"] <= args.tol
    print(f"c_g = {res['c_g']:.10g}, spread across k = {res['c_g_spread']:.2e}")
    print("overall:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_interpolation(args) -> int:
    res = interpolation_suite(args.samples, args.seed)
    print(f"{res['passed']}/{res['samples']} PASS")
    print(f"single-mode max relative gap: {res['single_mode_max_rel_gap']:.2e}")
    ok = res["passed"] == res["samples"]
    print("overall:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_monitor(args) -> int:
    try:
        recs = io.read_timeseries(args.series)
        res = check_inequality(recs, args.K)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    gate = smallness_gate(recs)
    dec = decay_surveillance(recs, args.slack)
    print(f"reports: {len(recs)}")
    print(f"inequality with K={args.K:g}: {'ok' if res['ok'] else 'VIOLATED'} "
          f"(worst margin {res['worst_margin']:.3e} at t={res['worst_time']:.6g})")
    if res["K_required_max"] is not None:
        print(f"realized K_required max: {res['K_required_max']:.6e}")
    if res["degenerate"]:
        print("note: K = 0 while the dissipation integrals are positive")
    print(f"smallness gate: {'held' if gate['held_throughout'] else 'violated'}")
    print(f"h32 growth between reports: max {dec['max_growth']:.3e}, "
          f"{len(dec['violations'])} above slack {args.slack:g}")
    ok = res["ok"]
    print("overall:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_norms(args) -> int:
    try:
        f, meta = io.load_snapshot(args.snapshot)
    except (OSError, io.SnapshotError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    nr = norm_report(f, args.C, time=meta["time"])
    for k, v in nr.as_dict().items():
        print(f"{k:<10} {v:.17g}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "verify-identities": cmd_identities,
    "verify-equivalence": cmd_equivalence,
    "linear-symbol": cmd_linear_symbol,
    "verify-interpolation": cmd_interpolation,
    "monitor": cmd_monitor,
    "norms": cmd_norms,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers is not None:
        if args.workers < 1:
            parser.error("--workers must be >= 1")
        parallel.set_workers(args.workers)
    try:
        parallel.worker_count()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    finally:
        parallel.set_workers(None)


if __name__ == "__main__":
    sys.exit(main())
