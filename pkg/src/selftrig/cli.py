"""
Command line front end.

    selftrig simulate <config> [--out DIR]
    selftrig predict  <config> [--t0 S] [--state X1,X2,...]
    selftrig verify   <config> [--seed N] [--grid H] [--events K]
    selftrig scalar   <config>

Exit codes: 0 success, 2 configuration error, 3 certificate violation,
4 predictor failure, 5 verification mismatch. ``SELFTRIG_LOG`` sets the log
level (error, warn, info, debug).
"""

import argparse
import logging
import os
from pathlib import Path
import sys

import numpy as np

from .certificate import build_derivative_matrices
from .config import parse_config
from .exceptions import ConfigError, PredictorError, SelfTrigError, VerificationMismatch
from .oracle import compare_with_oracle, random_system
from .output import write_events_csv, write_summary_json, write_trace_csv
from .plant import build_closed_loop
from .predictor import PredictionContext, minimize_plf, next_event
from .scalar import ScalarSystem, rho_k_analytic, validate_gain
from .simulator import run

log = logging.getLogger("selftrig")

BRANCH_LABELS = {
    "forward": "forward (minimum before crossing)",
    "backward": "backward (crossing before minimum)",
    "minimum-is-event": "minimum-is-event",
}
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging(quiet):
    level = LOG_LEVELS.get(os.environ.get("SELFTRIG_LOG", "warn").lower(), logging.WARNING)
    if quiet:
        level = max(level, logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


class _Printer:
    def __init__(self, quiet):
        self.quiet = quiet

    def __call__(self, *args):
        if not self.quiet:
            print(*args)


def cmd_simulate(cfg, out_dir, echo):
    result = run(cfg.sys, cfg.fb, cfg.cert, cfg.params, cfg.sim)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "csv" in cfg.formats:
            write_trace_csv(out / "trace.csv", result.trace)
            write_events_csv(out / "events.csv", result.events)
        if "json" in cfg.formats:
            write_summary_json(out / "summary.json", result.summary)
    except OSError as exc:
        raise ConfigError(f"cannot write to {out}: {exc.strerror}") from exc
    s = result.summary
    echo(f"events: {s.event_count}  lambda_max: {s.lambda_max:.6g}  settling: {s.settling_time}")
    for e in result.events[:6]:
        echo(f"  k={e.k:<3d} t_k={e.t_k:.3f}  gap={e.inter_event:.3f}  W_k={e.W_k:.6g}")
    echo(f"wrote {out}")
    if not result.ok:
        raise PredictorError(s.message)
    return 0


def _parse_state(text, n):
    try:
        x = np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"--state: {exc}") from exc
    if x.size != n:
        raise ConfigError(f"--state: expected {n} comma-separated values, got {x.size}")
    return x


def cmd_predict(cfg, t0, state, echo):
    dyn = build_closed_loop(cfg.sys, cfg.fb)
    derivs = build_derivative_matrices(cfg.sys, cfg.fb, cfg.cert.P)
    if state is None and t0 == 0.0:
        x, W_k = cfg.sys.x0, cfg.cert.W0
    else:
        x = cfg.sys.x0 if state is None else _parse_state(state, cfg.sys.n)
        W_k = float(x @ cfg.cert.P @ x)
    if not W_k > 0.0:
        echo("state is at the origin: no event is ever triggered")
        return 0
    ctx = PredictionContext.at_event(dyn, cfg.cert, derivs, x, t0, W_k)
    pred = next_event(ctx, cfg.params)
    echo(f"t_k      {t0:.9g}")
    echo(f"W_k      {W_k:.9g}")
    echo(f"rho_k    {pred.rho_k:.9g}  (iterations {pred.minimization.iterations})")
    if pred.bracket is not None:
        echo(f"bracket  [{pred.bracket.t_min:.9g}, {pred.bracket.t_max:.9g}]  (probes {pred.bracket.probes})")
    echo(f"t_next   {pred.t_next:.9g}")
    echo(f"branch   {BRANCH_LABELS[pred.branch]}")
    if pred.root is not None:
        r = pred.root
        echo(f"root     iterations {r.iterations}, newton {r.newton_steps}, bisection {r.bisection_steps}")
    echo(f"tol2     {pred.tol2:.3g}")
    return 0


def _scalar_system(cfg):
    extra = cfg.scalar or {}
    return ScalarSystem(
        a=float(cfg.sys.A[0, 0]),
        b=float(cfg.sys.B[0, 0]),
        K=float(cfg.fb.K[0, 0]),
        p=float(cfg.cert.P[0, 0]),
        q=extra.get("q"),
        c=extra.get("c", 1.0),
    )


def _scalar_rho_check(cfg, echo):
    ss = _scalar_system(cfg)
    dyn = build_closed_loop(cfg.sys, cfg.fb)
    derivs = build_derivative_matrices(cfg.sys, cfg.fb, cfg.cert.P)
    ctx = PredictionContext.at_event(dyn, cfg.cert, derivs, cfg.sys.x0, 0.0, cfg.cert.W0)
    numeric = minimize_plf(ctx, cfg.params).rho
    analytic = rho_k_analytic(ss, 0.0)
    tol = max(cfg.params.tol1, 1e-6)
    echo(f"rho analytic {analytic:.12g}  numeric {numeric:.12g}  |diff| {abs(analytic - numeric):.3e}")
    return abs(analytic - numeric) <= tol


def cmd_verify(cfg, seed, grid, count, echo):
    ok = True
    rows = compare_with_oracle(cfg.sys, cfg.fb, cfg.cert, cfg.params, count, grid)
    echo(f"{'k':>3} {'t_k':>12} {'predicted':>14} {'scan':>14} {'delta':>10}  runtime/gap")
    for r in rows:
        bad = not r.agrees(grid)
        ok &= not bad
        echo(
            f"{r.k:>3} {r.t_k:>12.6f} {r.t_predicted:>14.9f} {r.t_scan:>14.9f} {r.delta:>10.2e}"
            f"  {r.runtime / r.inter_event:.2e}{'  MISMATCH' if bad else ''}"
        )
    slow = [r.k for r in rows if r.runtime >= r.inter_event]
    echo(f"info: predictions slower than their inter-event interval: {slow or 'none'}")
    if cfg.sys.n == 1:
        ok &= _scalar_rho_check(cfg, echo)
    if seed is not None:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for i in range(20):
            n = 1 + i % 4
            rs, rf, rc = random_system(rng, n)
            res = compare_with_oracle(rs, rf, rc, cfg.params, count, grid)
            d = max(abs(r.delta) for r in res)
            worst = max(worst, d)
            bad = not all(r.agrees(grid) for r in res)
            ok &= not bad
            echo(f"random #{i:02d} n={n}: max |delta| {d:.2e}{'  MISMATCH' if bad else ''}")
        echo(f"random suite (seed {seed}): worst |delta| {worst:.2e}")
    if not ok:
        raise VerificationMismatch("predictor and dense scan disagree beyond tolerance")
    echo("verify: OK")
    return 0


def cmd_scalar(cfg, echo):
    if cfg.sys.n != 1:
        raise ConfigError("scalar: configuration is not first-order")
    ss = _scalar_system(cfg)
    check = validate_gain(ss)
    echo(f"gain case {check.case}: bK/(bK-a) = {check.ratio:.9g}  valid={check.valid}  after t_k={check.after_t_k}")
    if not check.valid:
        raise ConfigError("scalar: bK/(bK-a) is not positive; V has no minimum")
    ok = _scalar_rho_check(cfg, echo)
    result = run(cfg.sys, cfg.fb, cfg.cert, cfg.params, cfg.sim)
    gaps = [e.rho_k - (e.t_k - e.inter_event) for e in result.events[:5]]
    echo("rho_k - t_k over the first events: " + ", ".join(f"{g:.9f}" for g in gaps))
    if not ok:
        raise VerificationMismatch("numerical and analytic minimizers disagree")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="selftrig", description=__doc__.split("\n\n")[0].strip())
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides output.directory)")
    common.add_argument("--quiet", action="store_true", help="suppress normal output")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run the closed loop and write CSV/JSON")
    p = sub.add_parser("predict", parents=[common], help="predict one event")
    p.add_argument("--t0", type=float, default=0.0, help="update instant (s)")
    p.add_argument("--state", help="plant state at t0, comma separated")
    v = sub.add_parser("verify", parents=[common], help="compare the predictor against a dense scan")
    v.add_argument("--seed", type=int, help="also run a seeded suite of 20 random systems")
    v.add_argument("--grid", type=float, default=1e-6, help="scan grid step (s)")
    v.add_argument("--events", type=int, default=5, help="events per system")
    sub.add_parser("scalar", parents=[common], help="closed-form checks for first-order systems")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    _setup_logging(args.quiet)
    echo = _Printer(args.quiet)
    try:
        cfg = parse_config(args.config)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out or cfg.out_dir, echo)
        if args.command == "predict":
            return cmd_predict(cfg, args.t0, args.state, echo)
        if args.command == "verify":
            return cmd_verify(cfg, args.seed, args.grid, args.events, echo)
        return cmd_scalar(cfg, echo)
    except SelfTrigError as exc:
        print(f"selftrig: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
