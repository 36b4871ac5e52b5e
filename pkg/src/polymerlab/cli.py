"""Command-line front-end: configuration, suites, persistence, reporting.

Subcommands
-----------
``env-check``
    Covariance self-test of the configured environment backend; CSV of
    (position_a, position_b, target_cov, empirical_cov, z) rows.
``verify <suite>``
    One of lemma21, lemma22, girsanov, meancontrol, ball, concentration,
    increment, or all.  Each suite writes a CSV of bound-check rows plus a
    shared summary JSON.
``xi-scan`` / ``fluct-fit``
    Containment-mass tables and the spread-slope fit.

Exit codes: 0 all checks passed, 1 a bound check failed, 2 usage or
configuration error.  Data outputs are byte-identical for identical
(config, seed) at any thread count; the manifest additionally records
wall-clock timings, so it is the one file excluded from that guarantee.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .environment import EnvironmentHandle, covariance_selftest
from .exponent import fluctuation_fit, xi_scan
from .gibbs import ESTIMATE_CSV_HEADER, GibbsParams, estimate_csv_row
from .verify import (BoundCheckReport, ball_bound_test, check_expo_ineq, check_log_moment_bounds,
                     concentration_scan, girsanov_identity_test, make_report, martingale_increment_probe,
                     mean_control_test, random_expo_cases, suggested_halfwidth)

VERIFY_SUITES = ("lemma21", "lemma22", "girsanov", "meancontrol", "ball", "concentration", "increment")
REPORT_CSV_HEADER = ("name", "estimate", "stderr", "lower_bound", "upper_bound", "margin_sigmas", "pass")

BALL_ALPHA = 0.75           # makes n^(2*alpha-1) dyadic on the default n values
BALL_N_VALUES = (9, 16)
INCREMENT_N = 4


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_json_safe(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _report_rows(reports: list[BoundCheckReport]):
    for rep in reports:
        yield (rep.name, rep.estimate, rep.stderr, rep.lower_bound, rep.upper_bound,
               rep.margin_sigmas, rep.passed)


def _summarize(reports: list[BoundCheckReport]) -> dict:
    margins = [r.margin_sigmas for r in reports if math.isfinite(r.margin_sigmas)]
    notes = [f"{r.name}: {r.notes}" for r in reports if r.notes]
    return {
        "checks": len(reports),
        "passed": sum(r.passed for r in reports),
        "failed": sum(not r.passed for r in reports),
        "worst_margin_sigmas": min(margins) if margins else None,
        "notes": notes,
    }


# -- suites -------------------------------------------------------------------


def _suite_lemma21(cfg: RunConfig) -> list[BoundCheckReport]:
    reports = []
    for idx, case in enumerate(random_expo_cases(cfg.seed, count=10)):
        quad = check_expo_ineq(case, method="quadrature")
        mc = check_expo_ineq(case, method="mc", n_draws=200_000, seed=cfg.seed + idx)
        agree = make_report(f"expo_ineq_mc_vs_quadrature(case={idx})", mc.estimate, mc.stderr,
                            lower=quad.estimate, upper=quad.estimate)
        reports += [quad, mc, agree]
    return reports


def _suite_lemma22(cfg: RunConfig) -> list[BoundCheckReport]:
    reports = []
    for idx, case in enumerate(random_expo_cases(cfg.seed, count=10)):
        quad = check_log_moment_bounds(case.mu_atoms, case.mu_weights, case.beta, case.kernel,
                                       method="quadrature")
        mc = check_log_moment_bounds(case.mu_atoms, case.mu_weights, case.beta, case.kernel,
                                     method="mc", n_draws=100_000, seed=cfg.seed + idx)
        agree = make_report(f"log_moment_mc_vs_quadrature(case={idx})", mc.estimate, mc.stderr,
                            lower=quad.estimate, upper=quad.estimate)
        reports += [quad, mc, agree]
    return reports


def _suite_girsanov(cfg: RunConfig) -> list[BoundCheckReport]:
    n = max(cfg.n_grid)
    params = GibbsParams(beta=cfg.beta, n=n, M=cfg.M, R=cfg.R)
    spacing = cfg.h if cfg.h is not None else 0.1 / cfg.kernel.lam
    reports = []
    for lam in (spacing, 2.0 * spacing):    # lattice multiples keep the identity exact
        reports.append(girsanov_identity_test(params, lam, cfg.env_seeds(),
                                              kernel=cfg.kernel, h=cfg.h, L=cfg.L,
                                              threads=cfg.threads))
    return reports


def _suite_meancontrol(cfg: RunConfig) -> list[BoundCheckReport]:
    reports = []
    for alpha in cfg.alphas:
        params = GibbsParams(beta=cfg.beta, n=max(cfg.n_grid), M=cfg.M, R=cfg.R)
        reports += mean_control_test(alpha, cfg.n_grid, params, cfg.env_seeds(),
                                     kernel=cfg.kernel, h=cfg.h, L=cfg.L, threads=cfg.threads)
    return reports


def _suite_ball(cfg: RunConfig) -> list[BoundCheckReport]:
    # The exact backend (d > 1) pays a per-slice Cholesky on 2M points, so
    # replica and path counts are capped there.
    if cfg.d == 1:
        j_list, R_eff, M_eff = [(2,), (4,)], cfg.R, cfg.M
    else:
        j_list, R_eff, M_eff = [(2,) * cfg.d], min(cfg.R, 50), min(cfg.M, 300)
    reports = []
    for n in BALL_N_VALUES:
        params = GibbsParams(beta=cfg.beta, n=n, M=M_eff, R=R_eff)
        for j in j_list:
            reports.append(ball_bound_test(BALL_ALPHA, n, n, j, params, cfg.env_seeds(R_eff),
                                           kernel=cfg.kernel, h=cfg.h, L=cfg.L,
                                           threads=cfg.threads))
    return reports


def _suite_concentration(cfg: RunConfig) -> list[BoundCheckReport]:
    params = GibbsParams(beta=cfg.beta, n=max(cfg.n_grid), M=cfg.M, R=cfg.R)
    rows = concentration_scan(params, cfg.nu, cfg.n_grid, cfg.env_seeds(),
                              kernel=cfg.kernel, h=cfg.h, L=cfg.L, threads=cfg.threads)
    reports = []
    for prev, cur in zip(rows, rows[1:]):
        reports.append(make_report(
            f"concentration_trend(n={prev.n}->{cur.n},nu={cfg.nu:g})",
            cur.std_over_n_nu - prev.std_over_n_nu, 0.0, upper=0.0))
    for row in rows:
        if row.paper_bound < 1.0 - 4.0 * row.exceedance_stderr:
            reports.append(make_report(
                f"concentration_tail(n={row.n},nu={cfg.nu:g})",
                row.exceedance_freq, row.exceedance_stderr, upper=row.paper_bound))
    return reports


def _suite_increment(cfg: RunConfig) -> list[BoundCheckReport]:
    n = INCREMENT_N
    params = GibbsParams(beta=cfg.beta, n=n, M=min(cfg.M, 2000), R=cfg.R)
    reports = []
    for i in range(1, n + 1):
        result = martingale_increment_probe(n, n, i, params, cfg.seed, kernel=cfg.kernel,
                                            h=cfg.h, L=cfg.L)
        reports.append(result.report)
    return reports


_SUITE_RUNNERS = {
    "lemma21": _suite_lemma21,
    "lemma22": _suite_lemma22,
    "girsanov": _suite_girsanov,
    "meancontrol": _suite_meancontrol,
    "ball": _suite_ball,
    "concentration": _suite_concentration,
    "increment": _suite_increment,
}


# -- commands -----------------------------------------------------------------


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _manifest(cfg: RunConfig, command: str, outputs: list[str], timings: dict, summary: dict) -> dict:
    return {
        "artifact_version": __version__,
        "command": command,
        "config": cfg.raw,
        "outputs": outputs,
        "timings_seconds": timings,
        "summary": summary,
    }


def cmd_env_check(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    spacing = cfg.h if cfg.h is not None else 0.1 / cfg.kernel.lam
    xs = [0.0, 5 * spacing, 10 * spacing] if cfg.backend_kind == "grid" else [0.0, 0.5, 1.0]
    points = [(1, np.full(cfg.d, x)) for x in xs] + [(2, np.zeros(cfg.d))]
    L = cfg.L if cfg.L is not None else float(math.ceil(max(xs) + 1))
    env = EnvironmentHandle(cfg.seed, cfg.kernel, d=cfg.d, backend=cfg.backend_kind,
                            h=cfg.h, L=L if cfg.backend_kind == "grid" else None)
    t0 = time.perf_counter()
    rows = covariance_selftest(env, points, n_seeds=max(1000, cfg.R))
    elapsed = time.perf_counter() - t0

    def tag(position) -> str:
        k, *coords = position
        return f"k={k};x=" + ";".join(repr(float(c)) for c in coords)

    _write_csv(out / "env_check.csv",
               ("position_a", "position_b", "target_cov", "empirical_cov", "z"),
               [(tag(r.position_a), tag(r.position_b), r.target_cov, r.empirical_cov, r.z)
                for r in rows])
    worst = max(abs(r.z) for r in rows)
    summary = {"pairs": len(rows), "worst_abs_z": worst, "passed": worst < 4.0}
    _write_json(out / "manifest.json",
                _manifest(cfg, "env-check", ["env_check.csv"], {"env-check": elapsed}, summary))
    return 0 if worst < 4.0 else 1


def cmd_verify(cfg: RunConfig, suite: str) -> int:
    out = _out_dir(cfg)
    names = list(VERIFY_SUITES) if suite == "all" else [suite]
    outputs = []
    timings = {}
    summary = {}
    all_passed = True
    for name in names:
        t0 = time.perf_counter()
        reports = _SUITE_RUNNERS[name](cfg)
        timings[name] = time.perf_counter() - t0
        filename = f"verify_{name}.csv"
        _write_csv(out / filename, REPORT_CSV_HEADER, _report_rows(reports))
        outputs.append(filename)
        summary[name] = _summarize(reports)
        all_passed = all_passed and all(r.passed for r in reports)
    summary["all_passed"] = all_passed
    _write_json(out / "verify_summary.json", summary)
    outputs.append("verify_summary.json")
    _write_json(out / "manifest.json", _manifest(cfg, f"verify {suite}", outputs, timings, summary))
    return 0 if all_passed else 1


def cmd_xi_scan(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    params = GibbsParams(beta=cfg.beta, n=max(cfg.n_grid), M=cfg.M, R=cfg.R)
    t0 = time.perf_counter()
    rows = []
    for event in ("endpoint", "running_max"):
        rows += xi_scan(cfg.alphas, cfg.n_grid, params, cfg.env_seeds(), event=event,
                        kernel=cfg.kernel, d=cfg.d, backend=cfg.backend_kind,
                        h=cfg.h, L=cfg.L, threads=cfg.threads)
    elapsed = time.perf_counter() - t0
    _write_csv(out / "xi_scan.csv",
               ("n", "alpha", "event", "mass_mean", "mass_stderr", "R", "M", "seed"),
               [(r.n, r.alpha, r.event, r.mass_mean, r.mass_stderr, r.R, r.M, cfg.seed)
                for r in rows])
    summary = {"rows": len(rows)}
    _write_json(out / "manifest.json",
                _manifest(cfg, "xi-scan", ["xi_scan.csv"], {"xi-scan": elapsed}, summary))
    return 0


def cmd_fluct_fit(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    params = GibbsParams(beta=cfg.beta, n=max(cfg.n_grid), M=cfg.M, R=cfg.R)
    t0 = time.perf_counter()
    fit = fluctuation_fit(cfg.n_grid, params, cfg.env_seeds(), kernel=cfg.kernel,
                          backend=cfg.backend_kind, h=cfg.h, L=cfg.L, threads=cfg.threads)
    elapsed = time.perf_counter() - t0
    fit_doc = {
        "xi_hat": fit.xi_hat, "ci_low": fit.ci_low, "ci_high": fit.ci_high,
        "n_grid": list(fit.n_grid), "beta": fit.beta, "lambda": fit.lam, "d": fit.d,
        "reference_band": list(fit.reference_band) if fit.reference_band else None,
        "spreads_median": list(fit.spreads_median), "spreads_mean": list(fit.spreads_mean),
    }
    _write_json(out / "fluct_fit.json", fit_doc)
    spread_rows = [estimate_csv_row("runmax_spread_median", n, cfg.beta, None, med, 0.0,
                                    float("nan"), cfg.M, cfg.R, cfg.seed)
                   for n, med in zip(fit.n_grid, fit.spreads_median)]
    _write_csv(out / "fluct_fit_spreads.csv", ESTIMATE_CSV_HEADER, spread_rows)
    _write_json(out / "manifest.json",
                _manifest(cfg, "fluct-fit", ["fluct_fit.json", "fluct_fit_spreads.csv"],
                          {"fluct-fit": elapsed}, {"xi_hat": fit.xi_hat}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file (defaults embedded)")
    common.add_argument("--seed", type=int, metavar="U64", help="override the config seed")
    common.add_argument("--threads", type=int, metavar="N",
                        help="worker threads (fallback: POLYMERLAB_THREADS)")
    common.add_argument("--out", metavar="DIR", help="override the output directory")

    parser = argparse.ArgumentParser(
        prog="polymerlab",
        description="Simulation and verification laboratory for directed polymers "
                    "in a stationary Gaussian random environment")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("env-check", parents=[common], help="covariance self-test of the environment")
    verify = sub.add_parser("verify", parents=[common], help="run an inequality suite")
    verify.add_argument("suite", choices=VERIFY_SUITES + ("all",))
    sub.add_parser("xi-scan", parents=[common], help="containment-mass tables over (n, alpha)")
    sub.add_parser("fluct-fit", parents=[common], help="spread-slope fit with bootstrap CI")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:        # argparse uses exit code 2 for usage errors
        return int(exc.code or 0)

    threads = args.threads
    if threads is None and os.environ.get("POLYMERLAB_THREADS"):
        try:
            threads = int(os.environ["POLYMERLAB_THREADS"])
        except ValueError:
            print("POLYMERLAB_THREADS must be an integer", file=sys.stderr)
            return 2
    try:
        cfg = load_config(args.config, seed=args.seed, threads=threads, output_dir=args.out)
        if args.command == "env-check":
            return cmd_env_check(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.suite)
        if args.command == "xi-scan":
            return cmd_xi_scan(cfg)
        return cmd_fluct_fit(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"polymerlab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
