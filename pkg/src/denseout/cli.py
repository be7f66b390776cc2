"""Command-line interface: run, sweep, verify, list-scenarios.

Exit codes: 0 on success, 1 when a requested check fails (verification
failures, degenerate slope fits), 2 on usage errors.  The default master
seed can be set through the DENSEOUT_SEED environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .benchmark import SweepConfig, run_config, sweep_and_fit, write_csv
from .scenarios import SCENARIO_LIBRARY, list_scenarios, load_scenario_file
from .verify import run_suite

SEED_ENV = "DENSEOUT_SEED"


def _default_seed() -> int:
    try:
        return int(os.environ.get(SEED_ENV, "0"))
    except ValueError:
        return 0


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc


def _parse_constants(pairs: list[str]) -> dict[str, float]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {pair!r}")
        name, value = pair.split("=", 1)
        out[name.strip()] = float(value)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="denseout",
        description="Estimate time-accumulated observables of quantum dynamics "
                    "and benchmark the oracle-query cost of doing so.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True,
                       help="library scenario name (see list-scenarios)")
        p.add_argument("--pipeline", required=True,
                       choices=["hadamard", "ae_biased", "ae_unbiased", "lode", "carleman"])
        p.add_argument("--T", type=_float_list, required=True,
                       help="comma-separated horizon values")
        p.add_argument("--eps", type=_float_list, required=True,
                       help="comma-separated accuracy targets in (0,1)")
        p.add_argument("--delta", type=float, default=0.05,
                       help="failure probability target (default 0.05)")
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--seed", type=int, default=_default_seed(),
                       help=f"master seed (default ${SEED_ENV} or 0)")
        p.add_argument("--constant", action="append", default=[], metavar="NAME=VALUE",
                       help="override a tuning constant (c, C, C_h); repeatable")
        p.add_argument("--omega", type=float, default=None,
                       help="modulation frequency for scenarios that take one")
        p.add_argument("--no-shared-rule", action="store_true",
                       help="rebuild the quadrature rule at each eps instead of "
                            "sharing the finest rule across the eps axis")
        p.add_argument("--timing", action="store_true",
                       help="record wall-clock times (breaks byte-for-byte "
                            "reproducibility of the CSV)")

    p_run = sub.add_parser("run", help="execute trials and write a CSV of results")
    common(p_run)
    p_run.add_argument("--out", default="results.csv", help="output CSV path")

    p_sweep = sub.add_parser(
        "sweep", help="run a (T, eps) sweep, fit log-log slopes, render figures"
    )
    common(p_sweep)
    p_sweep.add_argument("--out-prefix", default="sweep",
                         help="prefix for the CSV / fit JSON / PNG outputs")
    p_sweep.add_argument("--no-figures", action="store_true")
    p_sweep.add_argument("--expect-T", type=_float_list, default=None,
                         help="slope window for the T axis as 'center,halfwidth'")
    p_sweep.add_argument("--expect-eps", type=_float_list, default=None,
                         help="slope window for the eps axis as 'center,halfwidth'")

    p_verify = sub.add_parser("verify", help="run invariant suites")
    p_verify.add_argument("suite", nargs="?", default="all",
                          choices=["quadrature", "estimators", "history",
                                   "carleman", "library", "all"])
    p_verify.add_argument("--json-out", default=None,
                          help="also write the machine-readable summary here")

    p_list = sub.add_parser("list-scenarios", help="print the scenario library")
    p_list.add_argument("--file", default=None,
                        help="also load and list scenarios from a JSON document")
    return parser


def _make_config(args) -> SweepConfig:
    params = {}
    if args.omega is not None:
        params["omega"] = args.omega
    return SweepConfig(
        scenario=args.scenario,
        pipeline=args.pipeline,
        T_values=args.T,
        eps_values=args.eps,
        delta=args.delta,
        trials=args.trials,
        seed=args.seed,
        constants=_parse_constants(args.constant),
        scenario_params=params,
        share_rule=not args.no_shared_rule,
        timing=args.timing,
    )


def _cmd_run(args) -> int:
    config = _make_config(args)
    rows = run_config(config)
    write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    config = _make_config(args)
    rows = run_config(config)
    csv_path = f"{args.out_prefix}.csv"
    write_csv(rows, csv_path)
    fits = sweep_and_fit(config, rows=rows)
    fit_table = {
        axis: {
            "x_name": f.x_name, "y_name": f.y_name, "slope": f.slope,
            "intercept": f.intercept, "r_squared": f.r_squared,
            "points": f.points,
        }
        for axis, f in fits.items()
    }
    json_path = f"{args.out_prefix}_fits.json"
    with open(json_path, "w") as fh:
        json.dump(fit_table, fh, indent=2)
    written = [csv_path, json_path]
    if not args.no_figures:
        from .figures import render_fits
        written += render_fits(
            fits, args.out_prefix,
            title=f"{config.pipeline} on {config.scenario}",
        )
    ok = True
    for axis, fit in fits.items():
        flag = ""
        if fit.r_squared < 0.9:
            flag = "  [DEGENERATE: r^2 < 0.9]"
            ok = False
        print(f"{axis:>4}-axis: slope {fit.slope:+.3f}  "
              f"r^2 {fit.r_squared:.4f}{flag}")
    for axis, window in (("T", args.expect_T), ("eps", args.expect_eps)):
        if window is None or axis not in fits:
            continue
        center, half = window
        got = fits[axis].slope
        inside = abs(got - center) <= half
        ok &= inside
        print(f"{axis:>4}-axis window {center:+.2f} +/- {half:.2f}: "
              f"{'ok' if inside else 'FAIL'} (got {got:+.3f})")
    print("wrote " + ", ".join(written))
    return 0 if ok else 1


def _cmd_verify(args) -> int:
    results = run_suite(args.suite)
    summary = {
        "suite": args.suite,
        "passed": all(r.passed for r in results),
        "checks": [r.to_dict() for r in results],
    }
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(summary, fh, indent=2)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"[{mark}] {r.suite}/{r.name}: {r.detail}")
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 0 if n_fail == 0 else 1


def _cmd_list(args) -> int:
    for name, description in list_scenarios():
        info = SCENARIO_LIBRARY[name]
        tag = "time-independent" if info.time_independent else "time-dependent"
        print(f"{name:16} [{tag}] {description}")
    if args.file:
        for sc in load_scenario_file(args.file):
            print(f"{sc.label:16} [json] dim={sc.dim} T={sc.horizon_T}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "list-scenarios":
            return _cmd_list(args)
    except (KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
