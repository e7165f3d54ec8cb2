"""Command line front end.

Subcommands:

* ``calibrate``: turn per-coordinate demands into budgets.
* ``audit``: exact levels of a kernel/prior pair from files, with an
  optional claimed-level check.
* ``mean-sim``: run the mean estimation experiment from a TOML config.
* ``ols-sim``: run the private regression experiment from a TOML config.

Exit codes: 0 on success, 1 on a configuration error (bad flags, bad
values, malformed config or data files), 2 on a runtime failure such
as an unreadable or unwritable path, 3 when an audit check finds a
violation.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .audit import audit_pair, ht_tradeoff_check, read_kernel, read_prior
from .calibration import PrivacyDemand, calibrate_budgets, cdp_to_bcdp_bound
from .harness import (MeanExperimentConfig, OlsExperimentConfig, load_config,
                      run_mean_experiment, run_ols_experiment, write_experiment,
                      zeta_value)

__all__ = ["cli_entry", "main"]


def _float_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError(f"expected comma separated numbers, got {text!r}") \
            from None


def _zeta_policy(text: str):
    return text if text == "heuristic" else float(text)


def _fmt(value) -> str:
    return repr(float(value))


def _cmd_calibrate(args) -> int:
    delta = np.array(_float_list(args.delta))
    demand = PrivacyDemand(epsilon=args.epsilon, delta=delta, q=args.q,
                           zeta=zeta_value(args.q, args.zeta))
    budget = calibrate_budgets(demand)
    caller = budget.caller_order()
    # the layered release is c_i-DP per coordinate and spends total
    # c_d as its overall local level, so certify through that
    certified_sorted = cdp_to_bcdp_bound(budget.c, args.q,
                                         epsilon=budget.total)
    certified = np.empty_like(certified_sorted)
    certified[budget.perm] = certified_sorted
    if args.json:
        json.dump({
            "c": [float(v) for v in caller],
            "total": float(budget.total),
            "certified": [float(v) for v in certified],
        }, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return 0
    for i, (c, bound) in enumerate(zip(caller, certified)):
        print(f"coordinate {i}: budget {_fmt(c)} certified {_fmt(bound)}")
    print(f"total spend: {_fmt(budget.total)}")
    return 0


def _cmd_audit(args) -> int:
    mech = read_kernel(args.kernel)
    prior = read_prior(args.prior)
    report = audit_pair(mech, prior)
    print(f"ldp: {_fmt(report.ldp)}")
    print("cdp: " + " ".join(_fmt(v) for v in report.cdp))
    print(f"bdp: {_fmt(report.bdp)}")
    print("bcdp: " + " ".join(_fmt(v) for v in report.bcdp))
    print("tv: " + " ".join(_fmt(v) for v in report.tv))
    if args.check is not None:
        claimed = np.array(_float_list(args.check))
        ok, witness = ht_tradeoff_check(mech, prior, claimed)
        if not ok:
            print("check: fail "
                  f"coordinate={witness['coordinate']} "
                  f"null={witness['null_value']} "
                  f"alt={witness['alt_value']} "
                  f"output={witness['output']} "
                  f"log_ratio={_fmt(witness['log_ratio'])}")
            return 3
        print("check: pass")
    return 0


def _cmd_mean_sim(args) -> int:
    mapping = load_config(args.config)
    if args.trials is not None:
        mapping["trials"] = args.trials
    if args.n is not None:
        mapping["n"] = args.n
    if args.iid_data:
        mapping["iid_data"] = True
    config = MeanExperimentConfig.from_mapping(mapping)
    raw_rows, summary_rows = run_mean_experiment(config, args.seed)
    paths = write_experiment(args.out, "mean", config, args.seed,
                             raw_rows, summary_rows)
    for name in ("raw", "summary", "manifest"):
        print(f"wrote {paths[name]}")
    return 0


def _cmd_ols_sim(args) -> int:
    mapping = load_config(args.config)
    if args.trials is not None:
        mapping["trials"] = args.trials
    config = OlsExperimentConfig.from_mapping(mapping)
    raw_rows, summary_rows = run_ols_experiment(config, args.seed)
    paths = write_experiment(args.out, "ols", config, args.seed,
                             raw_rows, summary_rows)
    for name in ("raw", "summary", "manifest"):
        print(f"wrote {paths[name]}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bcdp",
        description="per-coordinate privacy budgets: calibration, "
                    "auditing and simulations")
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate",
                         help="turn per-coordinate demands into budgets")
    cal.add_argument("--epsilon", type=float, required=True,
                     help="known local level of the release mechanism")
    cal.add_argument("--delta", type=str, required=True,
                     help="comma separated per-coordinate demands")
    cal.add_argument("--q", type=float, required=True,
                     help="conditional total variation of the prior")
    cal.add_argument("--zeta", type=_zeta_policy, default="heuristic",
                     help="spend fraction in (0, 1], or 'heuristic'")
    cal.add_argument("--json", action="store_true",
                     help="machine readable output")
    cal.set_defaults(handler=_cmd_calibrate)

    aud = sub.add_parser("audit",
                         help="exact levels of a kernel/prior pair")
    aud.add_argument("--kernel", type=str, required=True,
                     help="kernel file path")
    aud.add_argument("--prior", type=str, required=True,
                     help="prior file path")
    aud.add_argument("--check", type=str, default=None,
                     help="claimed per-coordinate levels to certify")
    aud.set_defaults(handler=_cmd_audit)

    mean = sub.add_parser("mean-sim", help="mean estimation experiment")
    mean.add_argument("--config", type=str, required=True,
                      help="TOML experiment configuration")
    mean.add_argument("--seed", type=int, required=True,
                      help="base seed of the keyed substreams")
    mean.add_argument("--out", type=str, required=True,
                      help="output path prefix")
    mean.add_argument("--trials", type=int, default=None,
                      help="override the configured trial count")
    mean.add_argument("--n", type=int, default=None,
                      help="override the configured users per trial")
    mean.add_argument("--iid-data", action="store_true", dest="iid_data",
                      help="draw users independently of the coupling grid")
    mean.set_defaults(handler=_cmd_mean_sim)

    ols = sub.add_parser("ols-sim", help="private regression experiment")
    ols.add_argument("--config", type=str, required=True,
                     help="TOML experiment configuration")
    ols.add_argument("--seed", type=int, required=True,
                     help="base seed of the keyed substreams")
    ols.add_argument("--out", type=str, required=True,
                     help="output path prefix")
    ols.add_argument("--trials", type=int, default=None,
                     help="override the configured trial count")
    ols.set_defaults(handler=_cmd_ols_sim)

    return parser


def cli_entry(argv=None) -> int:
    """Run one command line invocation and return its exit code.

    0 on success, 1 on a configuration error, 2 on a runtime failure,
    3 when an audit check finds a violation.
    """
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.handler(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_entry(sys.argv[1:]))
