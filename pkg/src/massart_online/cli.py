"""Command line interface.

Subcommands: simulate-halfspace, simulate-bandit, verify, baseline.
Exit codes: 0 ok, 2 config error, 3 oracle failure, 4 environment violation.
"""

import argparse
import json
import sys
from pathlib import Path

from .core import (
    ConfigError,
    bandit_config_from,
    halfspace_config_from,
    load_config_file,
)
from .harness import (
    EnvironmentViolation,
    report_json,
    run_bandit_experiment,
    run_halfspace_experiment,
    run_many,
    verify_oracles,
    write_report,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ORACLE = 3
EXIT_ENVIRONMENT = 4


def _add_config_flags(parser):
    parser.add_argument("--config", help="flat JSON key/value config file")
    parser.add_argument("--d", type=int)
    parser.add_argument("--t-horizon", type=int, dest="t_horizon")
    parser.add_argument("--eta", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--zeta", type=float)
    parser.add_argument("--k", type=int)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--reward-cap", type=float, dest="reward_cap")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--adversary", choices=["iid", "boundary", "adaptive"])
    parser.add_argument(
        "--environment", choices=["massart2", "sorted_k", "monotone_k", "reduction2"]
    )
    parser.add_argument("--domain-radius", type=float, dest="domain_radius")
    parser.add_argument("--seeds", type=int, default=1, help="fan out over this many seeds")
    parser.add_argument("--out", help="directory for run_<seed>.csv and report.json")


def _merged_mapping(args):
    mapping = {}
    if args.config:
        mapping.update(load_config_file(args.config))
    for key in (
        "d",
        "t_horizon",
        "eta",
        "gamma",
        "zeta",
        "k",
        "delta",
        "reward_cap",
        "seed",
        "adversary",
        "environment",
        "domain_radius",
    ):
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    return mapping


def _out_dir(args):
    if not args.out:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_experiment(args, runner, config):
    out = _out_dir(args)
    if args.seeds > 1:
        seeds = [config.seed + i for i in range(args.seeds)]
        report = run_many(runner, config, seeds, out_dir=out)
    elif out is not None:
        report = runner(config, csv_path=str(out / f"run_{config.seed}.csv"))
    else:
        report = runner(config)
    if out is not None:
        write_report(report, out / "report.json")
    print(report_json(report))
    return EXIT_OK


def _cmd_simulate_halfspace(args):
    mapping = _merged_mapping(args)
    env = mapping.get("environment", "massart2")
    if env != "massart2":
        raise ConfigError("simulate-halfspace runs the massart2 environment only")
    return _run_experiment(args, run_halfspace_experiment, halfspace_config_from(mapping))


def _cmd_simulate_bandit(args):
    mapping = _merged_mapping(args)
    if mapping.get("environment") == "massart2":
        raise ConfigError("simulate-bandit needs a bandit environment, not massart2")
    return _run_experiment(args, run_bandit_experiment, bandit_config_from(mapping))


def _cmd_verify(args):
    results, ok = verify_oracles(seed=args.seed if args.seed is not None else 0, quick=args.quick)
    for result in results:
        print(f"[{'PASS' if result.passed else 'FAIL'}] {result.name}: {result.detail}")
    print(f"{sum(r.passed for r in results)}/{len(results)} oracle checks passed")
    return EXIT_OK if ok else EXIT_ORACLE


def _cmd_baseline(args):
    mapping = _merged_mapping(args)
    env = mapping.get("environment", "massart2")
    if env == "massart2":
        report = run_halfspace_experiment(halfspace_config_from(mapping))
    else:
        report = run_bandit_experiment(bandit_config_from(mapping))
    summary = {
        "kind": report["kind"],
        "baselines": report["baselines"],
        "learner": report.get("total_mistakes", report.get("total_reward")),
        "bound_check": report["bound_check"],
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="massart-online",
        description="Online halfspace learning under bounded label noise, "
        "and k-arm contextual bandits with monotone rewards.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_half = sub.add_parser("simulate-halfspace", help="run the noisy-halfspace learner")
    _add_config_flags(p_half)
    p_half.set_defaults(func=_cmd_simulate_halfspace)

    p_bandit = sub.add_parser("simulate-bandit", help="run the k-arm learner")
    _add_config_flags(p_bandit)
    p_bandit.set_defaults(func=_cmd_simulate_bandit)

    p_verify = sub.add_parser("verify", help="run the oracle check suite")
    p_verify.add_argument("--seed", type=int)
    p_verify.add_argument("--quick", action="store_true", help="10x smaller sample counts")
    p_verify.set_defaults(func=_cmd_verify)

    p_base = sub.add_parser("baseline", help="report baseline metrics for a config")
    _add_config_flags(p_base)
    p_base.set_defaults(func=_cmd_baseline)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EnvironmentViolation as exc:
        print(f"environment violation: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT


if __name__ == "__main__":
    sys.exit(main())
