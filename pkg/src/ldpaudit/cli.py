"""Command-line entry points.

`audit run plan.ini` executes a config-driven grid of audits and writes
CSV/JSON results; `audit oracle --epsilon E` prints the analytic
worst-case distinguisher accuracy and the epsilon estimate a finite
audit of K trials can certify at that accuracy.
"""

import argparse
import math
import sys

from .adversaries import worst_case_success_prob
from .harness import empirical_epsilon
from .plan import ConfigError, parse_config, run_plan, write_outputs

__all__ = ["main", "oracle_report"]


def oracle_report(epsilon, trials=10_000):
    """Worst-case accuracy e^eps/(1+e^eps) and the epsilon a K-trial
    audit would report at exactly that accuracy. Finite trials clamp
    error rates below 2/K, capping what is measurable."""
    if trials < 4:
        raise ValueError("trials must be >= 4")
    accuracy = worst_case_success_prob(epsilon)
    per_side = trials // 2
    rate = max(1.0 - accuracy, 1.0 / per_side)
    rate = min(rate, 1.0 - 1.0 / per_side)
    return accuracy, empirical_epsilon(rate, rate)


def _cmd_run(args):
    try:
        plan = parse_config(args.config, master_seed=args.seed, out_dir=args.out)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    seed = plan.audits[0][1].master_seed
    print(f"running {len(plan.audits)} audit(s), master_seed={seed}")
    results = run_plan(plan, threads=args.threads)
    for name, result in results:
        print(
            f"  {name}: eps_empirical = {result.eps_mean:.4f} "
            f"+/- {result.eps_std:.4f} over {result.config.measurements} measurement(s)"
        )
    for path in write_outputs(plan, results, seed):
        print(f"wrote {path}")
    return 0


def _cmd_oracle(args):
    accuracy, implied = oracle_report(args.epsilon, args.trials)
    print(f"epsilon               : {args.epsilon:.6g}")
    print(f"worst-case accuracy   : {accuracy:.6f}")
    print(f"implied eps_empirical : {implied:.6f} (at K={args.trials} trials)")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="audit",
        description="Empirical privacy audits for randomized gradient reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a plan file")
    p_run.add_argument("config", help="INI plan file")
    p_run.add_argument("--seed", type=int, default=None, help="override master seed")
    p_run.add_argument("--out", default=None, help="override output directory")
    p_run.add_argument("--threads", type=int, default=1, help="worker processes for audits")
    p_run.set_defaults(func=_cmd_run)

    p_oracle = sub.add_parser("oracle", help="print analytic worst-case values")
    p_oracle.add_argument("--epsilon", type=float, required=True)
    p_oracle.add_argument("--trials", type=int, default=10_000)
    p_oracle.set_defaults(func=_cmd_oracle)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
