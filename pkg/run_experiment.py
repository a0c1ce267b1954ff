"""
Command-line entry point for primal-dual flow experiments.

    python run_experiment.py run --config experiments/exp1_ihdtr.json
    python run_experiment.py compare --config exp2_compare --no-svg
    python run_experiment.py check --p 0 --r 1.5 --alpha 3.1 --gamma 1
    python run_experiment.py rates out/exp1_ihdtr/trajectory.csv --window 10 50
    python run_experiment.py tikhonov --problem kkt_example
    python run_experiment.py --list-experiments
"""
import sys
import os
import argparse

# Add backend to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'backend'))

from app.core.logging import setup_logger
from app.dynamics.schedule import SystemKind
from app.harness import commands

logger = setup_logger("pd_flow")


def _add_run_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", required=True, help="Config file or shipped experiment name")
    parser.add_argument("--out", default=None, help="Output directory (PD_FLOW_OUT overrides)")
    parser.add_argument("--system", choices=[kind.value for kind in SystemKind], default=None)
    parser.add_argument("--horizon", type=float, default=None, help="End time T")
    parser.add_argument("--rtol", type=float, default=None)
    parser.add_argument("--atol", type=float, default=None)
    parser.add_argument("--svg", dest="svg", action="store_true", default=True)
    parser.add_argument("--no-svg", dest="svg", action="store_false")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Primal-dual implicit Hessian damping experiments")
    parser.add_argument("--list-experiments", action="store_true", help="List shipped experiment configs")
    sub = parser.add_subparsers(dest="command")
    
    _add_run_flags(sub.add_parser("run", help="Simulate one config (or a comparison file)"))
    _add_run_flags(sub.add_parser("compare", help="Simulate and overlay the members of a comparison file"))
    
    check = sub.add_parser("check", help="Certify a power-law schedule xi = c t^p, eps = a / t^r")
    check.add_argument("--p", type=float, default=0.0)
    check.add_argument("--r", type=float, default=None, help="Omit for a schedule without Tikhonov term")
    check.add_argument("--alpha", type=float, default=3.1)
    check.add_argument("--gamma", type=float, default=1.0)
    check.add_argument("--beta", type=float, default=0.0)
    check.add_argument("--c", type=float, default=1.0)
    check.add_argument("--a", type=float, default=1.0)
    check.add_argument("--t0", type=float, default=1.0)
    check.add_argument("--json", action="store_true", help="Print the report as JSON")
    
    rates = sub.add_parser("rates", help="Log-log rate fits over a trajectory CSV")
    rates.add_argument("csv", help="Trajectory CSV")
    rates.add_argument("--window", type=float, nargs=2, metavar=("T_LO", "T_HI"), default=None)
    rates.add_argument("--column", action="append", default=None, help="Column to fit (repeatable)")
    
    tikhonov = sub.add_parser("tikhonov", help="Write the Tikhonov path of a problem")
    tikhonov.add_argument("--problem", default="toy", help="Built-in problem name or run config")
    tikhonov.add_argument("--grid", type=float, nargs="+", default=None, help="eps values")
    tikhonov.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    
    if args.list_experiments:
        for name, description in commands.list_experiments():
            print(f"  {name:<16} {description}")
        return commands.EXIT_OK
    
    if args.command in ("run", "compare"):
        handler = commands.cmd_run if args.command == "run" else commands.cmd_compare
        return handler(args.config, out=args.out, svg=args.svg, system=args.system,
                       horizon=args.horizon, rtol=args.rtol, atol=args.atol)
    if args.command == "check":
        return commands.cmd_check(p=args.p, r=args.r, alpha=args.alpha, gamma=args.gamma,
                                  beta=args.beta, c=args.c, a=args.a, t0=args.t0, as_json=args.json)
    if args.command == "rates":
        return commands.cmd_rates(args.csv, window=args.window, columns=args.column)
    if args.command == "tikhonov":
        return commands.cmd_tikhonov(args.problem, grid=args.grid, out=args.out)
    
    parser.print_usage()
    return commands.EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
