"""``ucnc`` command line."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from ..oracle import OracleError, capacity_feasible, max_scalar_rate_detail, witness_to_yaml
from ..topology import format_fraction, to_fraction
from .presets import PRESETS, get_preset
from .runner import gnuplot_columns, make_policy, rows_to_csv, run, sweep
from .scenario import POLICIES, ScenarioError, dump_scenario, load_scenario


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _scenario(args):
    if bool(args.preset) == bool(args.config):
        raise ScenarioError("give exactly one of --preset or --config")
    sc = get_preset(args.preset) if args.preset else load_scenario(Path(args.config))
    changes = {}
    if getattr(args, "horizon", None) is not None:
        changes["horizon"] = args.horizon
    if getattr(args, "policy", None):
        changes["policy"] = args.policy
    return sc.with_(**changes) if changes else sc


def _emit(text: str, output) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    sc = _scenario(args)
    result = run(sc, args.rate, args.seed)
    _emit(rows_to_csv(result.rows()), args.output)
    return 0


def cmd_sweep(args) -> int:
    sc = _scenario(args)
    policies = args.policies.split(",") if args.policies else None
    rows = sweep(sc, _floats(args.lambdas) if args.lambdas else None,
                 _ints(args.seeds) if args.seeds is not None else None,
                 policies, jobs=args.jobs)
    _emit(rows_to_csv(rows), args.output)
    return 0


def cmd_capacity(args) -> int:
    sc = _scenario(args)
    comms = make_policy(args.policy or "ucnc-ento", sc.net, sc.commodities).commodities
    if args.rates:
        rates = [to_fraction(x) for x in args.rates.split(",")]
        if len(rates) == 1:
            rates = rates * len(comms)
        res = capacity_feasible(sc.net, comms, rates, method=args.method)
        print("feasible" if res.feasible else "infeasible")
        if res.feasible and args.witness:
            Path(args.witness).write_text(witness_to_yaml(res.witness))
        return 0 if res.feasible else 1
    direction = [to_fraction(x) for x in args.direction.split(",")] if args.direction else None
    if direction is not None and len(direction) == 1:
        direction = direction * len(comms)
    res = max_scalar_rate_detail(sc.net, comms, direction, method=args.method)
    if res.unbounded:
        print("theta* = inf")
        return 0
    print(f"theta* = {format_fraction(res.theta)} ({float(res.theta):.10g})")
    if args.witness:
        Path(args.witness).write_text(witness_to_yaml(res.assignment))
    return 0


def cmd_presets(args) -> int:
    if args.dump:
        sys.stdout.write(dump_scenario(get_preset(args.dump)))
        return 0
    for name in PRESETS:
        print(f"{name:16s} {get_preset(name).description}")
    return 0


def cmd_gnuplot(args) -> int:
    with open(args.csv, newline="") as fh:
        rows = []
        for r in csv.DictReader(fh):
            row = dict(r)
            row["lambda_multiplier"] = float(row["lambda_multiplier"])
            val = row.get(args.metric, "")
            row[args.metric] = float(val) if val not in ("", None) else None
            rows.append(row)
    _emit(gnuplot_columns(rows, args.metric), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ucnc", description="Mixed-cast service chain network control simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def source(sp, with_run=True):
        sp.add_argument("--preset", help=f"built-in scenario ({', '.join(PRESETS)}; mixed-18:<seed> for other draws)")
        sp.add_argument("--config", help="YAML scenario file")
        sp.add_argument("--policy", choices=POLICIES)
        if with_run:
            sp.add_argument("--horizon", "-T", type=int, help="slots to simulate")
        sp.add_argument("--output", "-o", help="write here instead of stdout")

    sp = sub.add_parser("run", help="simulate one rate point and seed")
    source(sp)
    sp.add_argument("--rate", "--lambda", dest="rate", type=float, help="rate multiplier")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="simulate a grid of rate multipliers and seeds")
    source(sp)
    sp.add_argument("--lambdas", help="comma-separated ascending multipliers")
    sp.add_argument("--seeds", help="comma-separated seeds")
    sp.add_argument("--policies", help="comma-separated policies (default: the scenario's)")
    sp.add_argument("--jobs", "-j", type=int, default=1, help="parallel worker processes")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("capacity", help="exact capacity-region queries")
    source(sp, with_run=False)
    sp.add_argument("--direction", help="comma-separated direction (default: commodity base rates)")
    sp.add_argument("--rates", help="comma-separated rate vector to test for feasibility")
    sp.add_argument("--method", choices=("colgen", "enumerate"), default="colgen")
    sp.add_argument("--witness", help="write the optimal route split as YAML")
    sp.set_defaults(func=cmd_capacity)

    sp = sub.add_parser("presets", help="list built-in scenarios")
    sp.add_argument("--dump", metavar="NAME", help="print a preset as a YAML scenario")
    sp.set_defaults(func=cmd_presets)

    sp = sub.add_parser("gnuplot", help="turn sweep CSV into gnuplot columns")
    sp.add_argument("csv")
    sp.add_argument("--metric", default="mean_delay")
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_gnuplot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, OracleError) as exc:
        print(f"ucnc: error: {exc}", file=sys.stderr)
        return 2
