"""Command-line entry point.

Exit codes: 0 on success, 1 on a configuration error, 2 when the best
placement found is infeasible.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .costmodel import FlowPlan, evaluate_fog_path, total_cloud_cost
from .harness import (CONSUMER_SWEEP, FNE_LEVELS, PILOT_ARRIVALS, PILOT_CONSUMERS, PILOT_FOGS,
                      ExperimentSpec, ResultTable, emit, run_cost_sweep, run_energy_compare,
                      run_fne_sweep, run_latency_compare, run_pic_estimate, run_toy_vanet,
                      toy_table)
from .mde import MdeConfig, ModifiedDE
from .montecarlo import McConfig
from .params import ConfigError, ScenarioParams, pilot_params
from .problem import pilot_problem
from .topology import generate_topology

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2

SWEEPS = {
    "latency": ("latency_compare", "n_consumers", CONSUMER_SWEEP, run_latency_compare),
    "fne": ("fne_sweep", "fne", FNE_LEVELS, run_fne_sweep),
    "energy": ("energy_compare", "n_consumers", CONSUMER_SWEEP, run_energy_compare),
    "cost": ("cost_sweep", "n_consumers", PILOT_CONSUMERS, run_cost_sweep),
}
COST_DEFAULTS = {"n_consumers": PILOT_CONSUMERS, "arrival_rate": PILOT_ARRIVALS,
                 "n_fogs": PILOT_FOGS}


def _params(args, pilot=False):
    if args.config:
        return ScenarioParams.load(args.config)
    return pilot_params() if pilot else ScenarioParams()


def _write(text, args):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _mde(args):
    return MdeConfig(pop_size=args.pop, max_generations=args.generations,
                     stall_generations=args.stall, seed=args.seed)


def cmd_gen_topology(args):
    topo = generate_topology(_params(args), args.seed)
    _write(topo.to_json() + "\n", args)
    return EXIT_OK


def cmd_evaluate(args):
    """Nearest-FCN plan of the configured scenario on both paths."""
    params = _params(args)
    topo = generate_topology(params, args.seed)
    plan = FlowPlan.from_topology(topo, params)
    cols = ("config_hash", "seed", "paradigm", "comm", "comp", "cons", "ems", "total",
            "service_latency", "power_w")
    rows = []
    for name, b in (("fog", evaluate_fog_path(plan, topo, params)),
                    ("cloud", total_cloud_cost(plan, topo, params))):
        rows.append((params.config_hash(), args.seed, name, b.comm, b.comp, b.cons, b.ems,
                     b.total, b.latency_terms.service, b.power_terms.total))
    table = ResultTable(cols, rows, {"config_hash": params.config_hash(), "seed": args.seed,
                                     "version": __version__, "kind": "evaluate",
                                     "x": "total", "series": ["total"]})
    _write(emit(table, args.format), args)
    return EXIT_OK


def cmd_optimize(args):
    params = _params(args, pilot=True)
    problem = pilot_problem(params, args.seed)
    opt = ModifiedDE.from_config(_mde(args)).fit(problem, seeds=[np.zeros(problem.n_genes)])
    best = opt.best_feasible_ or opt.best_
    cols = ("generation", "best_raw", "mean_raw", "best_shared", "feasible_count")
    table = ResultTable(cols, [tuple(r[c] for c in cols) for r in opt.history_],
                        {"config_hash": params.config_hash(), "seed": args.seed,
                         "version": __version__, "kind": "optimize",
                         "best_cost": best.raw_fitness - best.penalty,
                         "penalty": best.penalty, "x": "generation",
                         "series": ["best_raw", "mean_raw"]})
    _write(emit(table, args.format), args)
    if best.penalty > 0:
        logging.error("no feasible placement found (penalty %.6g)", best.penalty)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(args):
    kind, variable, values, runner = SWEEPS[args.kind]
    if args.kind == "cost":
        variable = args.variable or variable
        if variable not in COST_DEFAULTS:
            raise ConfigError(f"cost sweep variable must be one of {sorted(COST_DEFAULTS)}")
        values = COST_DEFAULTS[variable]
    if args.values:
        values = tuple(args.values)
    spec = ExperimentSpec(kind, variable, values, args.replications, args.seed,
                          args.fne if args.fne is not None else (0.25 if args.kind == "latency"
                                                                 else 0.5),
                          _mde(args))
    table = runner(spec, _params(args, pilot=args.kind == "cost"))
    _write(emit(table, args.format), args)
    if "feasible" in table.columns and not all(table.column("feasible")):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_toy_vanet(args):
    result = run_toy_vanet(optimize=not args.no_optimize, seed=args.seed)
    table = toy_table(result, args.seed)
    _write(emit(table, args.format), args)
    print(f"improvement {result['improvement_pct']}%", file=sys.stderr)
    return EXIT_OK


def cmd_estimate_pic(args):
    spec = ExperimentSpec("pic_estimate", seed=args.seed)
    mc = McConfig(max_trials=args.max_trials, target_rel_error=args.target, seed=args.seed)
    table = run_pic_estimate(spec, _params(args), mc)
    _write(emit(table, args.format), args)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="fogplan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario parameters (JSON)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")
    budget = argparse.ArgumentParser(add_help=False)
    budget.add_argument("--pop", type=int, default=60)
    budget.add_argument("--generations", type=int, default=200)
    budget.add_argument("--stall", type=int, default=50)

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-topology", parents=[common]).set_defaults(func=cmd_gen_topology)
    sub.add_parser("evaluate", parents=[common]).set_defaults(func=cmd_evaluate)
    sub.add_parser("optimize", parents=[common, budget]).set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", parents=[common, budget])
    p.add_argument("--kind", choices=sorted(SWEEPS), required=True)
    p.add_argument("--variable", help="cost sweep variable: n_consumers, arrival_rate, n_fogs")
    p.add_argument("--values", type=float, nargs="+")
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--fne", type=float)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("toy-vanet", parents=[common])
    p.add_argument("--no-optimize", action="store_true")
    p.set_defaults(func=cmd_toy_vanet)

    p = sub.add_parser("estimate-pic", parents=[common])
    p.add_argument("--max-trials", type=int, default=1000)
    p.add_argument("--target", type=float, default=0.01)
    p.set_defaults(func=cmd_estimate_pic)
    return parser


def _normalise_values(args):
    """Counts given on the command line arrive as floats; make them ints again."""
    if not getattr(args, "values", None):
        return
    counted = args.kind in ("latency", "energy") or (
        args.kind == "cost" and (args.variable or "n_consumers") != "arrival_rate")
    if counted:
        args.values = [int(v) for v in args.values]


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _normalise_values(args)
        return args.func(args)
    except (ConfigError, ValueError, json.JSONDecodeError, FileNotFoundError) as exc:
        logging.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
