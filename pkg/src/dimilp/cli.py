"""Command-line harness: generate instances, run the distributed solver, sweep experiments.

Exit codes: 0 converged, 2 not converged, 1 usage or data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import agent as ag
from . import netsim, oracle, sweeps
from .lp import ContractViolation, to_q
from .problems import (
    AssignmentSpec,
    InfeasibleSpecError,
    InstanceParseError,
    PartitionError,
    gen_random_milp,
    partition,
    read_instance,
    write_instance,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for "not converged"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# graph specs


def parse_graph(text: str, N: int, seed: int = 0) -> netsim.GraphModel:
    """``cyclic`` | ``complete`` | ``erdos:<p>:<diam>`` | ``proximity:<radius>[:<seed>]``.

    ``erdos`` takes ``auto`` for ``p`` to let the generator search for an
    edge probability hitting the diameter; ``proximity`` scatters ``N``
    agents uniformly in the unit square.
    """
    parts = text.split(":")
    kind = parts[0]
    try:
        if kind == "cyclic" and len(parts) == 1:
            return netsim.StaticCyclic(N)
        if kind == "complete" and len(parts) == 1:
            return netsim.Complete(N)
        if kind == "erdos" and len(parts) == 3:
            p = None if parts[1] == "auto" else float(parts[1])
            return netsim.StaticErdosRenyi(N, edge_prob=p, seed=seed, required_diameter=int(parts[2]))
        if kind == "proximity" and len(parts) in (2, 3):
            rng = np.random.default_rng(int(parts[2]) if len(parts) == 3 else seed)
            return netsim.Proximity(rng.uniform(0, 1, (N, 2)), float(parts[1]))
    except ValueError as exc:
        raise UsageError(f"bad graph spec {text!r}: {exc}") from exc
    raise UsageError(f"bad graph spec {text!r}; expected cyclic, complete, erdos:<p>:<diam> or proximity:<r>[:<seed>]")


# ---------------------------------------------------------------------------
# helpers


def _oracle_cost(instance):
    try:
        return oracle.brute_force_milp(instance).cost
    except oracle.EnumerationTooLarge:
        return None


def _finish(trace: netsim.RunTrace, instance, variant, args, extra: dict) -> int:
    final = trace.final_states[0]
    rec = ag.recover_solution(final)
    oracle_cost = _oracle_cost(instance) if getattr(args, "oracle", True) else None
    summary = {
        "status": trace.status.value,
        "consensus_round": netsim.consensus_round(trace),
        "rounds_executed": trace.rounds_executed,
        "final_cost": instance.cost(rec.z),
        "final_point": [str(x) for x in rec.z],
        "cost_bound": rec.cost_bound,
        "oracle_cost": oracle_cost,
        "eps": str(variant.epsilon) if variant.is_eps else None,
        "loss_p": args.loss,
        "seed": args.seed,
        "graph": args.graph,
        "variant": str(variant),
        "multi_cuts": bool(args.multi_cuts),
        "halt_rounds": {str(k): v for k, v in sorted(trace.halt_rounds.items())},
        "flags": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
        **extra,
    }
    if args.trace:
        trace.to_csv(args.trace)
    if args.summary:
        netsim.write_summary(args.summary, summary)
    print(json.dumps({k: summary[k] for k in ("status", "consensus_round", "rounds_executed", "final_cost",
                                                "oracle_cost")}, default=str))
    return EXIT_OK if trace.status is netsim.RunStatus.CONVERGED else EXIT_NOT_CONVERGED


def _halt_threshold(args, model):
    return netsim.halt_threshold_for(model) if args.halt else None


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    if not 0 <= args.dz <= args.d:
        raise UsageError(f"--dz must lie in [0, --d] (got dz={args.dz}, d={args.d})")
    if args.n < 1:
        raise UsageError("--n must be positive")
    inst = gen_random_milp(args.seed, args.d, args.dz, args.n, M=to_q(args.M), integer_cost=args.integer_cost)
    write_instance(inst, args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    instance = read_instance(args.instance)
    variant = ag.parse_variant(args.variant)
    model = parse_graph(args.graph, args.agents, args.seed)
    parts = partition(instance, args.agents)
    trace = netsim.run(instance, parts, model, loss=netsim.LossModel(args.loss, args.seed), variant=variant,
                       max_rounds=args.max_rounds, halt_threshold=_halt_threshold(args, model),
                       multi_cuts=args.multi_cuts, stop_at_fixed_point=not args.halt)
    return _finish(trace, instance, variant, args, {"instance": str(args.instance)})


def cmd_assign(args) -> int:
    spec = AssignmentSpec.from_json(args.spec)
    variant = ag.EPS(args.eps) if args.eps is not None else ag.INT
    setup = sweeps.assignment_setup(spec, args.agents, args.radius, args.data_radius, args.graph)
    trace = netsim.run(setup.instance, setup.parts, setup.model, loss=netsim.LossModel(args.loss, args.seed),
                       variant=variant, max_rounds=args.max_rounds,
                       halt_threshold=_halt_threshold(args, setup.model), multi_cuts=args.multi_cuts,
                       stop_at_fixed_point=not args.halt)
    x = ag.recover_solution(trace.final_states[0]).z[:-1]
    chosen = [l for l, v in enumerate(x) if v == 1]
    return _finish(trace, setup.instance, variant, args,
                   {"spec": str(args.spec), "chosen_paths": chosen, "radius": setup.radius,
                    "data_radius": setup.data_radius})


def cmd_solve_centralized(args) -> int:
    instance = read_instance(args.instance)
    variant = ag.parse_variant(args.variant)
    target = ag.epigraph_transform(instance, variant.epsilon).as_milp() if variant.is_eps else instance
    res = oracle.centralized_gomory(target, max_iters=args.max_iters)
    out = {"status": res.status.value, "iterations": res.iterations, "cuts": res.cuts,
           "variant": str(variant)}
    if res.z is not None:
        z = res.z[1:] if variant.is_eps else res.z
        out["point"] = [str(x) for x in z]
        out["cost"] = str(instance.cost(z))
        if variant.is_eps:
            out["rho_I"] = str(res.z[0])
    if args.brute_force:
        try:
            sol = oracle.brute_force_milp(instance)
            out["oracle_cost"] = str(sol.cost)
            out["oracle_point"] = [str(x) for x in sol.z]
        except oracle.EnumerationTooLarge as exc:
            out["oracle_cost"] = None
            out["oracle_note"] = str(exc)
    print(json.dumps(out, indent=2))
    return EXIT_OK if res.status is oracle.GomoryStatus.CONVERGED else EXIT_NOT_CONVERGED


def cmd_sweep(args) -> int:
    key, family = sweeps.EXPERIMENTS[args.experiment]
    kwargs = {"reps": args.reps}
    if args.sizes:
        if key != "N":
            raise UsageError("--sizes applies to the scaling experiments only")
        kwargs["sizes"] = args.sizes
    if args.values:
        if key == "eps":
            kwargs["eps_values"] = args.values
        elif key == "p":
            kwargs["p_values"] = [float(v) for v in args.values]
        else:
            raise UsageError("--values applies to eps-sweep and loss-sweep only")
    if args.seed is not None:
        kwargs["seed"] = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for row in family(**kwargs):
        rows.append(row)
        if args.verbose:
            print(json.dumps(row, default=str), file=sys.stderr)
    cols = list(rows[0].keys()) if rows else []
    with open(out / "runs.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if v is None else str(v)) for k, v in row.items()})
    table = sweeps.summarize(rows, key)
    if key == "eps":
        for entry, gap in zip(table, sweeps.summarize(rows, key, "gap")):
            entry["gap_median"] = gap.get("median")
    (out / "summary.json").write_text(json.dumps({"experiment": args.experiment, "reps": args.reps,
                                                  "groups": table}, indent=2, default=str) + "\n")
    for entry in table:
        print(json.dumps(entry, default=str))
    ok = all(r["status"] == netsim.RunStatus.CONVERGED.value for r in rows)
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


# ---------------------------------------------------------------------------
# parser


def _run_flags(p: argparse.ArgumentParser, graph_default: str) -> None:
    p.add_argument("--agents", "-N", type=int, default=8, help="number of agents")
    p.add_argument("--graph", default=graph_default, help="communication digraph")
    p.add_argument("--loss", type=float, default=0.0, help="per-edge packet loss probability")
    p.add_argument("--seed", type=int, default=0, help="seed for loss streams and random graphs")
    p.add_argument("--max-rounds", type=int, default=5000)
    p.add_argument("--halt", action="store_true",
                   help="stop on the distributed halting rule instead of the global fixed point")
    p.add_argument("--no-oracle", dest="oracle", action="store_false", help="skip the brute-force cost")
    p.add_argument("--trace", type=Path, help="per-round CSV trace output")
    p.add_argument("--summary", type=Path, help="JSON summary output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dimilp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="write a random instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--dz", type=int, default=3)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--M", default="100", help="bounding box radius")
    p.add_argument("--integer-cost", action="store_true", help="round c to integers")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run the distributed solver on an instance file")
    p.add_argument("instance", type=Path)
    _run_flags(p, "cyclic")
    p.add_argument("--variant", default="eps:0.1", help="int or eps:<value>")
    p.add_argument("--multi-cuts", action="store_true", help="one MIG cut per fractional component")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("assign", help="solve a task-assignment scenario")
    p.add_argument("spec", type=Path, help="scenario JSON (targets, vehicles, paths)")
    _run_flags(p, "proximity")
    p.set_defaults(agents=9)
    p.add_argument("--eps", default="0.1", help="epsilon; pass --int to use the integer variant")
    p.add_argument("--int", dest="eps", action="store_const", const=None)
    p.add_argument("--radius", type=float, help="communication radius (default: grid spacing)")
    p.add_argument("--data-radius", type=float, help="row-knowledge radius (default: --radius)")
    p.add_argument("--single-cut", dest="multi_cuts", action="store_false")
    p.set_defaults(multi_cuts=True, func=cmd_assign)

    p = sub.add_parser("solve-centralized", help="centralized Gomory reference solve")
    p.add_argument("instance", type=Path)
    p.add_argument("--variant", default="int", help="int, or eps:<value> for the epigraph transform")
    p.add_argument("--max-iters", type=int, default=10000)
    p.add_argument("--brute-force", action="store_true", help="also report the exhaustive optimum")
    p.set_defaults(func=cmd_solve_centralized)

    p = sub.add_parser("sweep", help="run an experiment family")
    p.add_argument("experiment", choices=sorted(sweeps.EXPERIMENTS))
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--sizes", type=int, nargs="+", help="agent counts (scaling experiments)")
    p.add_argument("--values", nargs="+", help="epsilon or loss values")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--verbose", "-v", action="store_true")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dimilp: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except InfeasibleSpecError as exc:
        print(f"dimilp: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (InstanceParseError, PartitionError, ContractViolation, netsim.GraphError,
            ag.ConfigurationError, OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"dimilp: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
