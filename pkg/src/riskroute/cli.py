"""Command-line interface: ``riskroute <subcommand> GRAPH [options]``.

Exit codes: 0 success, 2 input error, 3 enumeration guard exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from riskroute.generate import layered_dag
from riskroute.graph import Dag, GraphError, load_graph, serialize_graph
from riskroute.poly import accumulate_symbolic, find_crossovers, symbolic_eagle, sweep, sweep_csv
from riskroute.risk import accumulate
from riskroute.sim import (
    MAX_ENUMERATION_EDGES,
    EnumerationTooLarge,
    enumerate_exact,
    greedy_walk,
    monte_carlo,
    static_most_reliable_path,
    traces,
)

EXIT_INPUT = 2
EXIT_GUARD = 3


class InputError(Exception):
    pass


def _read_graph(args, symbolic: bool = False) -> Dag:
    try:
        if args.graph == "-":
            text = sys.stdin.read()
        else:
            with open(args.graph, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read graph: {exc}") from None
    has_alpha = getattr(args, "alpha", None) is not None
    dag = load_graph(text, symbolic=symbolic or has_alpha)
    if has_alpha:
        dag = dag.with_uniform_risk(args.alpha)
    return dag


def _emit(args, payload, rows=None, columns=None) -> None:
    fmt = getattr(args, "format", "json")
    if fmt == "json" or rows is None:
        print(json.dumps(payload, indent=2))
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c), 12) for c in columns])
        sys.stdout.write(buf.getvalue())
    else:
        cells = [[str(c) for c in columns]] + [[_cell(row.get(c), 4) for c in columns] for row in rows]
        widths = [max(len(r[k]) for r in cells) for k in range(len(columns))]
        for r in cells:
            print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())


def _cell(value, digits: int) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.{digits}f}" if digits == 4 else f"{value:.12g}"
    if isinstance(value, (list, tuple)):
        return " ".join(map(str, value))
    return str(value)


def cmd_accumulate(args) -> None:
    dag = _read_graph(args)
    acc = accumulate(dag, args.model, args.order_key)
    report = acc.to_dict()
    columns = ["id", "risk", "accumulated"] + (["remainder"] if args.model == "bat" else []) + ["attempt_order"]
    _emit(args, report, report["edges"], columns)


def cmd_route(args) -> None:
    dag = _read_graph(args)
    acc = accumulate(dag, args.model, args.order_key)
    planned = greedy_walk(dag, acc, {e: False for e in dag.edge_ids})
    orders = [
        {"vertex": v, "attempt_order": list(acc.vertex_order.get(v, ()))}
        for v in dag.topological_order
        if v != dag.destination
    ]
    payload = {
        "model": acc.model,
        "source": dag.source,
        "destination": dag.destination,
        "source_risk": float(f"{acc.source_risk:.12g}"),
        "planned_path": list(planned.path),
        "vertex_orders": orders,
    }
    _emit(args, payload, orders, ["vertex", "attempt_order"])


def cmd_simulate(args) -> None:
    if args.trials < 1:
        raise InputError("--trials must be at least 1")
    dag = _read_graph(args)
    summary = monte_carlo(dag, args.model, args.trials, args.seed, args.order_key)
    if args.trace:
        acc = accumulate(dag, args.model, args.order_key)
        with open(args.trace, "w", encoding="utf-8") as fh:
            for trace in traces(dag, acc, args.seed, args.trials):
                fh.write(trace.to_json() + "\n")
    out = summary.to_dict()
    _emit(args, out, [out], list(out))


def cmd_enumerate(args) -> None:
    dag = _read_graph(args)
    result = enumerate_exact(dag, args.model, args.order_key, method=args.method, max_edges=args.max_edges)
    acc = accumulate(dag, args.model, args.order_key)
    payload = result.to_dict(acc)
    rows = [
        {
            "id": e,
            "conditional": p,
            "remainder": acc.remainder.get(e) if acc.model == "bat" else None,
        }
        for e, p in sorted(result.conditional.items())
    ]
    _emit(args, payload, rows, ["id", "conditional", "remainder"])


def cmd_poly(args) -> None:
    dag = _read_graph(args, symbolic=True)
    if args.eagle:
        polys = symbolic_eagle(dag)
        payload = [
            {"edge": e, "pieces": [{"interval": [0, 1], "coefficients": list(polys[e].coefficients)}]}
            for e in sorted(polys)
        ]
    else:
        payload = accumulate_symbolic(dag).to_json_dict()
    if args.edge:
        payload = [p for p in payload if p["edge"] in args.edge]
    rows = [
        {"edge": p["edge"], "interval": piece["interval"], "coefficients": piece["coefficients"]}
        for p in payload
        for piece in p["pieces"]
    ]
    _emit(args, payload, rows, ["edge", "interval", "coefficients"])


def cmd_paradox(args) -> None:
    dag = _read_graph(args, symbolic=True)
    found = find_crossovers(dag, all_edges=args.all_edges)
    payload = {"source": dag.source, "crossovers": [c.to_dict() for c in found]}
    _emit(args, payload, payload["crossovers"], ["alpha", "vertex", "before", "after"])


def cmd_sweep(args) -> None:
    if args.steps < 2:
        raise InputError("--steps must be at least 2")
    dag = _read_graph(args, symbolic=True)
    rows = sweep(dag, args.steps)
    columns = ["alpha", *dag.out_edges(dag.source), "chosen"]
    if args.format == "csv":
        sys.stdout.write(sweep_csv(dag, rows))
    else:
        _emit(args, [{k: row[k] for k in columns} for row in rows], rows, columns)


def cmd_baseline(args) -> None:
    dag = _read_graph(args)
    result = static_most_reliable_path(dag).to_dict()
    _emit(args, result, [result], ["path", "success", "failure"])


def cmd_gen(args) -> None:
    dag = layered_dag(args.layers, args.width, args.edge_prob, args.seed, args.risk_min, args.risk_max)
    print(serialize_graph(dag))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riskroute", description="Fault-tolerant greedy routing on risky DAGs")
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_command(name, func, help, formats=("json", "csv", "table"), default="json", alpha=True, model=True):
        p = sub.add_parser(name, help=help)
        p.add_argument("graph", help="graph file (JSON or DOT), or - for stdin")
        p.add_argument("--format", choices=formats, default=default)
        if alpha:
            p.add_argument("--alpha", type=float, help="override every edge risk with this value")
        if model:
            p.add_argument("--model", choices=("bat", "eagle"), default="bat")
            p.add_argument("--order-key", choices=("accumulated", "remainder"), default="accumulated")
        p.set_defaults(func=func)
        return p

    graph_command("accumulate", cmd_accumulate, "per-edge accumulated risk report")
    graph_command("route", cmd_route, "attempt order at every vertex and the all-intact plan")
    p = graph_command("simulate", cmd_simulate, "Monte Carlo failure rate of the greedy walk")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", metavar="FILE", help="write one JSON walk trace per line")
    p = graph_command("enumerate", cmd_enumerate, "exact failure probability by world enumeration")
    p.add_argument("--method", choices=("pruned", "full"), default="pruned")
    p.add_argument("--max-edges", type=int, default=MAX_ENUMERATION_EDGES)
    p = graph_command("poly", cmd_poly, "uniform-risk polynomials per edge", alpha=False, model=False)
    p.add_argument("--edge", action="append", help="only report this edge (repeatable)")
    p.add_argument("--eagle", action="store_true", help="eagle-eye polynomials (debug)")
    p = graph_command("paradox", cmd_paradox, "alpha values where the first choice changes", alpha=False, model=False)
    p.add_argument("--all-edges", action="store_true", help="report order changes at every vertex")
    p = graph_command("sweep", cmd_sweep, "first-choice failure curves over alpha", default="csv", alpha=False, model=False)
    p.add_argument("--steps", type=int, default=101)
    graph_command("baseline", cmd_baseline, "most reliable path without rerouting", model=False)

    p = sub.add_parser("gen", help="generate a random layered DAG as JSON")
    p.add_argument("--layers", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--edge-prob", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--risk-min", type=float, default=0.1)
    p.add_argument("--risk-max", type=float, default=0.5)
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    try:
        args.func(args)
    except EnumerationTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (GraphError, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
