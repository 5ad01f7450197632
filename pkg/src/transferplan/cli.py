"""Command-line front end.

Subcommands: ``solve``, ``p2p``, ``simulate``, ``bench`` and ``gen``.
Inputs are JSON documents; tables are CSV with a header row. Every command
that takes ``--out`` writes a ``manifest.json`` next to its outputs.

Exit status: 0 success, 1 usage or input error, 2 infeasible (including no
plan found within the time limit).
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .execsim import compare_makespans, simulate_execution
from .netmodel import (
    Network,
    NetworkConfigError,
    UnroutableDemandError,
    apply_shared_groups,
    dump_network,
    dump_request,
    format_rational,
    read_network,
    read_request,
    validate_request,
)
from .optimizer import Solution, SolveOptions, solve, trace_table
from .p2p import P2PInfeasibleError, simulate_p2p, transfer_log_table
from .planner import Heuristic, InfeasibleError, ValueOrder, check_plan, dump_plan, read_plan
from .scheduler import (
    ScheduleError,
    build_problem,
    optimal_schedule,
    schedule_table,
)
from .workload import BENCHMARK_SIZES, benchmark_network, generate_demands

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for infeasibility here
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


@dataclass
class _Outputs:
    directory: Path | None

    def write(self, name: str, text: str) -> None:
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
            (self.directory / name).write_text(text, encoding="utf-8")


def _manifest(command: str, inputs: dict[str, Any], options: dict[str, Any], seed, started: float) -> str:
    doc = {
        "command": command,
        "inputs": inputs,
        "options": options,
        "seed": seed,
        "version": __version__,
        "python": platform.python_version(),
        "wall_time_s": round(time.monotonic() - started, 3),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _load_network(path: str) -> Network:
    try:
        network = read_network(path)
    except FileNotFoundError:
        raise _InputError(f"no such file: {path}") from None
    if network.shared_groups:
        network = apply_shared_groups(network, network.shared_groups)
    return network


def _load_request(path: str):
    try:
        return read_request(path)
    except FileNotFoundError:
        raise _InputError(f"no such file: {path}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _positive(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


# ---------------------------------------------------------------------------
# commands


def _solve_options(args) -> SolveOptions:
    return SolveOptions(
        heuristic=Heuristic(args.heuristic),
        value_order=ValueOrder(args.value_order),
        time_limit=args.time_limit,
        seed=args.seed,
    )


def _write_solution(out: _Outputs, sol: Solution) -> None:
    out.write("plan.json", dump_plan(sol.plan))
    out.write("schedule.csv", schedule_table(sol.problem, sol.schedule))
    out.write("trace.csv", trace_table(sol.trace))


def cmd_solve(args) -> int:
    started = time.monotonic()
    network = _load_network(args.network)
    request = _load_request(args.request)
    norm = validate_request(network, request)
    for w in norm.warnings:
        print(f"warning: {w}", file=sys.stderr)
    options = _solve_options(args)
    sol = solve(network, norm, options)
    out = _Outputs(Path(args.out) if args.out else None)
    _write_solution(out, sol)
    out.write(
        "manifest.json",
        _manifest(
            "solve",
            {"network": args.network, "request": args.request},
            {"heuristic": options.heuristic.value, "value_order": options.value_order.value,
             "time_limit": options.time_limit},
            args.seed,
            started,
        ),
    )
    print(f"makespan {format_rational(sol.makespan)}")
    print(f"best solution after {sol.best_time_ms:.1f} ms ({sol.status.value})")
    return EXIT_OK


def cmd_p2p(args) -> int:
    started = time.monotonic()
    network = _load_network(args.network)
    request = _load_request(args.request)
    result = simulate_p2p(network, validate_request(network, request), seed=args.seed)
    out = _Outputs(Path(args.out) if args.out else None)
    out.write("transfers.csv", transfer_log_table(result.transfers, result.makespan))
    out.write(
        "manifest.json",
        _manifest("p2p", {"network": args.network, "request": args.request}, {}, args.seed, started),
    )
    print(f"makespan {format_rational(result.makespan)}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    started = time.monotonic()
    network = _load_network(args.network)
    request = _load_request(args.request)
    norm = validate_request(network, request)
    try:
        plan = read_plan(args.plan)
    except FileNotFoundError:
        raise _InputError(f"no such file: {args.plan}") from None
    issues = check_plan(network, norm, plan)
    if issues:
        raise _InputError("invalid plan: " + "; ".join(issues))
    problem = build_problem(network, plan, norm)
    deadline = time.monotonic() + args.time_limit if args.time_limit else None
    sched = optimal_schedule(problem, deadline=deadline)
    result = simulate_execution(network, plan, norm, seed=args.seed, max_streams=args.max_streams)
    gap = compare_makespans(sched.makespan, result.makespan)
    out = _Outputs(Path(args.out) if args.out else None)
    out.write("execution.csv", transfer_log_table(result.transfers, result.makespan))
    out.write(
        "manifest.json",
        _manifest(
            "simulate",
            {"network": args.network, "request": args.request, "plan": args.plan},
            {"max_streams": args.max_streams, "time_limit": args.time_limit},
            args.seed,
            started,
        ),
    )
    print(f"schedule makespan {format_rational(sched.makespan)}")
    print(f"execution makespan {format_rational(result.makespan)}")
    print(f"gap {gap:.2%}")
    return EXIT_OK


BENCH_HEADER = "size,seed,heuristic,makespan,best_time_ms,status,p2p_makespan,error"


def cmd_bench(args) -> int:
    started = time.monotonic()
    network = benchmark_network()
    out = _Outputs(Path(args.out) if args.out else None)
    rows = [BENCH_HEADER]
    for size in args.sizes:
        for seed in args.seeds:
            request = validate_request(network, generate_demands(size, seed=seed))
            try:
                p2p = format_rational(simulate_p2p(network, request, seed=seed).makespan)
            except P2PInfeasibleError as exc:
                p2p = ""
                print(f"warning: size {size} seed {seed}: {exc}", file=sys.stderr)
            for heuristic in (Heuristic.FASTEST_LINK, Heuristic.MIN_PATH):
                options = SolveOptions(heuristic=heuristic, value_order=ValueOrder(args.value_order),
                                       time_limit=args.time_limit, seed=seed)
                run = f"{size}-{seed}-{heuristic.value}"
                try:
                    sol = solve(network, request, options)
                except (InfeasibleError, TimeoutError, ScheduleError) as exc:
                    rows.append(f"{size},{seed},{heuristic.value},,,failed,{p2p},{exc}")
                    continue
                run_out = _Outputs(out.directory / "runs" / run if out.directory else None)
                _write_solution(run_out, sol)
                run_out.write(
                    "manifest.json",
                    _manifest("bench-run", {"network": "<benchmark fixture>"},
                              {"size": size, "heuristic": heuristic.value, "time_limit": args.time_limit},
                              seed, started),
                )
                rows.append(
                    f"{size},{seed},{heuristic.value},{format_rational(sol.makespan)},"
                    f"{sol.best_time_ms:.1f},{sol.status.value},{p2p},"
                )
                print(rows[-1].rstrip(","), file=sys.stderr, flush=True)
    table = "\n".join(rows) + "\n"
    out.write("bench.csv", table)
    out.write(
        "manifest.json",
        _manifest("bench", {"network": "<benchmark fixture>"},
                  {"sizes": args.sizes, "seeds": args.seeds, "time_limit": args.time_limit},
                  args.seeds, started),
    )
    if out.directory is None:
        sys.stdout.write(table)
    return EXIT_OK


def cmd_gen(args) -> int:
    started = time.monotonic()
    request = generate_demands(args.n, seed=args.seed)
    out = _Outputs(Path(args.out))
    out.write("request.json", dump_request(request))
    out.write("network.json", dump_network(benchmark_network()))
    out.write("manifest.json", _manifest("gen", {}, {"n": args.n}, args.seed, started))
    print(f"wrote {args.n} demands to {Path(args.out) / 'request.json'}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="transferplan", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def inputs(p):
        p.add_argument("--network", required=True, help="network document (JSON)")
        p.add_argument("--request", required=True, help="request document (JSON)")

    def search(p):
        p.add_argument("--heuristic", choices=[h.value for h in (Heuristic.MIN_PATH, Heuristic.FASTEST_LINK)],
                       default=Heuristic.MIN_PATH.value)
        p.add_argument("--value-order", choices=[v.value for v in ValueOrder], default=ValueOrder.DECREASING.value)

    p = sub.add_parser("solve", help="plan and schedule a request")
    inputs(p)
    search(p)
    p.add_argument("--time-limit", type=_positive, default=None, metavar="SECONDS")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("p2p", help="run the peer-to-peer baseline")
    inputs(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_p2p)

    p = sub.add_parser("simulate", help="execute a stored plan and compare with its schedule")
    inputs(p)
    p.add_argument("--plan", required=True, help="plan document (JSON) written by solve")
    p.add_argument("--max-streams", type=int, default=None, metavar="N")
    p.add_argument("--time-limit", type=_positive, default=None, metavar="SECONDS",
                   help="budget for the reference schedule")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="compare both heuristics and P2P on the benchmark fixture")
    p.add_argument("--sizes", type=_int_list, default=list(BENCHMARK_SIZES))
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.add_argument("--value-order", choices=[v.value for v in ValueOrder], default=ValueOrder.DECREASING.value)
    p.add_argument("--time-limit", type=_positive, default=30.0, metavar="SECONDS")
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="write a benchmark request and the fixture network")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UnroutableDemandError, InfeasibleError, P2PInfeasibleError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except TimeoutError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (_InputError, NetworkConfigError, ScheduleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
