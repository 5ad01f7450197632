"""Planning and scheduling of file transfers from replicated sources.

Files held at one or more sites must reach a destination site over a
network of links. The package routes every file (planner), times the
transfers (scheduler) and iterates the two until the makespan is optimal or
time runs out (optimizer). A peer-to-peer baseline, an execution simulator
and a benchmark workload generator complete the toolbox.
"""

from __future__ import annotations

from .execsim import ExecResult, ExecutionStuckError, compare_makespans, simulate_execution
from .netmodel import (
    Demand,
    Link,
    Network,
    NetworkConfigError,
    NormalizedRequest,
    Request,
    SharedGroup,
    Site,
    UnroutableDemandError,
    apply_shared_groups,
    dump_network,
    dump_request,
    load_network,
    load_request,
    read_network,
    read_request,
    validate_request,
)
from .optimizer import (
    Solution,
    SolveOptions,
    Status,
    TracePoint,
    greedy_plan,
    makespan_lower_bound,
    solve,
    trace_table,
)
from .oracle import oracle_solve
from .p2p import P2PInfeasibleError, P2PResult, simulate_p2p
from .planner import (
    Heuristic,
    InfeasibleError,
    Plan,
    PlannerState,
    Route,
    ValueOrder,
    check_plan,
    dump_plan,
    load_plan,
    read_plan,
)
from .scheduler import (
    Schedule,
    ScheduleError,
    ScheduleProblem,
    build_problem,
    greedy_schedule,
    optimal_schedule,
    schedule_table,
    verify_schedule,
)
from .workload import benchmark_network, generate_demands

__version__ = "0.1.0"

__all__ = [
    "Demand",
    "ExecResult",
    "ExecutionStuckError",
    "Heuristic",
    "InfeasibleError",
    "Link",
    "Network",
    "NetworkConfigError",
    "NormalizedRequest",
    "P2PInfeasibleError",
    "P2PResult",
    "Plan",
    "PlannerState",
    "Request",
    "Route",
    "Schedule",
    "ScheduleError",
    "ScheduleProblem",
    "SharedGroup",
    "Site",
    "Solution",
    "SolveOptions",
    "Status",
    "TracePoint",
    "UnroutableDemandError",
    "ValueOrder",
    "apply_shared_groups",
    "benchmark_network",
    "build_problem",
    "check_plan",
    "compare_makespans",
    "dump_network",
    "dump_plan",
    "dump_request",
    "generate_demands",
    "greedy_plan",
    "greedy_schedule",
    "load_network",
    "load_plan",
    "load_request",
    "makespan_lower_bound",
    "optimal_schedule",
    "oracle_solve",
    "read_network",
    "read_plan",
    "read_request",
    "schedule_table",
    "simulate_execution",
    "simulate_p2p",
    "solve",
    "trace_table",
    "validate_request",
    "verify_schedule",
]
