"""Anytime plan/schedule iteration.

The planner proposes routings; each is scheduled; every strictly better
makespan becomes the new bound, which the planner uses to prune the
remaining routings. Stops when the planner runs dry or the incumbent meets
a simple lower bound (either way it is optimal), or when the time budget
is spent.
"""

from __future__ import annotations

import enum
import heapq
import time
from dataclasses import dataclass
from fractions import Fraction

from .netmodel import (
    INF,
    Network,
    NormalizedRequest,
    Number,
    Request,
    distances_to,
    exact,
    format_rational,
    transfer_duration,
    validate_request,
)
from .oracle import oracle_solve  # noqa: F401  (re-exported)
from .planner import Heuristic, InfeasibleError, Plan, PlannerState, Route, ValueOrder
from .scheduler import (
    Schedule,
    ScheduleError,
    ScheduleProblem,
    SearchStats,
    build_problem,
    greedy_schedule,
    optimal_schedule,
)


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    TIME_LIMIT = "time-limit"


@dataclass(frozen=True)
class SolveOptions:
    heuristic: Heuristic = Heuristic.MIN_PATH
    value_order: ValueOrder = ValueOrder.DECREASING
    time_limit: float | None = None
    seed: int = 0
    # deterministic budgets, mainly for tests and reproducible truncation
    plan_limit: int | None = None
    schedule_node_limit: int | None = None
    # search refinements; none of them changes the optimum
    symmetry_breaking: bool = True
    greedy_incumbent: bool = True
    restart: bool = False  # replan from the root after every improvement instead of resuming
    lower_bound_stop: bool = True

    def __post_init__(self) -> None:
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        object.__setattr__(self, "heuristic", Heuristic(self.heuristic))
        object.__setattr__(self, "value_order", ValueOrder(self.value_order))


@dataclass(frozen=True)
class TracePoint:
    ms: float
    plans: int  # planner leaves seen when the incumbent was found
    makespan: object


@dataclass
class Solution:
    plan: Plan
    schedule: Schedule
    problem: ScheduleProblem
    makespan: object
    status: Status
    trace: list[TracePoint]
    request: NormalizedRequest
    plans_explored: int = 0
    planner_nodes: int = 0
    scheduler_nodes: int = 0
    elapsed_ms: float = 0.0

    @property
    def best_time_ms(self) -> float:
        return self.trace[-1].ms if self.trace else 0.0


def greedy_plan(network: Network, request: NormalizedRequest) -> Plan:
    """Route demands one at a time on the path that arrives first.

    Links are treated as serial queues: a demand's transfer on a link starts
    when it has reached the link's tail and the link has finished the
    transfers routed earlier. Demands with fewer origins go first.
    """
    dest = request.destination
    free: dict[str, Number] = {}
    routes = []
    for d in sorted(request.demands, key=lambda d: (len(d.origins), d.id)):
        # label-setting search is valid because waiting never pays off on FIFO links
        best: dict[str, tuple] = {}
        heap = [(0, 0, o, o, ()) for o in sorted(d.origins) if o in network.site_index]
        heapq.heapify(heap)
        done = None
        while heap:
            t, hops, node, origin, path = heapq.heappop(heap)
            if node in best:
                continue
            best[node] = (t, origin, path)
            if node == dest:
                done = best[node]
                break
            for link in sorted(network.OUT(node), key=lambda l: l.id):
                if link.target in best or link.target in d.origins:
                    continue
                start = max(t, free.get(link.id, 0))
                heapq.heappush(
                    heap,
                    (start + transfer_duration(d, link), hops + 1, link.target, origin, path + (link.id,)),
                )
        if done is None:
            raise InfeasibleError(f"no route for demand {d.id}")
        t_arrive, origin, path = done
        # replay the path to book the links
        t = 0
        for lid in path:
            link = network.link(lid)
            start = max(t, free.get(lid, 0))
            t = start + transfer_duration(d, link)
            free[lid] = t
        routes.append(Route(d.id, origin, path))
    return Plan(tuple(sorted(routes, key=lambda r: r.demand)))


def makespan_lower_bound(network: Network, request: NormalizedRequest) -> Number:
    """A makespan no schedule of any plan can beat.

    Two relaxations: every demand alone on its shortest path, and every
    demand free to enter the destination over any incoming link, each link
    becoming available at the earliest time any demand can reach its tail.
    """
    dest = request.destination
    if not request.demands:
        return 0
    to_dest = distances_to(network, dest)
    bound: Number = 0
    for d in request.demands:
        bound = max(bound, exact(min(to_dest[o] for o in d.origins if o in to_dest) * d.size))

    # earliest time (unit size) each site can be reached from each origin set
    def reach(origins) -> dict[str, Number]:
        dist = {o: 0 for o in origins if o in network.site_index}
        heap = [(0, o) for o in sorted(dist)]
        seen = set()
        while heap:
            t, node = heapq.heappop(heap)
            if node in seen:
                continue
            seen.add(node)
            if node == dest:
                continue
            for link in network.OUT(node):
                cand = t + link.weight
                if cand < dist.get(link.target, INF):
                    dist[link.target] = cand
                    heapq.heappush(heap, (cand, link.target))
        return dist

    reach_cache: dict[frozenset, dict] = {}
    release: dict[str, Number] = {}
    inbound = [link for link in network.IN(dest)]
    for d in request.demands:
        if d.origins not in reach_cache:
            reach_cache[d.origins] = reach(d.origins)
        r = reach_cache[d.origins]
        for link in inbound:
            if link.source in r:
                t = exact(r[link.source] * d.size)
                if t < release.get(link.id, INF):
                    release[link.id] = t
    usable = [link for link in inbound if link.id in release]
    sizes = {d.size for d in request.demands}
    if len(sizes) == 1:
        # whole files: the k-th file over a link ends at release + k * duration
        size = Fraction(next(iter(sizes)))
        heap = [(release[l.id] + size * l.weight, size * l.weight) for l in usable]
        heapq.heapify(heap)
        end = 0
        for _ in request.demands:
            end, step = heapq.heappop(heap)
            heapq.heappush(heap, (end + step, step))
        return exact(max(bound, end))
    # fractional: total work must fit between each link's release and T
    total = sum(Fraction(d.size) for d in request.demands)
    points = sorted((Fraction(release[l.id]), Fraction(1, 1) / Fraction(l.weight)) for l in usable)
    rate = Fraction(0)
    work = Fraction(0)
    t = points[0][0]
    for k, (r, v) in enumerate(points):
        if k:
            # work done between the previous release and this one
            if work + rate * (r - t) >= total:
                break
            work += rate * (r - t)
            t = r
        rate += v
    end = t + (total - work) / rate
    return exact(max(bound, end))


def solve(network: Network, request: Request | NormalizedRequest, options: SolveOptions | None = None) -> Solution:
    options = options or SolveOptions()
    t0 = time.monotonic()
    deadline = t0 + options.time_limit if options.time_limit is not None else None
    norm = request if isinstance(request, NormalizedRequest) else validate_request(network, request)

    def now_ms() -> float:
        return round((time.monotonic() - t0) * 1000.0, 3)

    if not norm.demands:
        empty = build_problem(network, Plan(()), norm)
        return Solution(Plan(()), Schedule([], 0), empty, 0, Status.OPTIMAL, [TracePoint(now_ms(), 0, 0)], norm)

    def new_state(bound) -> PlannerState:
        return PlannerState(
            network, norm, bound, options.heuristic, options.value_order, options.symmetry_breaking
        )

    try:
        state = new_state(INF)
    except InfeasibleError as exc:
        raise InfeasibleError("no feasible plan") from exc
    plan = state.next_plan(deadline=deadline)
    if plan is None:
        if state.timed_out:
            raise TimeoutError("time limit reached before the first plan")
        raise InfeasibleError("no feasible plan")

    floor = makespan_lower_bound(network, norm) if options.lower_bound_stop else None
    stats = SearchStats()
    trace: list[TracePoint] = []
    best: tuple[Plan, Schedule, ScheduleProblem] | None = None
    bound = INF
    plans = 1
    planner_nodes = 0

    def offer(candidate: Plan, problem: ScheduleProblem) -> None:
        nonlocal bound, best
        try:
            sched = greedy_schedule(problem)
        except ScheduleError:
            return
        if sched.makespan < bound:
            bound = sched.makespan
            best = (candidate, sched, problem)
            trace.append(TracePoint(now_ms(), plans, bound))

    problem = build_problem(network, plan, norm)
    offer(plan, problem)
    if options.greedy_incumbent:
        alt = greedy_plan(network, norm)
        offer(alt, build_problem(network, alt, norm))

    truncated = False
    while plan is not None:
        if floor is not None and bound <= floor:
            break
        sched = optimal_schedule(problem, bound, deadline, options.schedule_node_limit, stats)
        improved = sched is not None and sched.makespan < bound
        if improved:
            bound = sched.makespan
            best = (plan, sched, problem)
            trace.append(TracePoint(now_ms(), plans, bound))
        if stats.aborted or (deadline is not None and time.monotonic() >= deadline):
            truncated = True
            break
        if options.plan_limit is not None and plans >= options.plan_limit:
            truncated = True
            break
        if floor is not None and bound <= floor:
            break
        if options.restart and bound != state.makespan_bound:
            planner_nodes += state.nodes_visited
            state = new_state(bound)
        elif bound != INF:
            state.makespan_bound = bound
        plan = state.next_plan(deadline=deadline)
        if plan is not None:
            plans += 1
            problem = build_problem(network, plan, norm)
    truncated = truncated or state.timed_out
    if best is None:
        raise InfeasibleError("no feasible plan")
    plan, sched, problem = best
    return Solution(
        plan=plan,
        schedule=sched,
        problem=problem,
        makespan=sched.makespan,
        status=Status.TIME_LIMIT if truncated else Status.OPTIMAL,
        trace=trace,
        request=norm,
        plans_explored=plans,
        planner_nodes=planner_nodes + state.nodes_visited,
        scheduler_nodes=stats.nodes,
        elapsed_ms=now_ms(),
    )


def trace_table(trace: list[TracePoint], with_time: bool = True) -> str:
    """CSV of incumbent improvements: ``ms,plans,makespan``."""
    head = "ms,plans,makespan" if with_time else "plans,makespan"
    rows = [head]
    for p in trace:
        cells = [f"{p.ms:.3f}"] if with_time else []
        cells += [str(p.plans), format_rational(p.makespan)]
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"
