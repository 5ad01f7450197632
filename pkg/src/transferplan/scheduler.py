"""Scheduling of planned transfers on unary links.

A plan fixes, per demand, a chain of transfer tasks (one per link on its
path). Each link runs one transfer at a time. Sites with finite storage add
a cumulative resource: a file passing through such a site holds ``size``
units of space from the start of its incoming transfer to the end of its
outgoing transfer.

Two solvers are provided: a greedy list scheduler that always returns a
feasible schedule, and a branch-and-bound search that schedules tasks
chronologically, either fixing the task with the earliest possible start
at that start or postponing it until the resource picture changes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

from .netmodel import INF, Network, Number, exact, format_rational
from .planner import Plan

__all__ = [
    "Task",
    "Occupancy",
    "ScheduleProblem",
    "Schedule",
    "ScheduleError",
    "build_problem",
    "greedy_schedule",
    "optimal_schedule",
    "verify_schedule",
    "schedule_table",
]


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Task:
    demand: str
    link: str
    duration: Number
    predecessor: int | None  # index of the previous task on the demand's path
    resource: str  # link id


@dataclass(frozen=True)
class Occupancy:
    """Storage held at ``site`` from the start of ``incoming`` to the end of ``outgoing``."""

    demand: str
    site: str
    incoming: int
    outgoing: int
    usage: Number


@dataclass
class ScheduleProblem:
    tasks: list[Task]
    resources: dict[str, list[int]]
    capacities: dict[str, Number] = field(default_factory=dict)
    occupancies: list[Occupancy] = field(default_factory=list)

    def __post_init__(self) -> None:
        n = len(self.tasks)
        self.successor: list[int | None] = [None] * n
        for i, t in enumerate(self.tasks):
            if t.predecessor is not None:
                self.successor[t.predecessor] = i
        # sum of durations after each task on its chain
        self.tail: list[Number] = [0] * n
        for i in reversed(range(n)):
            s = self.successor[i]
            if s is not None:
                self.tail[i] = self.tail[s] + self.tasks[s].duration
        # incoming task -> occupancy it opens
        self.opens: dict[int, Occupancy] = {o.incoming: o for o in self.occupancies}
        self.closes: dict[int, Occupancy] = {o.outgoing: o for o in self.occupancies}


@dataclass
class Schedule:
    starts: list[Number]
    makespan: Number

    def end(self, problem: ScheduleProblem, i: int) -> Number:
        return self.starts[i] + problem.tasks[i].duration


def build_problem(network: Network, plan: Plan, request=None) -> ScheduleProblem:
    """One task per (demand, path link), chained in path order.

    Demand sizes come from ``request`` (a Request or NormalizedRequest);
    without it every demand has unit size.
    """
    sizes = {d.id: d.size for d in request.demands} if request is not None else {}
    tasks: list[Task] = []
    resources: dict[str, list[int]] = {}
    capacities: dict[str, Number] = {}
    occupancies: list[Occupancy] = []
    for route in sorted(plan.routes, key=lambda r: r.demand):
        size = sizes.get(route.demand, 1)
        prev = None
        for lid in route.links:
            link = network.link_index.get(lid)
            if link is None:
                raise ScheduleError(f"plan references unknown link {lid}")
            idx = len(tasks)
            dur = exact(Fraction(size) * Fraction(link.weight))
            tasks.append(Task(route.demand, lid, dur, prev, lid))
            resources.setdefault(lid, []).append(idx)
            if prev is not None:
                site = network.site(link.source)
                if site.storage_capacity is not None:
                    if size > site.storage_capacity:
                        raise ScheduleError(
                            f"demand exceeds site capacity: {route.demand} at {site.id}"
                        )
                    capacities[site.id] = site.storage_capacity
                    occupancies.append(Occupancy(route.demand, site.id, prev, idx, size))
            prev = idx
    return ScheduleProblem(tasks, resources, capacities, occupancies)


# ---------------------------------------------------------------------------
# shared machinery


def _capacity_start(problem: ScheduleProblem, starts, i: int, base):
    """Earliest time >= base at which incoming task ``i`` can open its occupancy.

    Occupancies whose outgoing task is not scheduled yet are treated as
    open-ended. Returns ``math.inf`` when the task is blocked by them.
    """
    occ = problem.opens.get(i)
    if occ is None:
        return base
    cap = problem.capacities[occ.site]
    open_usage = 0
    ending = []
    for o in problem.occupancies:
        if o.site != occ.site or o is occ or starts[o.incoming] is None:
            continue
        out_start = starts[o.outgoing]
        if out_start is None:
            open_usage += o.usage
        else:
            end = out_start + problem.tasks[o.outgoing].duration
            if end > base:
                ending.append((end, o.usage))
    usage = open_usage + sum(u for _, u in ending) + occ.usage
    if usage <= cap:
        return base
    ending.sort()
    for end, u in ending:
        usage -= u
        if usage <= cap:
            return end
    return INF


def greedy_schedule(problem: ScheduleProblem) -> Schedule:
    """List scheduling: always place the ready task that can start first."""
    tasks = problem.tasks
    n = len(tasks)
    starts: list = [None] * n
    free = {r: 0 for r in problem.resources}
    key = [(t.demand, t.link) for t in tasks]
    ready = {i for i, t in enumerate(tasks) if t.predecessor is None}
    for _ in range(n):
        best = None
        best_key = None
        for i in ready:
            t = tasks[i]
            est = free[t.resource]
            if t.predecessor is not None:
                pe = starts[t.predecessor] + tasks[t.predecessor].duration
                if pe > est:
                    est = pe
            est = _capacity_start(problem, starts, i, est)
            if est == INF:
                continue
            k = (est, key[i])
            if best_key is None or k < best_key:
                best, best_key = i, k
        if best is None:
            raise ScheduleError("storage deadlock: every ready transfer waits for space")
        est = best_key[0]
        starts[best] = est
        free[tasks[best].resource] = est + tasks[best].duration
        ready.discard(best)
        succ = problem.successor[best]
        if succ is not None:
            ready.add(succ)
    makespan = max((s + t.duration for s, t in zip(starts, tasks)), default=0)
    return Schedule(starts, exact(makespan))


def verify_schedule(problem: ScheduleProblem, schedule: Schedule) -> list[str]:
    """Independent check of precedence, unary, storage and makespan. Empty list means ok."""
    tasks = problem.tasks
    starts = schedule.starts
    issues = []
    if len(starts) != len(tasks):
        return [f"schedule has {len(starts)} starts for {len(tasks)} tasks"]
    for i, t in enumerate(tasks):
        if starts[i] is None or starts[i] < 0:
            issues.append(f"task {t.demand}/{t.link} has no valid start")
    if issues:
        return issues
    ends = [starts[i] + t.duration for i, t in enumerate(tasks)]
    for i, t in enumerate(tasks):
        if t.predecessor is not None and starts[i] < ends[t.predecessor]:
            issues.append(f"precedence violated for {t.demand} on {t.link}")
    for res, idxs in problem.resources.items():
        order = sorted(idxs, key=lambda i: (starts[i], ends[i]))
        for a, b in zip(order, order[1:]):
            if starts[b] < ends[a]:
                issues.append(f"unary overlap on {res}")
                break
    for site, cap in problem.capacities.items():
        occ = [o for o in problem.occupancies if o.site == site]
        for o in occ:
            t = starts[o.incoming]
            used = sum(p.usage for p in occ if starts[p.incoming] <= t < ends[p.outgoing])
            if used > cap:
                issues.append(f"capacity exceeded at {site}")
                break
    true_makespan = max(ends, default=0)
    if true_makespan != schedule.makespan:
        issues.append(f"makespan {schedule.makespan} does not match task ends ({true_makespan})")
    return issues


def schedule_table(problem: ScheduleProblem, schedule: Schedule) -> str:
    """CSV rows ``demand,link,start,end`` plus a makespan footer."""
    rows = ["demand,link,start,end"]
    order = sorted(range(len(problem.tasks)), key=lambda i: (schedule.starts[i], problem.tasks[i].demand, problem.tasks[i].link))
    for i in order:
        t = problem.tasks[i]
        rows.append(
            f"{t.demand},{t.link},{format_rational(schedule.starts[i])},"
            f"{format_rational(schedule.starts[i] + t.duration)}"
        )
    rows.append(f"makespan,,,{format_rational(schedule.makespan)}")
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# branch and bound


class _Search:
    def __init__(self, problem: ScheduleProblem, deadline: float | None, node_limit: int | None):
        self.p = problem
        self.deadline = deadline
        self.node_limit = node_limit
        self.nodes = 0
        self.aborted = False
        tasks = problem.tasks
        self.dur = [t.duration for t in tasks]
        self.pred = [t.predecessor for t in tasks]
        self.res = [t.resource for t in tasks]
        self.key = [(t.demand, t.link) for t in tasks]
        # chain heads in a fixed order for est sweeps
        self.chains = []
        for i, t in enumerate(tasks):
            if t.predecessor is None:
                chain = [i]
                while problem.successor[chain[-1]] is not None:
                    chain.append(problem.successor[chain[-1]])
                self.chains.append(chain)
        # identical chains (same links, durations and storage use) are
        # interchangeable: the k-th copy's j-th task goes after the
        # (k-1)-th copy's j-th task
        self.sym_prev: list[int | None] = [None] * len(tasks)
        usage = {o.incoming: o.usage for o in problem.occupancies}
        last_of: dict[tuple, list[int]] = {}
        for chain in self.chains:
            sig = tuple((self.res[i], self.dur[i], usage.get(i)) for i in chain)
            prev = last_of.get(sig)
            if prev is not None:
                for a, b in zip(prev, chain):
                    self.sym_prev[b] = a
            last_of[sig] = chain
        # postponing an incoming task into a capped site is not dominated
        # by starting it earlier, so the dominance rule skips it
        self.storage_bound = set(problem.opens)

    def _estimates(self, starts, free):
        """Earliest starts of unscheduled tasks ignoring storage."""
        est = {}
        dur = self.dur
        for chain in self.chains:
            prev_end = 0
            for i in chain:
                s = starts[i]
                if s is not None:
                    prev_end = s + dur[i]
                    continue
                r = free[self.res[i]]
                e = prev_end if prev_end > r else r
                twin = self.sym_prev[i]
                if twin is not None:
                    ts = starts[twin]
                    t_end = (ts if ts is not None else est[twin]) + dur[twin]
                    if t_end > e:
                        e = t_end
                est[i] = e
                prev_end = e + dur[i]
        return est

    def run(self, upper, incumbent: Schedule | None) -> Schedule | None:
        p = self.p
        n = len(p.tasks)
        dur, pred, res, tail = self.dur, self.pred, self.res, p.tail
        best = incumbent
        best_val = incumbent.makespan if incumbent is not None else upper
        root = ([None] * n, {r: 0 for r in p.resources}, {}, 0)
        stack = [root]
        while stack:
            starts, free, postponed, cur_max = stack.pop()
            self.nodes += 1
            if self.node_limit is not None and self.nodes > self.node_limit:
                self.aborted = True
                break
            if self.deadline is not None and self.nodes % 128 == 0 and time.monotonic() >= self.deadline:
                self.aborted = True
                break
            est = self._estimates(starts, free)
            if not est:
                if cur_max < best_val:
                    best_val = cur_max
                    best = Schedule(list(starts), exact(cur_max))
                continue
            # lower bound
            lb = cur_max
            per_res: dict[str, list] = {}
            for i, e in est.items():
                v = e + dur[i] + tail[i]
                if v > lb:
                    lb = v
                acc = per_res.get(res[i])
                if acc is None:
                    per_res[res[i]] = [e, dur[i], tail[i]]
                else:
                    if e < acc[0]:
                        acc[0] = e
                    acc[1] += dur[i]
                    if tail[i] < acc[2]:
                        acc[2] = tail[i]
            for acc in per_res.values():
                v = acc[0] + acc[1] + acc[2]
                if v > lb:
                    lb = v
            if lb >= best_val:
                continue
            # selection among ready tasks
            new_postponed = postponed
            pruned = False
            cand = None
            cand_key = None
            for i, e in est.items():
                if pred[i] is not None and starts[pred[i]] is None:
                    continue
                twin = self.sym_prev[i]
                if twin is not None and starts[twin] is None:
                    continue
                e_cap = _capacity_start(p, starts, i, e) if i in self.storage_bound else e
                if i in postponed:
                    if e_cap == INF or e_cap <= postponed[i]:
                        if i not in self.storage_bound:
                            # dominance: could slip in at est without delaying others
                            others = [est[j] for j in p.resources[res[i]] if j != i and j in est]
                            if e + dur[i] <= min(others, default=INF):
                                pruned = True
                                break
                        continue
                    if new_postponed is postponed:
                        new_postponed = dict(postponed)
                    del new_postponed[i]
                if e_cap == INF:
                    continue
                k = (e_cap, -tail[i], self.key[i])
                if cand_key is None or k < cand_key:
                    cand, cand_key = i, k
            if pruned or cand is None:
                continue
            start = cand_key[0]
            # branch 2: postpone (explored second)
            post = dict(new_postponed)
            post[cand] = start
            stack.append((starts, free, post, cur_max))
            # branch 1: schedule now
            s2 = list(starts)
            s2[cand] = start
            f2 = dict(free)
            end = start + dur[cand]
            f2[res[cand]] = end
            stack.append((s2, f2, new_postponed, end if end > cur_max else cur_max))
        if best is None or best.makespan >= upper:
            return None
        return best


@dataclass
class SearchStats:
    nodes: int = 0
    aborted: bool = False


def optimal_schedule(
    problem: ScheduleProblem,
    strict_upper=INF,
    deadline: float | None = None,
    node_limit: int | None = None,
    stats: SearchStats | None = None,
) -> Schedule | None:
    """Minimal-makespan schedule strictly below ``strict_upper``, or None.

    The greedy schedule seeds the incumbent. If the search is cut short by
    ``deadline`` or ``node_limit`` the best schedule found so far is
    returned and ``stats.aborted`` is set.
    """
    if not problem.tasks:
        return Schedule([], 0) if strict_upper > 0 else None
    try:
        seed = greedy_schedule(problem)
    except ScheduleError:
        seed = None
    if seed is not None and seed.makespan >= strict_upper:
        seed = None
    search = _Search(problem, deadline, node_limit)
    result = search.run(strict_upper, seed)
    if stats is not None:
        stats.nodes += search.nodes
        stats.aborted = stats.aborted or search.aborted
    return result
