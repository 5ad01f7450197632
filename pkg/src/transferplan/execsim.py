"""Greedy execution of a plan by per-link managers.

The schedule is not followed. Each link has a manager that starts the next
waiting file as soon as one is present at the link's tail and a stream is
free (oldest arrival first, then demand id). A transfer takes its nominal
duration whatever the number of parallel streams on the link.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from .netmodel import Network, Number, exact
from .p2p import TransferRecord
from .planner import Plan


class ExecutionStuckError(RuntimeError):
    pass


@dataclass
class ExecResult:
    makespan: Number
    transfers: list[TransferRecord]
    peak_streams: dict[str, int]


def simulate_execution(
    network: Network,
    plan: Plan,
    request=None,
    seed: int | None = 0,
    max_streams: int | None = None,
) -> ExecResult:
    """Run ``plan`` greedily. ``max_streams`` overrides every link's own cap.

    ``seed`` is accepted for interface symmetry; the model has no random
    component.
    """
    sizes = {d.id: d.size for d in request.demands} if request is not None else {}
    routes = {r.demand: r.links for r in plan.routes}
    for did, links in routes.items():
        for lid in links:
            if lid not in network.link_index:
                raise ExecutionStuckError(f"{did}: unknown link {lid}")
    caps = {
        lid: (max_streams if max_streams is not None else link.max_streams)
        for lid, link in network.link_index.items()
    }
    queues: dict[str, deque] = {}
    active: dict[str, int] = {}
    peak: dict[str, int] = {}
    position = {did: 0 for did in routes}
    done = {did for did, links in routes.items() if not links}
    for did in sorted(routes):
        if routes[did]:
            queues.setdefault(routes[did][0], deque()).append(did)
    transfers: list[TransferRecord] = []
    running: list[tuple] = []  # (end, demand, link)
    t: Number = 0
    makespan: Number = 0
    while len(done) < len(routes):
        for lid in sorted(queues):
            q = queues[lid]
            while q and active.get(lid, 0) < caps[lid]:
                did = q.popleft()
                dur = exact(Fraction(sizes.get(did, 1)) * Fraction(network.link(lid).weight))
                heapq.heappush(running, (t + dur, did, lid))
                transfers.append(TransferRecord(did, lid, t, t + dur))
                active[lid] = active.get(lid, 0) + 1
                peak[lid] = max(peak.get(lid, 0), active[lid])
        if not running:
            waiting = sorted(d for d in routes if d not in done)
            raise ExecutionStuckError(f"stuck execution; waiting files: {', '.join(waiting)}")
        t = running[0][0]
        arrived = []
        while running and running[0][0] == t:
            _, did, lid = heapq.heappop(running)
            active[lid] -= 1
            position[did] += 1
            arrived.append(did)
        # files arriving together queue up in demand-id order
        for did in sorted(arrived):
            if position[did] == len(routes[did]):
                done.add(did)
                makespan = max(makespan, t)
            else:
                queues.setdefault(routes[did][position[did]], deque()).append(did)
    return ExecResult(makespan, transfers, peak)


def compare_makespans(schedule_makespan: Number, exec_makespan: Number) -> float:
    """Relative gap ``|exec - sched| / sched``; infinite if only the schedule is empty."""
    if schedule_makespan == 0:
        return 0.0 if exec_makespan == 0 else math.inf
    return float(abs(Fraction(exec_makespan) - Fraction(schedule_makespan)) / Fraction(schedule_makespan))
