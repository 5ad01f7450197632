"""Brute-force ground truth for small instances.

Nothing here uses the planner or the scheduler: paths are enumerated by a
plain DFS and schedules by trying every ordering of the tasks on each link
(or, with storage limits, every integer start time). Only meant for
instances with a handful of sites, links and demands.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Sequence

from .netmodel import Network, Request, NormalizedRequest, UnroutableDemandError, exact

MAX_SITES = 6
MAX_LINKS = 10
MAX_DEMANDS = 4


class OracleTooLarge(ValueError):
    def __init__(self, what: str):
        super().__init__(f"oracle instance too large ({what})")


def simple_paths(
    network: Network,
    origins: Iterable[str],
    destination: str,
    avoid_other_origins: bool = False,
) -> list[tuple[str, tuple[str, ...]]]:
    """All simple directed paths from any origin to ``destination``.

    Returns ``(origin, link ids)`` pairs. With ``avoid_other_origins`` a path
    may not pass through a second origin.
    """
    origins = set(origins)
    found = []

    def walk(origin, node, visited, links):
        if node == destination:
            found.append((origin, tuple(links)))
            return
        for link in sorted(network.OUT(node), key=lambda l: l.id):
            nxt = link.target
            if nxt in visited:
                continue
            if avoid_other_origins and nxt in origins:
                continue
            visited.add(nxt)
            links.append(link.id)
            walk(origin, nxt, visited, links)
            links.pop()
            visited.discard(nxt)

    for o in sorted(origins):
        if o in network.site_index and o != destination:
            walk(o, o, {o}, [])
    return found


def _chains_for(network: Network, combo: Sequence[tuple[Fraction, tuple[str, ...]]]):
    durations = []
    resources = []
    pred = []
    for size, links in combo:
        prev = None
        for lid in links:
            durations.append(exact(Fraction(size) * Fraction(network.link(lid).weight)))
            resources.append(lid)
            pred.append(prev)
            prev = len(durations) - 1
    return durations, resources, pred


def _longest_path(n, durations, edges):
    """Earliest starts in the DAG ``edges`` (i -> j means j after i); None if cyclic."""
    indeg = [0] * n
    succ = [[] for _ in range(n)]
    for a, b in edges:
        succ[a].append(b)
        indeg[b] += 1
    start = [0] * n
    queue = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    while queue:
        i = queue.pop()
        seen += 1
        end = start[i] + durations[i]
        for j in succ[i]:
            if end > start[j]:
                start[j] = end
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    if seen < n:
        return None
    return max((start[i] + durations[i] for i in range(n)), default=0)


def schedule_optimum(durations, resources, pred, upper=None):
    """Minimal makespan over all per-resource task orderings (unbounded storage).

    Orderings are fixed one resource at a time and partial orderings whose
    longest path already reaches ``upper`` are skipped; every complete
    ordering that could improve is still evaluated.
    """
    n = len(durations)
    base = [(pred[i], i) for i in range(n) if pred[i] is not None]
    groups: dict[str, list[int]] = {}
    for i, r in enumerate(resources):
        groups.setdefault(r, []).append(i)
    shared = [g for g in groups.values() if len(g) > 1]
    best = [upper]

    def rec(k, edges):
        value = _longest_path(n, durations, edges)
        if value is None or (best[0] is not None and value >= best[0]):
            return
        if k == len(shared):
            best[0] = value
            return
        for perm in itertools.permutations(shared[k]):
            rec(k + 1, edges + [(perm[j], perm[j + 1]) for j in range(len(perm) - 1)])

    rec(0, base)
    return best[0]


def schedule_optimum_timeindexed(durations, resources, pred, occupancies, capacities, upper):
    """Minimal makespan by enumerating integer start times (storage-aware).

    ``occupancies`` are ``(site, incoming task, outgoing task, usage)``.
    Needs integral durations; ``upper`` bounds the horizon.
    """
    n = len(durations)
    if any(Fraction(d).denominator != 1 for d in durations):
        raise ValueError("time-indexed oracle needs integral durations")
    succ_tail = [0] * n
    for i in reversed(range(n)):
        for j in range(n):
            if pred[j] == i:
                succ_tail[i] = durations[j] + succ_tail[j]
    order = list(range(n))  # chain order: predecessors have smaller indices
    starts = [None] * n
    best = [upper]

    def ok_storage():
        for site, cap in capacities.items():
            occ = [o for o in occupancies if o[0] == site]
            for _, inc, _, _ in occ:
                t = starts[inc]
                used = sum(
                    u for _, a, b, u in occ if starts[a] <= t < starts[b] + durations[b]
                )
                if used > cap:
                    return False
        return True

    def rec(k):
        if k == n:
            value = max(starts[i] + durations[i] for i in range(n))
            if value < best[0] and ok_storage():
                best[0] = value
            return
        i = order[k]
        lo = 0 if pred[i] is None else starts[pred[i]] + durations[pred[i]]
        for s in range(int(lo), int(best[0]) - durations[i] - succ_tail[i]):
            if s + durations[i] + succ_tail[i] >= best[0]:
                break
            if any(
                resources[j] == resources[i]
                and starts[j] < s + durations[i]
                and s < starts[j] + durations[j]
                for j in order[:k]
            ):
                continue
            starts[i] = s
            rec(k + 1)
        starts[i] = None

    rec(0)
    return best[0]


def oracle_solve(network: Network, request: Request | NormalizedRequest):
    """Optimal makespan by exhaustive search over paths and orderings."""
    if len(network.sites) > MAX_SITES:
        raise OracleTooLarge(f"{len(network.sites)} sites")
    if len(network.links) > MAX_LINKS:
        raise OracleTooLarge(f"{len(network.links)} links")
    if len(request.demands) > MAX_DEMANDS:
        raise OracleTooLarge(f"{len(request.demands)} demands")
    dest = request.destination
    options = []
    for d in request.demands:
        if dest in d.origins:
            continue
        paths = simple_paths(network, d.origins, dest)
        if not paths:
            raise UnroutableDemandError(d.id)
        options.append([(d.size, links) for _, links in paths])
    if not options:
        return 0
    capped = {s.id: s.storage_capacity for s in network.sites if s.storage_capacity is not None}
    best = None
    seen = set()
    for combo in itertools.product(*options):
        key = tuple(sorted(combo))
        if key in seen:
            continue
        seen.add(key)
        durations, resources, pred = _chains_for(network, combo)
        # cheap relaxation: longest chain, busiest link
        load: dict[str, object] = {}
        for i, r in enumerate(resources):
            load[r] = load.get(r, 0) + durations[i]
        chain = {}
        for i in range(len(durations)):
            chain[i] = durations[i] + (chain[pred[i]] if pred[i] is not None else 0)
        if best is not None and max(max(load.values()), max(chain.values())) >= best:
            continue
        occupancies = []
        for i, p in enumerate(pred):
            if p is None:
                continue
            site = network.link(resources[i]).source
            if site in capped:
                occupancies.append((site, p, i, combo_size(combo, i, pred)))
        if occupancies:
            horizon = best if best is not None else sum(durations) + 1
            value = schedule_optimum_timeindexed(
                durations, resources, pred, occupancies, {s: capped[s] for s, *_ in occupancies}, horizon
            )
            if value == horizon:
                value = None
        else:
            value = schedule_optimum(durations, resources, pred, best)
        if value is not None and (best is None or value < best):
            best = value
    return exact(best)


def combo_size(combo, task_index, pred):
    """Size of the demand that owns ``task_index`` in a combo's task list."""
    count = 0
    for size, links in combo:
        if task_index < count + len(links):
            return size
        count += len(links)
    raise IndexError(task_index)
