"""Link-based routing model and the planning search.

Every (demand, link) pair owns a 0/1 routing variable (is the demand sent
over the link?) and a lower bound on the time its transfer over that link
can start. Propagation keeps the routing variables consistent with
single-path flow from one origin to the destination, pushes start bounds
along candidate paths, and, once an incumbent makespan is known, removes
routings that cannot lead to a strictly shorter schedule.

The search is a plain depth-first enumeration with chronological
backtracking. It is resumable: after a plan is returned the state keeps its
decision stack, so the next call continues where the last one stopped,
honouring any bound tightened in between.
"""

from __future__ import annotations

import enum
import heapq
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Mapping

from .netmodel import (
    INF,
    Network,
    NetworkConfigError,
    NormalizedRequest,
    distances_to,
    exact,
    transfer_duration,
)

logger = logging.getLogger(__name__)

# routing-variable domains as bit sets: bit 0 -> value 0 allowed, bit 1 -> value 1
ZERO = 1
ONE = 2
BOTH = 3

_KIND_DOM = 0
_KIND_LOW = 1
_KIND_LOAD = 2


class InfeasibleError(ValueError):
    """Raised when no routing exists at all (independent of any bound)."""


class Heuristic(str, enum.Enum):
    MIN_PATH = "minpath"
    FASTEST_LINK = "fastestlink"
    LEXICOGRAPHIC = "lex"


class ValueOrder(str, enum.Enum):
    INCREASING = "inc"
    DECREASING = "dec"


@dataclass(frozen=True)
class Route:
    demand: str
    origin: str
    links: tuple[str, ...]


@dataclass(frozen=True)
class Plan:
    routes: tuple[Route, ...]

    def route(self, demand_id: str) -> Route:
        for r in self.routes:
            if r.demand == demand_id:
                return r
        raise KeyError(demand_id)

    def as_dict(self) -> dict[str, tuple[str, ...]]:
        return {r.demand: r.links for r in self.routes}


def plan_to_dict(plan: Plan) -> dict[str, Any]:
    return {
        "routes": [
            {"demand": r.demand, "origin": r.origin, "links": list(r.links)}
            for r in sorted(plan.routes, key=lambda r: r.demand)
        ]
    }


def dump_plan(plan: Plan) -> str:
    return json.dumps(plan_to_dict(plan), indent=2) + "\n"


def load_plan(document: str | bytes | Mapping) -> Plan:
    data = document if isinstance(document, Mapping) else None
    if data is None:
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise NetworkConfigError(f"parse failure: {exc}") from exc
    routes = data.get("routes") if isinstance(data, Mapping) else None
    if not isinstance(routes, list):
        raise NetworkConfigError("plan: missing key 'routes'")
    out = []
    for i, raw in enumerate(routes):
        try:
            out.append(Route(str(raw["demand"]), str(raw["origin"]), tuple(str(x) for x in raw["links"])))
        except (KeyError, TypeError) as exc:
            raise NetworkConfigError(f"routes[{i}]: malformed route") from exc
    return Plan(tuple(out))


def read_plan(path: str | Path) -> Plan:
    return load_plan(Path(path).read_text(encoding="utf-8"))


def check_plan(network: Network, request: NormalizedRequest, plan: Plan) -> list[str]:
    """Return every way ``plan`` fails to be a set of simple origin-to-destination paths."""
    problems = []
    wanted = {d.id: d for d in request.demands}
    seen = set()
    for route in plan.routes:
        demand = wanted.get(route.demand)
        if demand is None:
            problems.append(f"{route.demand}: not part of the request")
            continue
        seen.add(route.demand)
        if route.origin not in demand.origins:
            problems.append(f"{route.demand}: {route.origin} is not an origin")
        if not route.links:
            problems.append(f"{route.demand}: empty path")
            continue
        node = route.origin
        visited = [node]
        for lid in route.links:
            link = network.link_index.get(lid)
            if link is None:
                problems.append(f"{route.demand}: unknown link {lid}")
                break
            if link.source != node:
                problems.append(f"{route.demand}: link {lid} does not continue the path at {node}")
                break
            node = link.target
            if node in visited:
                problems.append(f"{route.demand}: site {node} repeated")
            visited.append(node)
        if node != request.destination:
            problems.append(f"{route.demand}: path ends at {node}, not {request.destination}")
    for did in wanted:
        if did not in seen:
            problems.append(f"{did}: no route")
    return problems


class _Frame:
    __slots__ = ("d", "e", "remaining", "mark", "version")

    def __init__(self, d: int, e: int, remaining: list[int], mark: int, version: int):
        self.d = d
        self.e = e
        self.remaining = remaining
        self.mark = mark
        self.version = version


class PlannerState:
    """Domains, start bounds and search stack for one planning run."""

    def __init__(
        self,
        network: Network,
        request: NormalizedRequest,
        makespan_bound: float | int = INF,
        heuristic: Heuristic = Heuristic.MIN_PATH,
        value_order: ValueOrder = ValueOrder.DECREASING,
        symmetry_breaking: bool = False,
    ):
        self.network = network
        self.request = request
        self.heuristic = Heuristic(heuristic)
        self.value_order = ValueOrder(value_order)
        self._bound = makespan_bound
        self._bound_version = 0
        self._state_version = 0

        self.demands = list(request.demands)
        self.links = sorted(network.links, key=lambda link: link.id)
        nodes = sorted(s.id for s in network.sites)
        node_idx = {n: i for i, n in enumerate(nodes)}
        self.nodes = nodes
        self._demand_idx = {d.id: i for i, d in enumerate(self.demands)}
        self._link_idx = {link.id: i for i, link in enumerate(self.links)}
        self.dest = node_idx[request.destination]

        E = len(self.links)
        self.tail = [node_idx[link.source] for link in self.links]
        self.head = [node_idx[link.target] for link in self.links]
        self.out = [[] for _ in nodes]
        self.inn = [[] for _ in nodes]
        for e in range(E):
            self.out[self.tail[e]].append(e)
            self.inn[self.head[e]].append(e)

        dist = distances_to(network, request.destination)
        self.sp = [dist[link.target] for link in self.links]

        self.size = [d.size for d in self.demands]
        self.is_orig = []
        self.dur = []
        self.spd = []
        self._sums = []
        for d in self.demands:
            orig = [False] * len(nodes)
            for o in d.origins:
                if o in node_idx:
                    orig[node_idx[o]] = True
            self.is_orig.append(orig)
            self.dur.append([transfer_duration(d, link) for link in self.links])
            self.spd.append([INF if s == INF else exact(s * d.size) for s in self.sp])
            groups: list[tuple] = []
            groups.append((0, [e for e in range(E) if orig[self.tail[e]]]))
            groups.append((0, list(self.inn[self.dest])))
            for n in range(len(nodes)):
                if not orig[n] and n != self.dest:
                    groups.append((1, self.inn[n], self.out[n]))
            self._sums.append(groups)

        D = len(self.demands)
        # demands with equal origins and size are interchangeable; optionally
        # order their first links so only one permutation is explored
        self._sym_prev: list[int | None] = [None] * D
        self._sym_next: list[int | None] = [None] * D
        if symmetry_breaking:
            last: dict[tuple, int] = {}
            for i, dm in enumerate(self.demands):
                key = (dm.origins, dm.size)
                if key in last:
                    self._sym_prev[i] = last[key]
                    self._sym_next[last[key]] = i
                last[key] = i
        self.symmetry_breaking = symmetry_breaking
        self.dom = [[BOTH] * E for _ in range(D)]
        self.low = [[0] * E for _ in range(D)]
        self.load = [0] * E
        self._trail: list[tuple] = []
        self._dirty_d: set[int] = set()
        self._dirty_e: set[int] = set()
        self._stack: list[_Frame] = []
        self._leaf = False
        self.exhausted = False
        self.timed_out = False
        self.nodes_visited = 0
        self.failures = 0

        # structural zeros: entering an origin, leaving the destination,
        # or heading into a site that cannot reach the destination
        for d in range(D):
            orig = self.is_orig[d]
            for e in range(E):
                if orig[self.head[e]] or self.tail[e] == self.dest or self.sp[e] == INF:
                    self.dom[d][e] = ZERO

        ok = self.propagate(full=True)
        if not ok:
            if makespan_bound == INF:
                raise InfeasibleError("no feasible routing")
            self.exhausted = True
        self._trail.clear()  # root deductions are permanent

        if makespan_bound != INF:
            self.horizon = makespan_bound
        else:
            self.horizon = exact(
                sum(self.dur[d][e] for d in range(D) for e in range(E) if self.dom[d][e] & ONE)
            )

    # -- bound -------------------------------------------------------------

    @property
    def makespan_bound(self):
        return self._bound

    @makespan_bound.setter
    def makespan_bound(self, value) -> None:
        if value > self._bound:
            raise ValueError("makespan bound may only be tightened")
        if value < self._bound:
            self._bound = value
            self._bound_version += 1

    # -- inspection ----------------------------------------------------------

    def _var(self, demand_id: str, link_id: str) -> tuple[int, int]:
        return self._demand_idx[demand_id], self._link_idx[link_id]

    def routing_domain(self, demand_id: str, link_id: str) -> frozenset[int]:
        d, e = self._var(demand_id, link_id)
        bits = self.dom[d][e]
        return frozenset(v for v in (0, 1) if bits & (1 << v))

    def start_lower(self, demand_id: str, link_id: str):
        d, e = self._var(demand_id, link_id)
        return self.low[d][e]

    def unassigned(self) -> Iterator[tuple[str, str]]:
        for d, row in enumerate(self.dom):
            for e, bits in enumerate(row):
                if bits == BOTH:
                    yield self.demands[d].id, self.links[e].id

    # -- trail ---------------------------------------------------------------

    def mark(self) -> int:
        return len(self._trail)

    def undo(self, mark: int) -> None:
        trail = self._trail
        dom, low, load = self.dom, self.low, self.load
        while len(trail) > mark:
            kind, a, b, old = trail.pop()
            if kind == _KIND_DOM:
                dom[a][b] = old
            elif kind == _KIND_LOW:
                low[a][b] = old
            else:
                load[a] = old
        self._dirty_d.clear()
        self._dirty_e.clear()

    def _set_dom(self, d: int, e: int, bits: int) -> None:
        old = self.dom[d][e]
        self._trail.append((_KIND_DOM, d, e, old))
        self.dom[d][e] = bits
        if bits == ONE:
            self._trail.append((_KIND_LOAD, e, None, self.load[e]))
            self.load[e] = self.load[e] + self.dur[d][e]
        self._dirty_d.add(d)
        self._dirty_e.add(e)

    def assign(self, demand_id: str, link_id: str, value: int) -> bool:
        """Fix one routing variable; returns False if the value is not in its domain.

        Call :meth:`propagate` afterwards.
        """
        d, e = self._var(demand_id, link_id)
        return self._assign(d, e, value)

    def _assign(self, d: int, e: int, value: int) -> bool:
        bits = ONE if value else ZERO
        cur = self.dom[d][e]
        if not cur & bits:
            return False
        if cur != bits:
            self._set_dom(d, e, bits)
        return True

    # -- propagation ---------------------------------------------------------

    def propagate(self, full: bool = False) -> bool:
        """Run all rules to a fixpoint. Returns False on a wipe-out."""
        D = len(self.demands)
        if full:
            self._dirty_d.update(range(D))
            self._dirty_e.update(range(len(self.links)))
        dirty_d, dirty_e = self._dirty_d, self._dirty_e
        finite = self._bound != INF
        while dirty_d or dirty_e:
            if dirty_d:
                d = dirty_d.pop()
                if not self._propagate_demand(d):
                    self._fail()
                    return False
            else:
                e = dirty_e.pop()
                if finite and not self._cut(e):
                    self._fail()
                    return False
        return True

    def _fail(self) -> None:
        self._dirty_d.clear()
        self._dirty_e.clear()
        self.failures += 1

    def _propagate_demand(self, d: int) -> bool:
        while True:
            changed = self._sum_rules(d)
            if changed is None:
                return False
            res = self._chain(d)
            if res is None:
                return False
            res2 = self._bound_rule(d)
            if res2 is None:
                return False
            if self.symmetry_breaking:
                res3 = self._sym_rule(d)
                if res3 is None:
                    return False
                res2 = res2 or res3
            if not (res or res2):
                self._dirty_d.discard(d)
                return True

    def _sum_rules(self, d: int):
        """Degree constraints: one edge out of the origins, one into the
        destination, flow conservation (at most one in/out) elsewhere."""
        dom = self.dom[d]
        any_change = False
        changed = True
        while changed:
            changed = False
            for group in self._sums[d]:
                if group[0] == 0:
                    links = group[1]
                    ones = free = 0
                    last = -1
                    for e in links:
                        b = dom[e]
                        if b == ONE:
                            ones += 1
                        elif b == BOTH:
                            free += 1
                            last = e
                    if ones > 1:
                        return None
                    if ones == 1:
                        if free:
                            for e in links:
                                if dom[e] == BOTH:
                                    self._set_dom(d, e, ZERO)
                            changed = True
                    elif free == 0:
                        return None
                    elif free == 1:
                        self._set_dom(d, last, ONE)
                        changed = True
                else:
                    ins, outs = group[1], group[2]
                    in_ones = in_free = out_ones = out_free = 0
                    for e in ins:
                        b = dom[e]
                        if b == ONE:
                            in_ones += 1
                        elif b == BOTH:
                            in_free += 1
                    for e in outs:
                        b = dom[e]
                        if b == ONE:
                            out_ones += 1
                        elif b == BOTH:
                            out_free += 1
                    if in_ones > 1 or out_ones > 1:
                        return None
                    if (in_ones and in_free) or (out_ones and out_free):
                        for e in (*ins, *outs) if in_ones and out_ones else (ins if in_ones else outs):
                            if dom[e] == BOTH:
                                self._set_dom(d, e, ZERO)
                        changed = True
                        continue
                    # in-degree must equal out-degree, both in {0, 1}
                    for own_ones, own_free, other, other_ones, other_free in (
                        (in_ones, in_free, outs, out_ones, out_free),
                        (out_ones, out_free, ins, in_ones, in_free),
                    ):
                        if own_ones:
                            if not other_ones:
                                if not other_free:
                                    return None
                                if other_free == 1:
                                    for e in other:
                                        if dom[e] == BOTH:
                                            self._set_dom(d, e, ONE)
                                    changed = True
                        elif not own_free:
                            if other_ones:
                                return None
                            if other_free:
                                for e in other:
                                    if dom[e] == BOTH:
                                        self._set_dom(d, e, ZERO)
                                changed = True
                        if changed:
                            break
            any_change |= changed
        return any_change

    def _sym_rule(self, d: int):
        """First link of a demand <= first link of its next identical twin."""
        outs = self._sums[d][0][1]
        changed = False
        for a, b in ((self._sym_prev[d], d), (d, self._sym_next[d])):
            if a is None or b is None:
                continue
            dom_a, dom_b = self.dom[a], self.dom[b]
            lo = next((e for e in outs if dom_a[e] & ONE), None)
            hi = next((e for e in reversed(outs) if dom_b[e] & ONE), None)
            if lo is None or hi is None or lo > hi:
                return None
            for e in outs:
                if e < lo and dom_b[e] & ONE:
                    if dom_b[e] == ONE:
                        return None
                    self._set_dom(b, e, ZERO)
                    changed = True
                elif e > hi and dom_a[e] & ONE:
                    if dom_a[e] == ONE:
                        return None
                    self._set_dom(a, e, ZERO)
                    changed = True
        return changed

    def _chain(self, d: int):
        """Earliest-start bounds along candidate links (least fixpoint).

        A non-origin link can start no earlier than the cheapest candidate
        arrival at its tail. Links never reached from an origin cannot carry
        the demand, which also removes detached cycles.
        """
        dom, low, dur = self.dom[d], self.low[d], self.dur[d]
        orig = self.is_orig[d]
        tail, head, out = self.tail, self.head, self.out
        best: dict[int, object] = {}
        heap = []
        for e, bits in enumerate(dom):
            if bits & ONE and orig[tail[e]]:
                heap.append((low[e], e))
        heapq.heapify(heap)
        final: dict[int, object] = {}
        while heap:
            val, e = heapq.heappop(heap)
            if e in final:
                continue
            final[e] = val
            arrive = val + dur[e]
            h = head[e]
            if orig[h]:
                continue
            for g in out[h]:
                if g in final or not dom[g] & ONE:
                    continue
                cand = arrive if arrive > low[g] else low[g]
                prev = best.get(g)
                if prev is None or cand < prev:
                    best[g] = cand
                    heapq.heappush(heap, (cand, g))
        changed = False
        for e, bits in enumerate(dom):
            if not bits & ONE:
                continue
            if e not in final:
                if bits == ONE:
                    return None
                self._set_dom(d, e, ZERO)
                changed = True
            else:
                v = final[e]
                if v > low[e]:
                    self._trail.append((_KIND_LOW, d, e, low[e]))
                    low[e] = v
                    self._dirty_e.add(e)
        return changed

    def _bound_rule(self, d: int):
        """Single-demand form of the cut: the demand's own earliest finish on
        a link plus the cheapest way on must stay below the bound."""
        bound = self._bound
        if bound == INF:
            return False
        dom, low, dur, spd = self.dom[d], self.low[d], self.dur[d], self.spd[d]
        changed = False
        for e, bits in enumerate(dom):
            if bits & ONE and low[e] + dur[e] + spd[e] >= bound:
                if bits == ONE:
                    return None
                self._set_dom(d, e, ZERO)
                changed = True
        return changed

    def _cut(self, e: int) -> bool:
        """Per-link makespan cut.

        Everything routed over ``e`` runs there one at a time, starting no
        earlier than the smallest candidate start bound; after the last one
        finishes, its file still has at least the shortest path to travel.
        """
        dom, low, dur, size = self.dom, self.low, self.dur, self.size
        bound = self._bound
        sp = self.sp[e]
        load = self.load[e]
        while True:
            min_p = None
            min_size = None
            cands = []
            for d in range(len(dom)):
                bits = dom[d][e]
                if bits & ONE:
                    p = low[d][e]
                    if min_p is None or p < min_p:
                        min_p = p
                    s = size[d]
                    if min_size is None or s < min_size:
                        min_size = s
                    if bits == BOTH:
                        cands.append(d)
            if min_p is None:
                return True
            base = min_p + load + sp * min_size
            if load and base >= bound:
                return False
            removed = False
            for d in cands:
                if base + dur[d][e] >= bound:
                    self._set_dom(d, e, ZERO)
                    removed = True
            if not removed:
                return True

    # -- search ----------------------------------------------------------------

    def select_variable(self, heuristic: Heuristic | None = None) -> tuple[str, str] | None:
        var = self._select(Heuristic(heuristic) if heuristic else self.heuristic)
        if var is None:
            return None
        return self.demands[var[0]].id, self.links[var[1]].id

    def _select(self, heuristic: Heuristic):
        best = None
        best_score = None
        dom = self.dom
        if heuristic is Heuristic.LEXICOGRAPHIC:
            for d, row in enumerate(dom):
                for e, bits in enumerate(row):
                    if bits == BOTH:
                        return d, e
            return None
        minpath = heuristic is Heuristic.MIN_PATH
        for d, row in enumerate(dom):
            dur = self.dur[d]
            if minpath:
                low, spd = self.low[d], self.spd[d]
            for e, bits in enumerate(row):
                if bits != BOTH:
                    continue
                score = low[e] + dur[e] + spd[e] if minpath else dur[e]
                if best_score is None or score < best_score:
                    best_score = score
                    best = (d, e)
        return best

    def next_plan(self, value_order: ValueOrder | None = None, deadline: float | None = None) -> Plan | None:
        """Return the next plan under the current bound, or None when exhausted.

        ``deadline`` is a ``time.monotonic()`` instant; when it passes the
        search stops, ``timed_out`` is set and None is returned.
        """
        if value_order is not None:
            self.value_order = ValueOrder(value_order)
        if self.exhausted or self.timed_out:
            return None
        self._deadline = deadline
        if self._leaf:
            self._leaf = False
            if not self._backtrack():
                return None
        elif self._state_version != self._bound_version and not self._stack:
            # bound tightened before the first decision: recheck the root
            if not self.propagate(full=True):
                self.exhausted = True
                return None
            self._state_version = self._bound_version
        return self._descend()

    def _out_of_time(self) -> bool:
        if self._deadline is not None and self.nodes_visited % 64 == 0 and time.monotonic() >= self._deadline:
            self.timed_out = True
            return True
        return False

    def _descend(self) -> Plan | None:
        first, second = (1, 0) if self.value_order is ValueOrder.DECREASING else (0, 1)
        debug = logger.isEnabledFor(logging.DEBUG)
        while True:
            if self._state_version != self._bound_version:
                ok = self.propagate(full=True)
                if ok:
                    self._state_version = self._bound_version
                elif not self._backtrack():
                    return None
                continue
            var = self._select(self.heuristic)
            if var is None:
                self._leaf = True
                return self.extract_paths()
            d, e = var
            self._stack.append(_Frame(d, e, [second], len(self._trail), self._state_version))
            if debug:
                logger.debug(
                    "depth=%d var=(%s,%s) value=%d bound=%s",
                    len(self._stack), self.demands[d].id, self.links[e].id, first, self._bound,
                )
            if not self._try(d, e, first):
                if not self._backtrack():
                    return None

    def _try(self, d: int, e: int, value: int) -> bool:
        self.nodes_visited += 1
        full = self._state_version != self._bound_version
        self._assign(d, e, value)
        ok = self.propagate(full=full)
        if ok:
            self._state_version = self._bound_version
        return ok

    def _backtrack(self) -> bool:
        stack = self._stack
        while stack:
            if self._out_of_time():
                return False
            frame = stack[-1]
            self.undo(frame.mark)
            self._state_version = frame.version
            if frame.remaining:
                value = frame.remaining.pop()
                if self._try(frame.d, frame.e, value):
                    return True
            else:
                stack.pop()
        self.exhausted = True
        return False

    def extract_paths(self) -> Plan:
        routes = []
        for d, demand in enumerate(self.demands):
            row = self.dom[d]
            if any(bits == BOTH for bits in row):
                raise ValueError(f"demand {demand.id} is not fully routed")
            ones = {e for e, bits in enumerate(row) if bits == ONE}
            starts = [e for e in ones if self.is_orig[d][self.tail[e]]]
            if len(starts) != 1:
                raise AssertionError(f"loop detected: demand {demand.id} leaves {len(starts)} origins")
            path = [starts[0]]
            seen_nodes = {self.tail[starts[0]]}
            node = self.head[starts[0]]
            while node != self.dest:
                if node in seen_nodes:
                    raise AssertionError(f"loop detected: demand {demand.id} revisits {self.nodes[node]}")
                seen_nodes.add(node)
                nxt = [e for e in self.out[node] if e in ones]
                if len(nxt) != 1:
                    raise AssertionError(f"loop detected: demand {demand.id} is stuck at {self.nodes[node]}")
                path.append(nxt[0])
                node = self.head[nxt[0]]
            if set(path) != ones:
                raise AssertionError(f"loop detected: demand {demand.id} has links off its path")
            routes.append(
                Route(demand.id, self.nodes[self.tail[path[0]]], tuple(self.links[e].id for e in path))
            )
        return Plan(tuple(routes))


def init_state(
    network: Network,
    request: NormalizedRequest,
    makespan_bound=INF,
    heuristic: Heuristic = Heuristic.MIN_PATH,
    value_order: ValueOrder = ValueOrder.DECREASING,
    symmetry_breaking: bool = False,
) -> PlannerState:
    return PlannerState(network, request, makespan_bound, heuristic, value_order, symmetry_breaking)


def propagate(state: PlannerState) -> bool:
    return state.propagate()


def select_variable(state: PlannerState, heuristic: Heuristic) -> tuple[str, str] | None:
    return state.select_variable(heuristic)


def next_plan(state: PlannerState, value_order: ValueOrder | None = None) -> Plan | None:
    return state.next_plan(value_order)


def extract_paths(state: PlannerState) -> Plan:
    return state.extract_paths()
