from __future__ import annotations

import pytest

from transferplan import (
    Demand,
    Heuristic,
    InfeasibleError,
    Link,
    Network,
    Request,
    Site,
    SolveOptions,
    Status,
    ValueOrder,
    check_plan,
    greedy_plan,
    makespan_lower_bound,
    oracle_solve,
    solve,
    trace_table,
    validate_request,
    verify_schedule,
)
from transferplan.netmodel import NormalizedRequest
from transferplan.oracle import OracleTooLarge

from conftest import d1_network, unit_request

ALL_OPTIONS = [
    SolveOptions(heuristic=h, value_order=v, symmetry_breaking=sym, restart=rs)
    for h in (Heuristic.MIN_PATH, Heuristic.FASTEST_LINK)
    for v in ValueOrder
    for sym in (False, True)
    for rs in (False, True)
]


def check_solution(network, sol):
    assert check_plan(network, sol.request, sol.plan) == []
    assert verify_schedule(sol.problem, sol.schedule) == []
    makespans = [p.makespan for p in sol.trace]
    assert all(a > b for a, b in zip(makespans, makespans[1:]))
    assert makespans[-1] == sol.makespan == sol.schedule.makespan


class TestSolveD1:
    @pytest.mark.parametrize("options", ALL_OPTIONS)
    @pytest.mark.parametrize("n,expected", [(1, 4), (2, 5), (3, 6), (4, 8)])
    def test_makespans(self, d1, n, expected, options):
        sol = solve(d1, unit_request(n), options)
        assert sol.makespan == expected
        assert sol.status is Status.OPTIMAL
        check_solution(d1, sol)

    def test_empty_request(self, d1):
        req = Request("T", (Demand("f", 1, frozenset("T")),))
        sol = solve(d1, req)
        assert sol.makespan == 0 and sol.plan.routes == () and sol.status is Status.OPTIMAL
        assert [p.makespan for p in sol.trace] == [0]

    def test_no_feasible_plan(self):
        net = Network((Site("S"), Site("T"), Site("U")), (Link("a", "S", "U", 1),))
        req = NormalizedRequest("T", (Demand("f", 1, frozenset("S")),))
        with pytest.raises(InfeasibleError, match="no feasible plan"):
            solve(net, req)

    def test_plan_limit_truncates(self, d1):
        sol = solve(d1, unit_request(3), SolveOptions(plan_limit=1, greedy_incumbent=False, lower_bound_stop=False))
        assert sol.status is Status.TIME_LIMIT
        check_solution(d1, sol)

    def test_rejects_nonpositive_time_limit(self):
        with pytest.raises(ValueError):
            SolveOptions(time_limit=0)

    def test_storage_raises_optimum(self):
        free = solve(d1_network(), unit_request(2, origins=("S",)), SolveOptions(heuristic="minpath"))
        # with M capped at 1 and the direct link too slow, queueing through M costs more
        net = Network(
            (Site("S"), Site("M", 1), Site("T")),
            (Link("e1", "S", "M", 2), Link("e2", "M", "T", 2), Link("e3", "S", "T", 50)),
        )
        capped = solve(net, unit_request(2))
        assert free.makespan == 5 and capped.makespan == 8
        check_solution(net, capped)


class TestOracle:
    def test_d1(self, d1):
        assert oracle_solve(d1, unit_request(1)) == 4
        assert oracle_solve(d1, unit_request(2)) == 5

    def test_satisfied_only(self, d1):
        assert oracle_solve(d1, Request("T", (Demand("f", 1, frozenset("T")),))) == 0

    def test_guard(self):
        sites = tuple(Site(f"s{i}") for i in range(7))
        with pytest.raises(OracleTooLarge, match="oracle instance too large"):
            oracle_solve(Network(sites, ()), Request("s0", ()))


class TestHelpers:
    def test_lower_bound_d1(self, d1):
        # one file: the shortest path alone; two files: the direct link and
        # the link into T from M can each deliver one by 5 (M: 2 + 2 = 4)
        assert makespan_lower_bound(d1, validate_request(d1, unit_request(1))) == 4
        assert makespan_lower_bound(d1, validate_request(d1, unit_request(2))) == 5

    def test_lower_bound_mixed_sizes(self, d1):
        req = validate_request(
            d1, Request("T", (Demand("a", 1, frozenset("S")), Demand("b", 2, frozenset("S"))))
        )
        lb = makespan_lower_bound(d1, req)
        assert lb <= oracle_solve(d1, req)

    def test_greedy_plan_is_valid(self, d1):
        req = validate_request(d1, unit_request(3))
        plan = greedy_plan(d1, req)
        assert check_plan(d1, req, plan) == []
        # f1 via M arrives at 4; f2 direct at 5 beats M at 6; f3 via M at 6 beats direct at 10
        assert sorted(r.links for r in plan.routes) == [("e1", "e2"), ("e1", "e2"), ("e3",)]


def test_trace_table():
    from transferplan.optimizer import TracePoint

    text = trace_table([TracePoint(1.5, 1, 9), TracePoint(20.25, 3, 7)])
    assert text == "ms,plans,makespan\n1.500,1,9\n20.250,3,7\n"
    assert trace_table([TracePoint(1.5, 1, 9)], with_time=False) == "plans,makespan\n1,9\n"


def test_deterministic_without_time_limit(d1):
    a = solve(d1, unit_request(4))
    b = solve(d1, unit_request(4))
    assert a.plan == b.plan and a.schedule == b.schedule
    assert trace_table(a.trace, with_time=False) == trace_table(b.trace, with_time=False)
