from __future__ import annotations

import math

import pytest

from transferplan import (
    ExecutionStuckError,
    Link,
    Network,
    Site,
    build_problem,
    compare_makespans,
    optimal_schedule,
    simulate_execution,
)
from transferplan.planner import Plan, Route

from conftest import unit_request


def plan_of(**routes) -> Plan:
    return Plan(tuple(Route(d, "S", links) for d, links in routes.items()))


def test_split_plan(d1):
    res = simulate_execution(d1, plan_of(f1=("e1", "e2"), f2=("e3",)), unit_request(2))
    assert res.makespan == 5
    assert {(r.demand, r.link, r.start, r.end) for r in res.transfers} == {
        ("f1", "e1", 0, 2),
        ("f1", "e2", 2, 4),
        ("f2", "e3", 0, 5),
    }


def test_both_via_m(d1):
    plan = plan_of(f1=("e1", "e2"), f2=("e1", "e2"))
    res = simulate_execution(d1, plan, unit_request(2), max_streams=1)
    assert res.makespan == 6
    assert res.makespan >= optimal_schedule(build_problem(d1, plan, unit_request(2))).makespan
    assert res.peak_streams == {"e1": 1, "e2": 1}


def test_single_link(d1):
    assert simulate_execution(d1, plan_of(f=("e3",))).makespan == 5


def test_parallel_streams(d1):
    plan = plan_of(f1=("e3",), f2=("e3",), f3=("e3",))
    assert simulate_execution(d1, plan, max_streams=1).makespan == 15
    wide = simulate_execution(d1, plan, max_streams=2)
    assert wide.makespan == 10 and wide.peak_streams["e3"] == 2


def test_link_stream_caps_used_by_default():
    net = Network((Site("S"), Site("T")), (Link("l", "S", "T", 4, max_streams=3),))
    plan = plan_of(a=("l",), b=("l",), c=("l",))
    assert simulate_execution(net, plan).makespan == 4


def test_unknown_link(d1):
    with pytest.raises(ExecutionStuckError):
        simulate_execution(d1, plan_of(f=("nope",)))


@pytest.mark.parametrize(
    "sched,exe,gap", [(5, 5, 0.0), (100, 103, 0.03), (4, 5, 0.25), (0, 0, 0.0), (0, 3, math.inf)]
)
def test_compare_makespans(sched, exe, gap):
    assert compare_makespans(sched, exe) == gap
