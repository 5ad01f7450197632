"""Property-based checks against independent brute force."""

from __future__ import annotations

import random
from fractions import Fraction

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from transferplan import (
    Heuristic,
    PlannerState,
    SharedGroup,
    SolveOptions,
    UnroutableDemandError,
    ValueOrder,
    apply_shared_groups,
    build_problem,
    check_plan,
    greedy_schedule,
    makespan_lower_bound,
    optimal_schedule,
    oracle_solve,
    solve,
    validate_request,
    verify_schedule,
)
from transferplan.netmodel import distances_to, shortest_path_table
from transferplan.oracle import schedule_optimum, schedule_optimum_timeindexed
from transferplan.scheduler import ScheduleError

from gen import random_instance, random_problem

seeds = st.integers(min_value=0, max_value=2**32 - 1)
SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def routable(seed, **kw):
    rng = random.Random(seed)
    while True:
        net, req = random_instance(rng, **kw)
        try:
            return net, validate_request(net, req)
        except UnroutableDemandError:
            continue


@SETTINGS
@given(seeds)
def test_shortest_paths_triangle(seed):
    net, req = routable(seed)
    sp = shortest_path_table(net, req.destination)
    for e in net.links:
        for f in net.OUT(e.target):
            assert sp[e.id] <= f.weight + sp[f.id]
    dist = distances_to(net, req.destination)
    assert all(sp[e.id] == dist[e.target] for e in net.links)


@SETTINGS
@given(seeds, st.fractions(min_value=Fraction(1, 4), max_value=Fraction(9, 2)))
def test_shared_group_preserves_weights(seed, limit):
    net, req = routable(seed)
    site = req.destination
    members = [l for l in net.IN(site) if l.weight > limit]
    if not members:
        return
    out = apply_shared_groups(net, [SharedGroup(site, "incoming", tuple(l.id for l in members), limit)])
    dummy = out.link(members[0].id).target
    bridge = out.IN(site)
    bridge = [l for l in bridge if l.source == dummy][0]
    assert bridge.weight == limit
    for l in members:
        assert out.link(l.id).weight + limit == l.weight
        assert out.link(l.id).target == dummy


@SETTINGS
@given(seeds)
def test_solve_matches_oracle(seed):
    net, req = routable(seed)
    expected = oracle_solve(net, req)
    assert makespan_lower_bound(net, req) <= expected
    rng = random.Random(seed)
    options = SolveOptions(
        heuristic=rng.choice([Heuristic.MIN_PATH, Heuristic.FASTEST_LINK]),
        value_order=rng.choice(list(ValueOrder)),
        symmetry_breaking=rng.random() < 0.5,
        restart=rng.random() < 0.5,
        greedy_incumbent=rng.random() < 0.5,
    )
    sol = solve(net, req, options)
    assert sol.makespan == expected
    assert check_plan(net, req, sol.plan) == []
    assert verify_schedule(sol.problem, sol.schedule) == []


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_solve_matches_oracle_with_storage(seed):
    net, req = routable(seed, max_demands=2, max_links=6, capacity=True)
    expected = oracle_solve(net, req)
    sol = solve(net, req)
    assert sol.makespan == expected
    assert verify_schedule(sol.problem, sol.schedule) == []


@settings(max_examples=300, deadline=None)
@given(seeds)
def test_optimal_schedule_matches_permutations(seed):
    p = random_problem(random.Random(seed))
    durations = [t.duration for t in p.tasks]
    resources = [t.resource for t in p.tasks]
    pred = [t.predecessor for t in p.tasks]
    greedy = greedy_schedule(p)
    best = optimal_schedule(p)
    assert verify_schedule(p, greedy) == [] and verify_schedule(p, best) == []
    assert best.makespan == schedule_optimum(durations, resources, pred)
    assert greedy.makespan >= best.makespan
    assert optimal_schedule(p, best.makespan) is None


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_optimal_schedule_matches_time_indexed(seed):
    p = random_problem(random.Random(seed), max_tasks=5, capacity=True)
    durations = [t.duration for t in p.tasks]
    occ = [(o.site, o.incoming, o.outgoing, o.usage) for o in p.occupancies]
    expected = schedule_optimum_timeindexed(
        durations, [t.resource for t in p.tasks], [t.predecessor for t in p.tasks], occ, p.capacities,
        sum(durations) + 1,
    )
    best = optimal_schedule(p)
    assert verify_schedule(p, best) == []
    assert best.makespan == expected
    try:
        greedy = greedy_schedule(p)
    except ScheduleError:
        return
    assert verify_schedule(p, greedy) == [] and greedy.makespan >= best.makespan


@SETTINGS
@given(seeds)
def test_undo_restores_exactly(seed):
    net, req = routable(seed)
    rng = random.Random(seed)
    state = PlannerState(net, req, makespan_bound=rng.randint(4, 30))
    if state.exhausted:
        return
    snapshot = ([r[:] for r in state.dom], [r[:] for r in state.low], state.load[:])
    mark = state.mark()
    for _ in range(rng.randint(1, 6)):
        free = list(state.unassigned())
        if not free:
            break
        d, l = rng.choice(free)
        state.assign(d, l, rng.randint(0, 1))
        if not state.propagate():
            break
    state.undo(mark)
    assert ([r[:] for r in state.dom], [r[:] for r in state.low], state.load[:]) == snapshot


@SETTINGS
@given(seeds)
def test_plans_under_bound_are_valid(seed):
    net, req = routable(seed)
    state = PlannerState(net, req, makespan_bound=random.Random(seed).randint(3, 25))
    while (plan := state.next_plan()) is not None:
        assert check_plan(net, req, plan) == []
        problem = build_problem(net, plan, req)
        assert verify_schedule(problem, greedy_schedule(problem)) == []
