"""
Routing and scheduling two files
================================

A source S holds two files that the destination T needs. S can send
directly (slow) or relay through M (two fast hops). Sending both files the
same way makes them queue; splitting them is optimal.
"""

from transferplan import (
    Demand, Link, Network, Request, Site, oracle_solve, schedule_table, solve,
)

# a link weight is the time one unit-size file takes to cross it
network = Network(
    (Site("S"), Site("M"), Site("T")),
    (Link("S->M", "S", "M", 2), Link("M->T", "M", "T", 2), Link("S->T", "S", "T", 5)),
)
request = Request("T", (Demand("f1", 1, frozenset({"S"})), Demand("f2", 1, frozenset({"S"}))))

solution = solve(network, request)
print("makespan:", solution.makespan, f"({solution.status.value})")
for route in solution.plan.routes:
    print(f"  {route.demand}: {', '.join(route.links)}")

# every transfer, with its start and end time
print(schedule_table(solution.problem, solution.schedule))

# brute force agrees on instances this small
assert oracle_solve(network, request) == solution.makespan
