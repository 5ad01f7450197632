"""
Storage limits and shared bandwidth
===================================

A relay site with room for one file at a time forces files to wait before
entering it. Separately, links that share a bottleneck (for example a
site's uplink) are modelled by a shared group, which reroutes them through
a dummy site.
"""

from transferplan import (
    Demand, Link, Network, Request, SharedGroup, Site, apply_shared_groups,
    dump_network, solve, verify_schedule,
)

links = (Link("S->M", "S", "M", 2), Link("M->T", "M", "T", 2))
request = Request("T", (Demand("a", 1, frozenset({"S"})), Demand("b", 1, frozenset({"S"}))))

free = solve(Network((Site("S"), Site("M"), Site("T")), links), request)
capped = solve(Network((Site("S"), Site("M", storage_capacity=1), Site("T")), links), request)
print("relay without limit:", free.makespan)
print("relay holding one file:", capped.makespan)
assert verify_schedule(capped.problem, capped.schedule) == []

# two links into T share a bottleneck worth 1 time unit of their weight
network = Network(
    (Site("A"), Site("B"), Site("T")),
    (Link("A->T", "A", "T", 3), Link("B->T", "B", "T", 4)),
)
reduced = apply_shared_groups(network, [SharedGroup("T", "incoming", ("A->T", "B->T"), 1)])
print(dump_network(reduced))
