"""
Planned transfers versus peer-to-peer
=====================================

On the five-site benchmark mesh, compare the makespan of the planned and
scheduled transfers with a BitTorrent-like rarest-first baseline, for both
variable-selection heuristics.
"""

from transferplan import (
    Heuristic, SolveOptions, benchmark_network, generate_demands,
    makespan_lower_bound, simulate_p2p, solve, validate_request,
)

network = benchmark_network()
TIME_LIMIT = 5.0  # seconds per solve; raise it to close more gaps

print(f"{'files':>5} {'p2p':>5} {'bound':>6} {'minpath':>8} {'fastest':>8}")
for size in (25, 50, 100):
    # replica placement follows the benchmark distribution (seeded)
    request = validate_request(network, generate_demands(size, seed=0))
    p2p = simulate_p2p(network, request, seed=0).makespan
    cp = {
        h: solve(network, request, SolveOptions(heuristic=h, time_limit=TIME_LIMIT))
        for h in (Heuristic.MIN_PATH, Heuristic.FASTEST_LINK)
    }
    print(
        f"{size:>5} {p2p:>5} {makespan_lower_bound(network, request):>6}"
        f" {cp[Heuristic.MIN_PATH].makespan:>8} {cp[Heuristic.FASTEST_LINK].makespan:>8}"
    )
