"""
Anytime behaviour of the optimizer
==================================

Each improvement of the incumbent is recorded with the wall time at which
it was found. Truncating the search early yields a point of this curve.
"""

from transferplan import (
    Heuristic, SolveOptions, benchmark_network, generate_demands, solve, trace_table,
)

network = benchmark_network()
request = generate_demands(50, seed=1)

for heuristic in (Heuristic.MIN_PATH, Heuristic.FASTEST_LINK):
    solution = solve(network, request, SolveOptions(heuristic=heuristic, time_limit=3.0))
    print(f"{heuristic.value}: {solution.makespan} ({solution.status.value}), "
          f"{solution.plans_explored} plans explored")
    print(trace_table(solution.trace))

# the makespan column only, without timings, is reproducible run to run
print(trace_table(solution.trace, with_time=False))
