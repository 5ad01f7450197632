from __future__ import annotations

import math

import pytest

from transferplan import benchmark_network, dump_network, load_network, validate_request
from transferplan.workload import DEFAULT_DISTRIBUTION, DistributionError, generate_demands


def test_fixture_sites():
    net = benchmark_network()
    assert {s.id for s in net.sites} == {"BNL", "LBNL", "MIT", "KISTI", "Prague"}
    assert len(net.links) == 20


def test_fixture_deterministic_and_round_trips():
    net = benchmark_network()
    assert net == benchmark_network()
    assert load_network(dump_network(net)) == net


def test_hundred_files():
    req = generate_demands(100, DEFAULT_DISTRIBUTION, seed=5)
    assert req.destination == "Prague" and len(req.demands) == 100
    assert all("BNL" in d.origins and d.size == 1 for d in req.demands)
    lbnl = sum("LBNL" in d.origins for d in req.demands)
    assert abs(lbnl - 60) <= 3 * math.sqrt(100 * 0.6 * 0.4)
    validate_request(benchmark_network(), req)


def test_empty():
    assert generate_demands(0).demands == ()


def test_degenerate_distribution():
    req = generate_demands(3, {"A": 1.0}, seed=1, destination="Z")
    assert all(d.origins == {"A"} for d in req.demands)


def test_no_guaranteed_origin():
    with pytest.raises(DistributionError, match="no guaranteed origin"):
        generate_demands(3, {"A": 0.5})


def test_seeded():
    assert generate_demands(50, seed=9) == generate_demands(50, seed=9)
    assert generate_demands(50, seed=9) != generate_demands(50, seed=10)


def test_lbnl_frequency_large_sample():
    req = generate_demands(10_000, seed=2)
    count = sum("LBNL" in d.origins for d in req.demands)
    assert abs(count - 6000) <= 3 * math.sqrt(10_000 * 0.6 * 0.4)
