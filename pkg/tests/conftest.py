from __future__ import annotations

import pytest

from transferplan import Demand, Link, Network, Request, Site, validate_request


def d1_network(capacity_m=None) -> Network:
    """Three sites S, M, T: S->M and M->T weigh 2, the direct S->T weighs 5."""
    return Network(
        (Site("S"), Site("M", capacity_m), Site("T")),
        (Link("e1", "S", "M", 2), Link("e2", "M", "T", 2), Link("e3", "S", "T", 5)),
    )


def unit_request(n: int, origins=("S",), destination="T") -> Request:
    return Request(destination, tuple(Demand(f"f{i + 1}", 1, frozenset(origins)) for i in range(n)))


@pytest.fixture
def d1():
    return d1_network()


@pytest.fixture
def d1_one(d1):
    return validate_request(d1, unit_request(1))


@pytest.fixture
def d1_two(d1):
    return validate_request(d1, unit_request(2))
