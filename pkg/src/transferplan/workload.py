"""Benchmark workload: the five-site network fixture and a demand feeder."""

from __future__ import annotations

import json
import random
from importlib import resources
from typing import Mapping

from .netmodel import Demand, Network, Request, load_network

BENCHMARK_DESTINATION = "Prague"

# share of files held by each site: every file is at BNL, most also at LBNL
DEFAULT_DISTRIBUTION: dict[str, float] = {"BNL": 1.0, "LBNL": 0.6, "MIT": 0.01, "KISTI": 0.05}

BENCHMARK_SIZES = (25, 50, 100, 150, 200)


class DistributionError(ValueError):
    pass


def benchmark_network() -> Network:
    text = resources.files("transferplan").joinpath("data/benchmark_network.json").read_text(encoding="utf-8")
    return load_network(text)


def benchmark_network_document() -> dict:
    text = resources.files("transferplan").joinpath("data/benchmark_network.json").read_text(encoding="utf-8")
    return json.loads(text)


def generate_demands(
    n: int,
    dist: Mapping[str, float] = DEFAULT_DISTRIBUTION,
    seed: int | None = 0,
    destination: str = BENCHMARK_DESTINATION,
) -> Request:
    """``n`` unit-size demands; each site holds each file independently with its probability."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    for site, p in dist.items():
        if not 0 <= p <= 1:
            raise DistributionError(f"probability for {site} outside [0, 1]")
    if not any(p >= 1 for p in dist.values()):
        raise DistributionError("no guaranteed origin")
    rng = random.Random(seed)
    width = max(4, len(str(n)))
    demands = []
    for i in range(n):
        # one draw per site keeps the stream aligned regardless of the outcome
        origins = frozenset(site for site, p in dist.items() if rng.random() < p or p >= 1)
        demands.append(Demand(f"file{i:0{width}d}", 1, origins))
    return Request(destination, tuple(demands))
