"""Peer-to-peer baseline.

Files only move over direct links into the destination. Every such link has
an observer that, whenever its link is idle, grabs an undelivered file held
at its end of the link, preferring the file held by the fewest sites
(random choice among equally rare files).
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass

from .netmodel import Network, NormalizedRequest, Number, Request, format_rational, transfer_duration, validate_request


class P2PInfeasibleError(ValueError):
    def __init__(self, demand_id: str):
        super().__init__(f"P2P infeasible for demand {demand_id}")
        self.demand_id = demand_id


@dataclass(frozen=True)
class TransferRecord:
    demand: str
    link: str
    start: Number
    end: Number


@dataclass
class P2PResult:
    makespan: Number
    transfers: list[TransferRecord]
    seed: int | None


def simulate_p2p(network: Network, request: Request | NormalizedRequest, seed: int | None = 0) -> P2PResult:
    norm = request if isinstance(request, NormalizedRequest) else validate_request(network, request)
    dest = norm.destination
    rng = random.Random(seed)
    demands = {d.id: d for d in norm.demands}
    observers = sorted(
        (link for link in network.IN(dest) if any(link.source in d.origins for d in norm.demands)),
        key=lambda link: link.id,
    )
    fed_sites = {link.source for link in observers}
    for d in norm.demands:
        if not d.origins & fed_sites:
            raise P2PInfeasibleError(d.id)

    held: dict[str, list[str]] = {
        site: sorted(d.id for d in norm.demands if site in d.origins) for site in fed_sites
    }
    taken: set[str] = set()
    transfers: list[TransferRecord] = []
    # (time the observer is free, observer position) -- ties resolve by link id
    free = [(0, i) for i in range(len(observers))]
    heapq.heapify(free)
    makespan = 0
    while free:
        t, i = heapq.heappop(free)
        link = observers[i]
        pool = [did for did in held[link.source] if did not in taken]
        if not pool:
            continue  # nothing left here; the observer retires
        rarity = min(len(demands[did].origins) for did in pool)
        rarest = [did for did in pool if len(demands[did].origins) == rarity]
        pick = rarest[0] if len(rarest) == 1 else rng.choice(rarest)
        taken.add(pick)
        end = t + transfer_duration(demands[pick], link)
        transfers.append(TransferRecord(pick, link.id, t, end))
        makespan = max(makespan, end)
        heapq.heappush(free, (end, i))
    return P2PResult(makespan, transfers, seed)


def transfer_log_table(transfers: list[TransferRecord], makespan: Number) -> str:
    """Same CSV layout as the schedule export."""
    rows = ["demand,link,start,end"]
    for r in sorted(transfers, key=lambda r: (r.start, r.demand, r.link)):
        rows.append(f"{r.demand},{r.link},{format_rational(r.start)},{format_rational(r.end)}")
    rows.append(f"makespan,,,{format_rational(makespan)}")
    return "\n".join(rows) + "\n"
