"""Network, demand and request model.

Sites and links form a directed weighted graph. A link's weight is the
number of time units needed to push one size unit across it, so the
duration of moving a file over a link is ``size * weight``. All quantities
are kept as exact rationals; values that happen to be integral are stored
as plain ``int`` so integer instances run at integer speed.

Documents are JSON. Weights, sizes and capacities may be written either as
JSON numbers or as decimal/fraction strings (``"2.5"``, ``"1/3"``).
"""

from __future__ import annotations

import heapq
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence, Union

logger = logging.getLogger(__name__)

Number = Union[int, Fraction]
INF = math.inf


class NetworkConfigError(ValueError):
    """Raised for malformed or inconsistent network/request documents."""


class UnroutableDemandError(ValueError):
    """Raised when a demand has no origin that can reach the destination."""

    def __init__(self, demand_id: str):
        super().__init__(f"unroutable demand {demand_id}")
        self.demand_id = demand_id


# ---------------------------------------------------------------------------
# rational helpers


def exact(value: Number) -> Number:
    """Collapse an integral Fraction to ``int``; leave other values alone."""
    if isinstance(value, Fraction) and value.denominator == 1:
        return value.numerator
    return value


def parse_rational(value: Any, what: str = "value") -> Number:
    if isinstance(value, bool):
        raise NetworkConfigError(f"{what}: expected a number, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, Rational):
        return exact(Fraction(value))
    try:
        if isinstance(value, float):
            # repr gives the shortest decimal that round-trips, which is what
            # the author of the document typed
            return exact(Fraction(repr(value)))
        if isinstance(value, str):
            return exact(Fraction(value.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise NetworkConfigError(f"{what}: cannot parse {value!r} as a rational") from exc
    raise NetworkConfigError(f"{what}: expected a number, got {value!r}")


def format_rational(value: Number | float) -> str:
    """Render a rational exactly: ``4``, ``2.5``, ``1/3``; infinity as ``inf``."""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        value = Fraction(repr(value))
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    digits = max(twos, fives)
    scaled = abs(value.numerator * 10**digits // value.denominator)
    sign = "-" if value < 0 else ""
    whole, frac = divmod(scaled, 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def rational_to_json(value: Number) -> int | str:
    value = exact(Fraction(value))
    return value if isinstance(value, int) else format_rational(value)


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Site:
    id: str
    storage_capacity: Number | None = None


@dataclass(frozen=True)
class Link:
    id: str
    source: str
    target: str
    weight: Number
    max_streams: int = 1


@dataclass(frozen=True)
class SharedGroup:
    """Links attached to one side of a site that share a physical bottleneck.

    ``limit`` is the slowdown (time units per size unit) imposed by the
    shared device.
    """

    site: str
    side: str  # "incoming" | "outgoing"
    members: tuple[str, ...]
    limit: Number


@dataclass(frozen=True)
class Network:
    sites: tuple[Site, ...]
    links: tuple[Link, ...]
    shared_groups: tuple[SharedGroup, ...] = ()
    site_index: dict[str, Site] = field(init=False, repr=False, compare=False)
    link_index: dict[str, Link] = field(init=False, repr=False, compare=False)
    out_links: dict[str, tuple[Link, ...]] = field(init=False, repr=False, compare=False)
    in_links: dict[str, tuple[Link, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        site_index: dict[str, Site] = {}
        for site in self.sites:
            if site.id in site_index:
                raise NetworkConfigError(f"duplicate site id {site.id!r}")
            if site.storage_capacity is not None and site.storage_capacity < 0:
                raise NetworkConfigError(f"negative storage capacity at site {site.id!r}")
            site_index[site.id] = site
        link_index: dict[str, Link] = {}
        out_links: dict[str, list[Link]] = {s: [] for s in site_index}
        in_links: dict[str, list[Link]] = {s: [] for s in site_index}
        for link in self.links:
            if link.id in link_index:
                raise NetworkConfigError(f"duplicate link id {link.id!r}")
            for end in (link.source, link.target):
                if end not in site_index:
                    raise NetworkConfigError(f"unknown site {end!r} in link {link.id!r}")
            if link.source == link.target:
                raise NetworkConfigError(f"link {link.id!r} is a self-loop")
            if not link.weight > 0:
                raise NetworkConfigError(f"nonpositive weight on link {link.id!r}")
            if link.max_streams < 1:
                raise NetworkConfigError(f"max_streams must be positive on link {link.id!r}")
            link_index[link.id] = link
            out_links[link.source].append(link)
            in_links[link.target].append(link)
        object.__setattr__(self, "site_index", site_index)
        object.__setattr__(self, "link_index", link_index)
        object.__setattr__(self, "out_links", {k: tuple(v) for k, v in out_links.items()})
        object.__setattr__(self, "in_links", {k: tuple(v) for k, v in in_links.items()})

    def site(self, site_id: str) -> Site:
        return self.site_index[site_id]

    def link(self, link_id: str) -> Link:
        return self.link_index[link_id]

    def OUT(self, site_id: str) -> tuple[Link, ...]:
        return self.out_links[site_id]

    def IN(self, site_id: str) -> tuple[Link, ...]:
        return self.in_links[site_id]


@dataclass(frozen=True)
class Demand:
    id: str
    size: Number
    origins: frozenset[str]

    def __post_init__(self) -> None:
        if not self.size > 0:
            raise NetworkConfigError(f"demand {self.id!r} has nonpositive size")
        if not self.origins:
            raise NetworkConfigError(f"demand {self.id!r} has no origins")


@dataclass(frozen=True)
class Request:
    destination: str
    demands: tuple[Demand, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for d in self.demands:
            if d.id in seen:
                raise NetworkConfigError(f"duplicate demand id {d.id!r}")
            seen.add(d.id)


@dataclass(frozen=True)
class NormalizedRequest:
    """A request ready for the planner.

    ``demands`` are sorted by id and every one of them can be routed;
    ``satisfied`` holds demands already present at the destination.
    """

    destination: str
    demands: tuple[Demand, ...]
    satisfied: tuple[Demand, ...] = ()
    warnings: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# operations


def transfer_duration(demand: Demand, link: Link) -> Number:
    return exact(Fraction(demand.size) * Fraction(link.weight))


def distances_to(network: Network, destination: str) -> dict[str, Number | float]:
    """Weight of the lightest directed path from every site to ``destination``."""
    dist: dict[str, Number | float] = {s.id: INF for s in network.sites}
    dist[destination] = 0
    heap: list[tuple[Number, str]] = [(0, destination)]
    done: set[str] = set()
    while heap:
        d, node = heapq.heappop(heap)
        if node in done:
            continue
        done.add(node)
        for link in network.IN(node):
            cand = exact(d + link.weight)
            if cand < dist[link.source]:
                dist[link.source] = cand
                heapq.heappush(heap, (cand, link.source))
    return dist


def shortest_path_table(network: Network, destination: str) -> dict[str, Number | float]:
    """Map each link id to the per-size-unit distance from its head to ``destination``.

    Unreachable heads map to ``math.inf``.
    """
    if destination not in network.site_index:
        raise NetworkConfigError(f"unknown site {destination!r}")
    dist = distances_to(network, destination)
    return {link.id: dist[link.target] for link in network.links}


def validate_request(network: Network, request: Request) -> NormalizedRequest:
    dest = request.destination
    if dest not in network.site_index:
        raise NetworkConfigError(f"unknown site {dest!r} (destination)")
    dist = distances_to(network, dest)
    kept: list[Demand] = []
    satisfied: list[Demand] = []
    warnings: list[str] = []
    for demand in request.demands:
        unknown = sorted(o for o in demand.origins if o not in network.site_index)
        for origin in unknown:
            msg = f"demand {demand.id}: dropping unknown origin site {origin!r}"
            logger.warning(msg)
            warnings.append(msg)
        origins = frozenset(o for o in demand.origins if o in network.site_index)
        if dest in origins:
            satisfied.append(demand)
            continue
        if not any(dist[o] != INF for o in origins):
            raise UnroutableDemandError(demand.id)
        kept.append(demand if not unknown else Demand(demand.id, demand.size, origins))
    kept.sort(key=lambda d: d.id)
    return NormalizedRequest(dest, tuple(kept), tuple(satisfied), tuple(warnings))


def _fresh_id(base: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    candidate = base
    while candidate in taken:
        candidate += "'"
    return candidate


def apply_shared_groups(network: Network, groups: Sequence[SharedGroup]) -> Network:
    """Rewrite shared-bandwidth groups as dummy sites and dummy links.

    For every group a new dummy site sits between the real site and the
    member links. Member links are re-attached to the dummy site with their
    weight lowered by ``limit``; one dummy link of weight ``limit`` joins the
    dummy and the real site, so any path through the group keeps its total
    weight while concurrent use of the members contends for the dummy link.
    """
    sites = list(network.sites)
    links = {link.id: link for link in network.links}
    order = [link.id for link in network.links]
    for group in groups:
        if group.site not in network.site_index:
            raise NetworkConfigError(f"unknown site {group.site!r} in shared group")
        if group.side not in ("incoming", "outgoing"):
            raise NetworkConfigError(f"shared group side must be incoming or outgoing, got {group.side!r}")
        if not group.limit > 0:
            raise NetworkConfigError(f"shared group at {group.site!r} has nonpositive limit")
        dummy = _fresh_id(group.site + "'", [s.id for s in sites])
        for member in group.members:
            link = links.get(member)
            if link is None:
                raise NetworkConfigError(f"unknown link {member!r} in shared group at {group.site!r}")
            attached = link.target if group.side == "incoming" else link.source
            if attached != group.site:
                raise NetworkConfigError(
                    f"link {member!r} is not {group.side} at site {group.site!r}"
                )
            if group.limit >= link.weight:
                raise NetworkConfigError(f"limit exhausts link weight of {member!r}")
            reduced = exact(Fraction(link.weight) - Fraction(group.limit))
            if group.side == "incoming":
                links[member] = Link(link.id, link.source, dummy, reduced, link.max_streams)
            else:
                links[member] = Link(link.id, dummy, link.target, reduced, link.max_streams)
        sites.append(Site(dummy))
        if group.side == "incoming":
            dummy_link = Link(_fresh_id(f"{dummy}->{group.site}", links), dummy, group.site, group.limit)
        else:
            dummy_link = Link(_fresh_id(f"{group.site}->{dummy}", links), group.site, dummy, group.limit)
        links[dummy_link.id] = dummy_link
        order.append(dummy_link.id)
    return Network(tuple(sites), tuple(links[i] for i in order), ())


# ---------------------------------------------------------------------------
# documents


def _require(obj: Mapping, key: str, where: str) -> Any:
    if not isinstance(obj, Mapping) or key not in obj:
        raise NetworkConfigError(f"{where}: missing key {key!r}")
    return obj[key]


def _parse_json(document: str | bytes | Mapping) -> Mapping:
    if isinstance(document, Mapping):
        return document
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise NetworkConfigError(f"parse failure: {exc}") from exc
    if not isinstance(data, Mapping):
        raise NetworkConfigError("parse failure: top level must be an object")
    return data


def load_network(document: str | bytes | Mapping) -> Network:
    data = _parse_json(document)
    sites = []
    for i, raw in enumerate(data.get("sites", [])):
        sid = str(_require(raw, "id", f"sites[{i}]"))
        cap = raw.get("storage_capacity")
        sites.append(Site(sid, None if cap is None else parse_rational(cap, f"site {sid!r} storage_capacity")))
    links = []
    for i, raw in enumerate(data.get("links", [])):
        lid = str(_require(raw, "id", f"links[{i}]"))
        streams = raw.get("max_streams", 1)
        if isinstance(streams, bool) or not isinstance(streams, int):
            raise NetworkConfigError(f"max_streams must be an integer on link {lid!r}")
        links.append(
            Link(
                lid,
                str(_require(raw, "from", f"link {lid!r}")),
                str(_require(raw, "to", f"link {lid!r}")),
                parse_rational(_require(raw, "weight", f"link {lid!r}"), f"link {lid!r} weight"),
                streams,
            )
        )
    groups = []
    for i, raw in enumerate(data.get("shared_groups", [])):
        members = _require(raw, "members", f"shared_groups[{i}]")
        groups.append(
            SharedGroup(
                str(_require(raw, "site", f"shared_groups[{i}]")),
                str(_require(raw, "side", f"shared_groups[{i}]")),
                tuple(str(m) for m in members),
                parse_rational(_require(raw, "limit", f"shared_groups[{i}]"), f"shared_groups[{i}] limit"),
            )
        )
    network = Network(tuple(sites), tuple(links), tuple(groups))
    for g in groups:
        if g.site not in network.site_index:
            raise NetworkConfigError(f"unknown site {g.site!r} in shared group")
        for m in g.members:
            if m not in network.link_index:
                raise NetworkConfigError(f"unknown link {m!r} in shared group at {g.site!r}")
    return network


def network_to_dict(network: Network) -> dict[str, Any]:
    sites = []
    for s in network.sites:
        entry: dict[str, Any] = {"id": s.id}
        if s.storage_capacity is not None:
            entry["storage_capacity"] = rational_to_json(s.storage_capacity)
        sites.append(entry)
    links = []
    for link in network.links:
        entry = {"id": link.id, "from": link.source, "to": link.target, "weight": rational_to_json(link.weight)}
        if link.max_streams != 1:
            entry["max_streams"] = link.max_streams
        links.append(entry)
    doc: dict[str, Any] = {"sites": sites, "links": links}
    if network.shared_groups:
        doc["shared_groups"] = [
            {"site": g.site, "side": g.side, "members": list(g.members), "limit": rational_to_json(g.limit)}
            for g in network.shared_groups
        ]
    return doc


def dump_network(network: Network) -> str:
    return json.dumps(network_to_dict(network), indent=2) + "\n"


def load_request(document: str | bytes | Mapping) -> Request:
    data = _parse_json(document)
    dest = str(_require(data, "destination", "request"))
    demands = []
    for i, raw in enumerate(_require(data, "demands", "request")):
        did = str(_require(raw, "id", f"demands[{i}]"))
        origins = _require(raw, "origins", f"demand {did!r}")
        if isinstance(origins, str) or not isinstance(origins, (list, tuple)):
            raise NetworkConfigError(f"demand {did!r}: origins must be a list")
        demands.append(
            Demand(
                did,
                parse_rational(raw.get("size", 1), f"demand {did!r} size"),
                frozenset(str(o) for o in origins),
            )
        )
    return Request(dest, tuple(demands))


def request_to_dict(request: Request | NormalizedRequest) -> dict[str, Any]:
    return {
        "destination": request.destination,
        "demands": [
            {"id": d.id, "size": rational_to_json(d.size), "origins": sorted(d.origins)}
            for d in request.demands
        ],
    }


def dump_request(request: Request | NormalizedRequest) -> str:
    return json.dumps(request_to_dict(request), indent=2) + "\n"


def read_network(path: str | Path) -> Network:
    return load_network(Path(path).read_text(encoding="utf-8"))


def read_request(path: str | Path) -> Request:
    return load_request(Path(path).read_text(encoding="utf-8"))
