"""Physical network model: nodes with compute capacity, links with transmission capacity."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Hashable, Iterable

import networkx as nx
import yaml

NodeId = Hashable

DENOMINATOR_BOUND = 10**6


class TopologyError(ValueError):
    """Raised for malformed or inconsistent topology documents."""


def to_fraction(value: Any) -> Fraction:
    """Convert config values to exact rationals.

    Integers and ``"p/q"`` strings are exact; floats and decimal strings are
    snapped to the nearest rational with denominator at most 10**6.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TopologyError(f"not a number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value)).limit_denominator(DENOMINATOR_BOUND)
    if isinstance(value, str):
        try:
            frac = Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise TopologyError(f"not a number: {value!r}") from exc
        if "/" in value:
            return frac
        return frac.limit_denominator(DENOMINATOR_BOUND)
    raise TopologyError(f"not a number: {value!r}")


def format_fraction(value: Fraction) -> int | str:
    if value.denominator == 1:
        return int(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Network:
    """A directed (or undirected) capacitated network.

    Resources are numbered ``0..m-1`` for links followed by ``m..m+n-1`` for
    node compute queues; the controller and the data plane both index their
    queues this way.  In undirected mode each stored link is a single
    resource shared by both directions of travel.
    """

    nodes: tuple[NodeId, ...]
    compute: tuple[Fraction, ...]
    links: tuple[tuple[NodeId, NodeId], ...]
    link_capacity: tuple[Fraction, ...]
    directed: bool = True
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.nodes) != len(self.compute):
            raise TopologyError("one compute capacity per node required")
        if len(self.links) != len(self.link_capacity):
            raise TopologyError("one capacity per link required")
        index = {}
        for i, u in enumerate(self.nodes):
            if u in index:
                raise TopologyError(f"duplicate node id {u!r}")
            index[u] = i
        object.__setattr__(self, "_index", index)
        seen = set()
        for (u, v), cap in zip(self.links, self.link_capacity):
            if u not in index:
                raise TopologyError(f"link ({u!r}, {v!r}) references unknown node {u!r}")
            if v not in index:
                raise TopologyError(f"link ({u!r}, {v!r}) references unknown node {v!r}")
            if u == v:
                raise TopologyError(f"self-loop on node {u!r}")
            key = (u, v) if self.directed else frozenset((u, v))
            if key in seen:
                raise TopologyError(f"duplicate link ({u!r}, {v!r})")
            seen.add(key)
            if cap < 0:
                raise TopologyError(f"negative capacity on link ({u!r}, {v!r})")
        for u, cap in zip(self.nodes, self.compute):
            if cap < 0:
                raise TopologyError(f"negative compute capacity on node {u!r}")

    @classmethod
    def build(cls, nodes, links, directed: bool = True) -> "Network":
        """Convenience constructor.

        ``nodes`` maps node id to compute capacity (or is a list of
        ``(id, capacity)`` pairs); ``links`` is an iterable of ``(u, v, capacity)``.
        """
        items = list(nodes.items()) if isinstance(nodes, dict) else list(nodes)
        links = list(links)
        return cls(
            nodes=tuple(u for u, _ in items),
            compute=tuple(to_fraction(c) for _, c in items),
            links=tuple((u, v) for u, v, _ in links),
            link_capacity=tuple(to_fraction(c) for _, _, c in links),
            directed=directed,
        )

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def m(self) -> int:
        return len(self.links)

    @property
    def n_resources(self) -> int:
        return self.m + self.n

    def index(self, u: NodeId) -> int:
        try:
            return self._index[u]
        except KeyError:
            raise TopologyError(f"unknown node {u!r}") from None

    def __contains__(self, u) -> bool:
        return u in self._index

    def mu(self, u: NodeId) -> Fraction:
        return self.compute[self.index(u)]

    def node_resource(self, u: NodeId) -> int:
        return self.m + self.index(u)

    def arcs(self) -> list[tuple[NodeId, NodeId, int]]:
        """Directed arcs ``(u, v, link_index)`` usable for transmission."""
        out = [(u, v, k) for k, (u, v) in enumerate(self.links)]
        if not self.directed:
            out += [(v, u, k) for k, (u, v) in enumerate(self.links)]
        return out

    def capacities(self) -> list[Fraction]:
        """Capacity of every resource, links first then nodes."""
        return list(self.link_capacity) + list(self.compute)

    def resource_label(self, r: int):
        if r < self.m:
            return ("link", self.links[r])
        return ("node", self.nodes[r - self.m])

    def link_index(self, u: NodeId, v: NodeId) -> int:
        for k, (a, b) in enumerate(self.links):
            if (a, b) == (u, v) or (not self.directed and (b, a) == (u, v)):
                return k
        raise TopologyError(f"no link ({u!r}, {v!r})")

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        for u, c in zip(self.nodes, self.compute):
            g.add_node(u, compute=c)
        for u, v, k in self.arcs():
            g.add_edge(u, v, capacity=self.link_capacity[k], link=k)
        return g

    def hop_distances(self) -> dict:
        return dict(nx.all_pairs_shortest_path_length(self.to_networkx()))

    def is_connected(self) -> bool:
        if self.n == 0:
            return True
        return nx.is_weakly_connected(self.to_networkx())


# Abilene backbone.  Node numbers run roughly west to east.
ABILENE_CITIES = {
    1: "Seattle",
    2: "Sunnyvale",
    3: "Denver",
    4: "Los Angeles",
    5: "Kansas City",
    6: "Houston",
    7: "Indianapolis",
    8: "Chicago",
    9: "Atlanta",
    10: "Washington",
    11: "New York",
}

ABILENE_EDGES = (
    (1, 2), (1, 3), (2, 3), (2, 4), (3, 5), (4, 6), (5, 6),
    (5, 7), (6, 9), (7, 8), (7, 9), (8, 11), (9, 10), (10, 11),
)


def abilene_preset(directed: bool = True) -> Network:
    """Abilene with unit-capacity links in each direction; nodes 3 and 8 compute."""
    nodes = {u: (1 if u in (3, 8) else 0) for u in ABILENE_CITIES}
    if directed:
        links = [(u, v, 1) for u, v in ABILENE_EDGES] + [(v, u, 1) for u, v in ABILENE_EDGES]
    else:
        links = [(u, v, 1) for u, v in ABILENE_EDGES]
    return Network.build(nodes, links, directed=directed)


def topology_to_dict(net: Network) -> dict:
    return {
        "directionality": "directed" if net.directed else "undirected",
        "nodes": [
            {"id": u, "compute_capacity": format_fraction(c)}
            for u, c in zip(net.nodes, net.compute)
        ],
        "links": [
            {"from": u, "to": v, "capacity": format_fraction(c)}
            for (u, v), c in zip(net.links, net.link_capacity)
        ],
    }


def network_from_dict(doc: dict) -> Network:
    if not isinstance(doc, dict):
        raise TopologyError("topology document must be a mapping")
    direction = doc.get("directionality", "directed")
    if direction not in ("directed", "undirected"):
        raise TopologyError(f"directionality must be 'directed' or 'undirected', got {direction!r}")
    try:
        nodes = [(item["id"], to_fraction(item.get("compute_capacity", 0))) for item in doc["nodes"]]
        links = [
            (item["from"], item["to"], to_fraction(item.get("capacity", 1)))
            for item in doc.get("links", [])
        ]
    except (KeyError, TypeError) as exc:
        raise TopologyError(f"malformed topology entry: {exc}") from exc
    return Network.build(nodes, links, directed=(direction == "directed"))


def load_topology(config) -> Network:
    """Parse a YAML/JSON topology document (text, path or already-parsed mapping)."""
    if isinstance(config, dict):
        return network_from_dict(config)
    if isinstance(config, Path):
        config = config.read_text()
    try:
        doc = yaml.safe_load(io.StringIO(config))
    except yaml.YAMLError as exc:
        raise TopologyError(f"parse error: {exc}") from exc
    return network_from_dict(doc)


def serialize_topology(net: Network) -> str:
    return yaml.safe_dump(topology_to_dict(net), sort_keys=False)


def iter_undirected_edges(net: Network) -> Iterable[tuple[NodeId, NodeId]]:
    seen = set()
    for u, v in net.links:
        key = frozenset((u, v))
        if key not in seen:
            seen.add(key)
            yield u, v
