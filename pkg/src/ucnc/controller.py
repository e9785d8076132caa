"""Virtual queues and the min-cost routing policy."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chaining import (
    ChainError,
    LayeredGraph,
    Route,
    ScalingProfile,
    ServiceChain,
    build_layered_graph,
)
from .routing import (
    EXACT_TERMINAL_BOUND,
    select_route_anycast,
    select_route_approx,
    select_route_multicast,
    select_route_unicast,
)
from .topology import Network, NodeId, to_fraction

ARRIVAL_KINDS = ("poisson", "bernoulli")
CAST_KINDS = ("auto", "unicast", "multicast", "anycast")


@dataclass(frozen=True)
class Commodity:
    """A traffic class: packets from ``source`` that need ``chain`` and go to ``destinations``.

    ``cast`` is ``"auto"`` by default, which means unicast for one destination
    and multicast otherwise; ``"anycast"`` delivers to any single destination.
    """

    id: str
    source: NodeId
    destinations: tuple[NodeId, ...]
    chain: ServiceChain
    rate: float = 0.0
    arrival: str = "poisson"
    cast: str = "auto"

    def __post_init__(self):
        dests = tuple(dict.fromkeys(self.destinations))
        object.__setattr__(self, "destinations", dests)
        if not dests:
            raise ValueError(f"commodity {self.id!r} has no destination")
        if self.rate < 0:
            raise ValueError(f"commodity {self.id!r} has a negative rate")
        if self.arrival not in ARRIVAL_KINDS:
            raise ValueError(f"unknown arrival distribution {self.arrival!r}")
        if self.cast not in CAST_KINDS:
            raise ValueError(f"unknown cast kind {self.cast!r}")
        if self.arrival == "bernoulli" and self.rate > 1:
            raise ValueError("bernoulli arrivals need rate <= 1")

    @property
    def kind(self) -> str:
        if self.cast != "auto":
            return self.cast
        return "unicast" if len(self.destinations) == 1 else "multicast"

    @property
    def is_multicast(self) -> bool:
        return self.kind == "multicast"

    def with_rate(self, rate: float) -> "Commodity":
        return Commodity(self.id, self.source, self.destinations, self.chain,
                         rate, self.arrival, self.cast)

    def with_chain(self, chain: ServiceChain) -> "Commodity":
        return Commodity(self.id, self.source, self.destinations, chain,
                         self.rate, self.arrival, self.cast)


class VirtualQueueState:
    """Virtual backlogs, one per resource (links first, then nodes).

    Nodes without compute capacity keep an entry too; nothing ever arrives
    there, so it stays at zero.
    """

    def __init__(self, net: Network, q=None, t: int = 0):
        self.net = net
        self.mu = np.array([float(c) for c in net.capacities()])
        self.q = np.zeros(net.n_resources) if q is None else np.asarray(q, dtype=float).copy()
        if self.q.shape != (net.n_resources,):
            raise ValueError("queue vector does not match the network")
        if (self.q < 0).any():
            raise ValueError("virtual queues must be nonnegative")
        self.t = t

    def copy(self) -> "VirtualQueueState":
        return VirtualQueueState(self.net, self.q, self.t)

    def link(self, u, v) -> float:
        return float(self.q[self.net.link_index(u, v)])

    def node(self, u) -> float:
        return float(self.q[self.net.node_resource(u)])

    def set_link(self, u, v, value: float) -> None:
        self.q[self.net.link_index(u, v)] = value

    def set_node(self, u, value: float) -> None:
        self.q[self.net.node_resource(u)] = value

    @property
    def total(self) -> float:
        return float(self.q.sum())


def edge_costs(vq: VirtualQueueState, profile: ScalingProfile | None, lg: LayeredGraph) -> list[float]:
    """Per-edge costs: ``w[i] * Q_uv`` on transmission edges, ``x[i] * Q_u`` on computation edges.

    The per-edge weights (including per-host compute overrides) already live
    on ``lg``; ``profile`` is accepted for symmetry with the maths and
    ignored.
    """
    return (np.asarray(lg.weight) * vq.q[lg.resource]).tolist()


def virtual_arrivals(route: Route, profile: ScalingProfile | None, count: float):
    """Virtual arrivals caused by ``count`` packets on ``route``.

    Returns ``(per_link, per_node)`` dicts keyed by the stored link tuple and
    by node id.  In undirected mode both travel directions of a link land on
    the same key.
    """
    net = route.lg.net
    per_link: dict = {}
    per_node: dict = {}
    if count == 0:
        return per_link, per_node
    for res, load in route.loads:
        kind, key = net.resource_label(res)
        target = per_link if kind == "link" else per_node
        target[key] = target.get(key, 0.0) + count * load
    return per_link, per_node


def arrivals_vector(net: Network, per_link: dict, per_node: dict) -> np.ndarray:
    a = np.zeros(net.n_resources)
    for (u, v), x in per_link.items():
        a[net.link_index(u, v)] += x
    for u, x in per_node.items():
        a[net.node_resource(u)] += x
    return a


def update_virtual_queues(vq: VirtualQueueState, arrivals) -> VirtualQueueState:
    """Return the next-slot state ``max(0, Q + A - mu)``.

    ``arrivals`` is either a per-resource vector or a ``(per_link, per_node)``
    pair as produced by :func:`virtual_arrivals`.
    """
    if isinstance(arrivals, tuple):
        arrivals = arrivals_vector(vq.net, *arrivals)
    a = np.asarray(arrivals, dtype=float)
    if (a < 0).any():
        raise ValueError("arrivals must be nonnegative")
    return VirtualQueueState(vq.net, np.maximum(vq.q + a - vq.mu, 0.0), vq.t + 1)


@dataclass
class Decision:
    commodity: int
    route: Route
    count: int


@dataclass
class _CommodityState:
    commodity: Commodity
    lg: LayeredGraph
    cache: dict = field(default_factory=dict)


class UCNCController:
    """Per-slot route selection on frozen virtual-queue costs.

    ``multicast`` selects the Steiner solver: ``"exact"`` (Dreyfus-Wagner,
    up to ``terminal_bound`` terminals) or ``"approx"``.
    """

    def __init__(self, net: Network, commodities: Sequence[Commodity], multicast: str = "exact",
                 terminal_bound: int = EXACT_TERMINAL_BOUND, measure_ratio: bool = False):
        if multicast not in ("exact", "approx"):
            raise ValueError(f"multicast solver must be 'exact' or 'approx', got {multicast!r}")
        self.net = net
        self.multicast = multicast
        self.terminal_bound = terminal_bound
        self.measure_ratio = measure_ratio
        self.vq = VirtualQueueState(net)
        graphs: dict[int, LayeredGraph] = {}
        self.states: list[_CommodityState] = []
        for c in commodities:
            if c.source not in net:
                raise ChainError(f"commodity {c.id!r}: unknown source {c.source!r}")
            for d in c.destinations:
                if d not in net:
                    raise ChainError(f"commodity {c.id!r}: unknown destination {d!r}")
            key = id(c.chain)
            if key not in graphs:
                graphs[key] = build_layered_graph(net, c.chain)
            self.states.append(_CommodityState(c, graphs[key]))
        self._pending = np.zeros(net.n_resources)
        self._cost_cache: dict[int, list[float]] = {}

    @property
    def commodities(self) -> list[Commodity]:
        return [s.commodity for s in self.states]

    def layered_graph(self, k: int) -> LayeredGraph:
        return self.states[k].lg

    def costs(self, lg: LayeredGraph) -> list[float]:
        key = id(lg)
        cached = self._cost_cache.get(key)
        if cached is None:
            cached = edge_costs(self.vq, None, lg)
            self._cost_cache[key] = cached
        return cached

    def select(self, k: int) -> Route:
        """Min-cost route for commodity ``k`` under the current (frozen) costs."""
        st = self.states[k]
        c = st.commodity
        lg = st.lg
        costs = self.costs(lg)
        kind = c.kind
        if kind == "unicast":
            route = select_route_unicast(lg, costs, c.source, c.destinations[0], c.id)
        elif kind == "anycast":
            route = select_route_anycast(lg, costs, c.source, c.destinations, c.id)
        elif self.multicast == "approx":
            route = select_route_approx(lg, costs, c.source, c.destinations, c.id, self.measure_ratio)
        else:
            route = select_route_multicast(lg, costs, c.source, c.destinations, c.id,
                                           self.terminal_bound)
        # routes recur constantly; reuse the object so its loads are computed once
        return st.cache.setdefault(route.key, route)

    def decide(self, counts: Sequence[int]) -> list[Decision]:
        """Route every commodity with a nonzero batch this slot and charge the virtual queues."""
        out = []
        pending = self._pending
        for k, a in enumerate(counts):
            if a <= 0:
                continue
            route = self.select(k)
            for res, load in route.loads:
                pending[res] += a * load
            out.append(Decision(k, route, int(a)))
        return out

    def end_slot(self) -> None:
        vq = self.vq
        np.maximum(vq.q + self._pending - vq.mu, 0.0, out=vq.q)
        vq.t += 1
        self._pending[:] = 0.0
        self._cost_cache.clear()


def restrict_commodity(c: Commodity, host: NodeId) -> Commodity:
    return c.with_chain(c.chain.restricted_to(host))


def rate_vector(commodities: Sequence[Commodity]):
    return [to_fraction(c.rate) for c in commodities]
