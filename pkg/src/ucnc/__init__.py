"""Throughput-optimal control of service function chains over computing networks."""

from .chaining import (
    LayeredGraph,
    Route,
    ServiceChain,
    ServiceFunction,
    build_layered_graph,
    map_to_physical,
    scaling_profile,
)
from .controller import (
    Commodity,
    UCNCController,
    VirtualQueueState,
    edge_costs,
    update_virtual_queues,
    virtual_arrivals,
)
from .dataplane import DataPlane, ento_priority, fifo_priority, metrics
from .routing import (
    select_route_anycast,
    select_route_approx,
    select_route_multicast,
    select_route_unicast,
)
from .topology import Network, abilene_preset, load_topology

__version__ = "0.1.0"

__all__ = [
    "Commodity", "DataPlane", "LayeredGraph", "Network", "Route", "ServiceChain",
    "ServiceFunction", "UCNCController", "VirtualQueueState", "abilene_preset",
    "build_layered_graph", "edge_costs", "ento_priority", "fifo_priority", "load_topology",
    "map_to_physical", "metrics", "scaling_profile", "select_route_anycast",
    "select_route_approx", "select_route_multicast", "select_route_unicast",
    "update_virtual_queues", "virtual_arrivals",
]
