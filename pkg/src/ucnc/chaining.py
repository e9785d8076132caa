"""Service chains, cumulative scalings and the layered-graph expansion.

A chain of ``M`` functions turns the physical network into ``M + 1`` stacked
copies.  Layer ``i`` carries packets that have already been processed by the
first ``i`` functions; an edge from ``u`` in layer ``i-1`` to ``u`` in layer
``i`` means "run function ``i`` at node ``u``".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple

from .topology import Network, NodeId, TopologyError, format_fraction, to_fraction


class ChainError(ValueError):
    pass


@dataclass(frozen=True)
class ServiceFunction:
    r: Fraction
    xi: Fraction
    hosts: tuple[NodeId, ...]
    r_per_host: tuple[tuple[NodeId, Fraction], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "r", to_fraction(self.r))
        object.__setattr__(self, "xi", to_fraction(self.xi))
        object.__setattr__(self, "hosts", tuple(self.hosts))
        overrides = dict(self.r_per_host)
        object.__setattr__(
            self, "r_per_host", tuple((u, to_fraction(v)) for u, v in overrides.items())
        )
        if self.r <= 0:
            raise ChainError("computation requirement r must be positive")
        if self.xi <= 0:
            raise ChainError("flow scaling xi must be positive")
        if not self.hosts:
            raise ChainError("a function needs at least one host")
        if len(set(self.hosts)) != len(self.hosts):
            raise ChainError("duplicate host")
        for u, ru in self.r_per_host:
            if u not in self.hosts:
                raise ChainError(f"per-host override for non-host {u!r}")
            if ru <= 0:
                raise ChainError("per-host r must be positive")

    def r_at(self, u: NodeId) -> Fraction:
        for host, ru in self.r_per_host:
            if host == u:
                return ru
        return self.r


@dataclass(frozen=True)
class ServiceChain:
    id: str
    functions: tuple[ServiceFunction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))

    @property
    def length(self) -> int:
        return len(self.functions)

    def restricted_to(self, host: NodeId) -> "ServiceChain":
        """Same chain with every function pinned to a single host."""
        fns = []
        for f in self.functions:
            if host not in f.hosts:
                raise ChainError(f"node {host!r} cannot host every function of chain {self.id!r}")
            r_host = tuple((u, r) for u, r in f.r_per_host if u == host)
            fns.append(ServiceFunction(f.r, f.xi, (host,), r_host))
        return ServiceChain(self.id, tuple(fns))


@dataclass(frozen=True)
class ScalingProfile:
    """Cumulative flow multiplicities ``w[0..M]`` and compute loads ``x[1..M]``.

    ``x`` is stored zero-based: ``x[i - 1]`` is the load of function ``i``.
    """

    w: tuple[Fraction, ...]
    x: tuple[Fraction, ...]
    chain: ServiceChain = field(repr=False, compare=False, default=None)

    def compute_load(self, i: int, host: NodeId | None = None) -> Fraction:
        """Compute units per input packet for function ``i`` (1-based) at ``host``."""
        if host is None or self.chain is None:
            return self.x[i - 1]
        return self.chain.functions[i - 1].r_at(host) * self.w[i - 1]


def scaling_profile(chain: ServiceChain) -> ScalingProfile:
    w = [Fraction(1)]
    x = []
    for f in chain.functions:
        x.append(f.r * w[-1])
        w.append(w[-1] * f.xi)
    return ScalingProfile(tuple(w), tuple(x), chain)


def chain_to_dict(chain: ServiceChain) -> dict:
    fns = []
    for f in chain.functions:
        item = {"r": format_fraction(f.r), "xi": format_fraction(f.xi), "hosts": list(f.hosts)}
        if f.r_per_host:
            item["r_per_host"] = {u: format_fraction(r) for u, r in f.r_per_host}
        fns.append(item)
    return {"id": chain.id, "functions": fns}


def chain_from_dict(doc: dict) -> ServiceChain:
    try:
        fns = tuple(
            ServiceFunction(
                to_fraction(item["r"]),
                to_fraction(item["xi"]),
                tuple(item["hosts"]),
                tuple((item.get("r_per_host") or {}).items()),
            )
            for item in doc.get("functions", [])
        )
        return ServiceChain(str(doc["id"]), fns)
    except (KeyError, TypeError, TopologyError) as exc:
        raise ChainError(f"malformed chain entry: {exc}") from exc


class LayeredEdge(NamedTuple):
    id: int
    tail: int
    head: int
    kind: str  # "tx" or "cpu"
    stage: int  # layer for "tx", function index (1-based) for "cpu"
    u: NodeId
    v: NodeId
    resource: int


class LayeredGraph:
    """The ``(M+1)``-layer expansion of a network for one chain.

    Layered node ``layer * n + k`` is the copy of ``net.nodes[k]`` in ``layer``.
    Edges are numbered layer by layer: transmission edges of layer 0, then the
    computation edges into layer 1, then transmission edges of layer 1, and so
    on.  Edge ids double as the deterministic tie-break order for routing.
    """

    def __init__(self, net: Network, chain: ServiceChain):
        self.net = net
        self.chain = chain
        self.profile = scaling_profile(chain)
        self.M = chain.length
        self.n_layers = self.M + 1
        n = net.n
        for i, f in enumerate(chain.functions, start=1):
            for u in f.hosts:
                if u not in net:
                    raise ChainError(f"function {i} of chain {chain.id!r}: host {u!r} not in network")
                if net.mu(u) <= 0:
                    raise ChainError(
                        f"function {i} of chain {chain.id!r}: host {u!r} has no compute capacity"
                    )
        arcs = net.arcs()
        edges: list[LayeredEdge] = []
        weights: list[Fraction] = []
        for layer in range(self.n_layers):
            if layer > 0:
                f = chain.functions[layer - 1]
                for u in f.hosts:
                    k = net.index(u)
                    edges.append(
                        LayeredEdge(len(edges), (layer - 1) * n + k, layer * n + k, "cpu",
                                    layer, u, u, net.node_resource(u))
                    )
                    weights.append(self.profile.compute_load(layer, u))
            for u, v, link in arcs:
                edges.append(
                    LayeredEdge(len(edges), layer * n + net.index(u), layer * n + net.index(v),
                                "tx", layer, u, v, link)
                )
                weights.append(self.profile.w[layer])
        self.edges = edges
        self.weight_exact = weights
        self.weight = [float(x) for x in weights]
        self.resource = [e.resource for e in edges]
        self.head = [e.head for e in edges]
        self.tail = [e.tail for e in edges]
        self.out_edges: list[list[int]] = [[] for _ in range(self.n_nodes)]
        self.in_edges: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for e in edges:
            self.out_edges[e.tail].append(e.id)
            self.in_edges[e.head].append(e.id)

    @property
    def n_nodes(self) -> int:
        return self.net.n * self.n_layers

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def node(self, u: NodeId, layer: int) -> int:
        if not 0 <= layer <= self.M:
            raise ChainError(f"layer {layer} out of range")
        return layer * self.net.n + self.net.index(u)

    def label(self, idx: int) -> tuple[NodeId, int]:
        layer, k = divmod(idx, self.net.n)
        return self.net.nodes[k], layer

    def source(self, u: NodeId) -> int:
        return self.node(u, 0)

    def sink(self, u: NodeId) -> int:
        return self.node(u, self.M)

    @cached_property
    def transmission_edges(self) -> list[int]:
        return [e.id for e in self.edges if e.kind == "tx"]

    @cached_property
    def computation_edges(self) -> list[int]:
        return [e.id for e in self.edges if e.kind == "cpu"]

    def edge_by_label(self, kind: str, stage: int, u: NodeId, v: NodeId | None = None) -> int:
        v = u if v is None else v
        for e in self.edges:
            if e.kind == kind and e.stage == stage and e.u == u and e.v == v:
                return e.id
        raise ChainError(f"no {kind} edge ({u!r}, {v!r}) at stage {stage}")


def build_layered_graph(net: Network, chain: ServiceChain) -> LayeredGraph:
    return LayeredGraph(net, chain)


class RouteError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Route:
    """A service chain path or Steiner arborescence inside one layered graph.

    For paths ``edges`` is the traversal order; for arborescences it is the
    sorted edge-id set.
    """

    lg: LayeredGraph
    edges: tuple[int, ...]
    kind: str
    root: int
    terminals: tuple[int, ...]
    commodity: str | None = None

    def __post_init__(self):
        if self.kind not in ("path", "arborescence"):
            raise RouteError(f"unknown route kind {self.kind!r}")

    @property
    def key(self) -> tuple:
        return (self.kind, self.root, self.terminals, tuple(sorted(self.edges)))

    def __eq__(self, other):
        return isinstance(other, Route) and other.lg is self.lg and other.key == self.key

    def __hash__(self):
        return hash(self.key)

    @cached_property
    def children(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for e in sorted(self.edges):
            out.setdefault(self.lg.tail[e], []).append(e)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def terminal_set(self) -> frozenset:
        return frozenset(self.terminals)

    def cost(self, costs) -> float:
        return sum(costs[e] for e in self.edges)

    @cached_property
    def loads_exact(self) -> dict[int, Fraction]:
        """Work per admitted packet on each resource (exact)."""
        out: dict[int, Fraction] = {}
        for e in self.edges:
            r = self.lg.resource[e]
            out[r] = out.get(r, 0) + self.lg.weight_exact[e]
        return out

    @cached_property
    def loads(self) -> tuple[tuple[int, float], ...]:
        return tuple((r, float(x)) for r, x in sorted(self.loads_exact.items()))

    def validate(self) -> None:
        """Check the service chain path / Steiner arborescence invariants."""
        lg = self.lg
        edges = list(self.edges)
        if len(set(edges)) != len(edges):
            raise RouteError("repeated edge")
        indeg: dict[int, int] = {}
        for e in edges:
            h = lg.head[e]
            indeg[h] = indeg.get(h, 0) + 1
            if indeg[h] > 1:
                raise RouteError(f"layered node {lg.label(h)} entered twice")
        if self.root in indeg:
            raise RouteError("root has an incoming edge")
        # reachability from the root over route edges
        seen = {self.root}
        stack = [self.root]
        kids = self.children
        while stack:
            v = stack.pop()
            for e in kids.get(v, ()):
                h = lg.head[e]
                if h not in seen:
                    seen.add(h)
                    stack.append(h)
        for e in edges:
            if lg.tail[e] not in seen:
                raise RouteError("edge not reachable from root")
        for t in self.terminals:
            if t not in seen:
                raise RouteError(f"terminal {lg.label(t)} not reached")
            if lg.label(t)[1] != lg.M:
                raise RouteError("terminal not in the last layer")
        for v in seen:
            if v != self.root and v not in indeg:
                raise RouteError("orphan node")
            if not kids.get(v) and v not in self.terminal_set and v != self.root:
                raise RouteError(f"non-terminal leaf {lg.label(v)}")
        if self.kind == "path":
            if len(self.terminals) != 1:
                raise RouteError("a path has exactly one terminal")
            v = self.root
            for e in edges:
                if lg.tail[e] != v:
                    raise RouteError("path edges are not consecutive")
                v = lg.head[e]
            if v != self.terminals[0]:
                raise RouteError("path does not end at its terminal")


def make_path(lg: LayeredGraph, edges, source: int, target: int, commodity=None) -> Route:
    return Route(lg, tuple(edges), "path", source, (target,), commodity)


def make_tree(lg: LayeredGraph, edges, root: int, terminals, commodity=None) -> Route:
    return Route(lg, tuple(sorted(edges)), "arborescence", root, tuple(terminals), commodity)


class Transmit(NamedTuple):
    u: NodeId
    v: NodeId
    stage: int


class Process(NamedTuple):
    node: NodeId
    function: int


class Duplicate(NamedTuple):
    node: NodeId
    stage: int
    copies: int


def map_to_physical(route: Route) -> list:
    """Translate a layered route into physical actions in depth-first order.

    Transmission edges become ``Transmit``, computation edges ``Process`` and
    any layered node with more than one outgoing route edge emits a
    ``Duplicate`` before its branches.
    """
    lg = route.lg
    kids = route.children
    actions: list = []

    def visit(v: int) -> None:
        out = kids.get(v, ())
        if len(out) > 1:
            u, layer = lg.label(v)
            actions.append(Duplicate(u, layer, len(out)))
        for e in out:
            edge = lg.edges[e]
            if edge.kind == "tx":
                actions.append(Transmit(edge.u, edge.v, edge.stage))
            else:
                actions.append(Process(edge.u, edge.stage))
            visit(edge.head)

    visit(route.root)
    return actions
