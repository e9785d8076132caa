"""Edge flows on a layered graph: conservation checks, composition and decomposition.

An edge flow map sends layered edge id to a nonnegative rational: flow units
on transmission edges, compute units on computation edges.  A route carrying
``lam`` packets per slot induces ``lam * weight_e`` on each of its edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterable

from ..chaining import LayeredGraph, Route, make_path, make_tree
from .enumerate import EnumerationBoundExceeded
from .lp import OPTIMAL, ExactLP

MAX_MICRO_DENOMINATOR = 10**6


class DecompositionError(ValueError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual or {}


@dataclass
class ConservationReport:
    residuals: dict = field(default_factory=dict)  # layered node -> Fraction

    @property
    def ok(self) -> bool:
        return not self.residuals

    def __bool__(self):
        return self.ok


def verify_conservation(lg: LayeredGraph, flow: dict, source=None, terminals: Iterable = (),
                        duplication: Iterable[int] = ()) -> ConservationReport:
    """Check generalized flow conservation at every layered node.

    Inflow from a computation edge into layer ``i`` counts ``xi_i / r_i`` per
    compute unit; outflow into computation ``i + 1`` counts ``1 / r_{i+1}``.
    The source copy, the terminal copies (physical ids) and any explicitly
    listed duplication nodes (layered ids) are not checked.
    """
    for e, f in flow.items():
        if f < 0:
            raise ValueError(f"negative flow on edge {e}")
    skip = set(duplication)
    if source is not None:
        skip.add(lg.source(source))
    skip.update(lg.sink(t) for t in terminals)
    fns = lg.chain.functions
    balance: dict[int, Fraction] = {}
    for e, f in flow.items():
        if not f:
            continue
        edge = lg.edges[e]
        f = Fraction(f)
        if edge.kind == "tx":
            into = out = f
        else:
            fn = fns[edge.stage - 1]
            r = fn.r_at(edge.u)
            out = f / r
            into = f * fn.xi / r
        balance[edge.tail] = balance.get(edge.tail, Fraction(0)) - out
        balance[edge.head] = balance.get(edge.head, Fraction(0)) + into
    return ConservationReport({v: b for v, b in sorted(balance.items()) if b and v not in skip})


def compose(lg: LayeredGraph, weighted_routes) -> dict[int, Fraction]:
    """Edge flows induced by ``[(route, rate), ...]``."""
    flow: dict[int, Fraction] = {}
    for route, rate in weighted_routes:
        rate = Fraction(rate)
        for e in route.edges:
            flow[e] = flow.get(e, Fraction(0)) + rate * lg.weight_exact[e]
    return {e: f for e, f in sorted(flow.items()) if f}


def _packet_rates(lg: LayeredGraph, flow: dict) -> dict[int, Fraction]:
    return {e: Fraction(f) / lg.weight_exact[e] for e, f in sorted(flow.items()) if f}


def micro_denominator(lg: LayeredGraph, flow: dict, cap: int = MAX_MICRO_DENOMINATOR) -> int:
    """Smallest ``z`` making every edge carry an integer number of ``1/z`` packet units."""
    z = 1
    for g in _packet_rates(lg, flow).values():
        z = lcm(z, g.denominator)
        if z > cap:
            raise DecompositionError(f"micro-packet denominator exceeds {cap}")
    return z


def decompose_flow(lg: LayeredGraph, flow: dict, source, terminals) -> list[tuple[Route, Fraction]]:
    """Write ``flow`` as a nonnegative combination of service chain routes.

    With one terminal the flow is cut into ``1/z`` micro packets and paths
    are peeled off one at a time, always following the lowest positive edge
    id.  With several terminals the weights come from an exact LP over the
    arborescences of the flow's support.
    """
    terminals = list(dict.fromkeys(terminals))
    if not terminals:
        raise DecompositionError("no terminal")
    if len(terminals) == 1:
        return _peel_paths(lg, flow, source, terminals[0])
    return _tree_weights(lg, flow, source, terminals)


def _peel_paths(lg, flow, source, terminal):
    report = verify_conservation(lg, flow, source, [terminal])
    if not report.ok:
        raise DecompositionError("flow violates conservation", report.residuals)
    z = micro_denominator(lg, flow)
    units = {e: int(g * z) for e, g in _packet_rates(lg, flow).items()}
    root, sink = lg.source(source), lg.sink(terminal)
    weights: dict[tuple, int] = {}
    while any(units.get(e, 0) for e in lg.out_edges[root]):
        path = _positive_path(lg, units, root, sink)
        if path is None:
            raise DecompositionError("source flow does not reach the terminal",
                                     {e: Fraction(u, z) for e, u in units.items() if u})
        bottleneck = min(units[e] for e in path)
        for e in path:
            units[e] -= bottleneck
        key = tuple(path)
        weights[key] = weights.get(key, 0) + bottleneck
    leftover = {e: Fraction(u, z) for e, u in units.items() if u}
    if leftover:
        raise DecompositionError("positive flow cycle carries no route", leftover)
    return [(make_path(lg, p, root, sink), Fraction(w, z)) for p, w in weights.items()]


def _positive_path(lg, units, root, sink):
    path: list[int] = []
    on = {root}

    def dfs(v):
        if v == sink:
            return True
        for e in lg.out_edges[v]:
            h = lg.head[e]
            if units.get(e, 0) > 0 and h not in on:
                on.add(h)
                path.append(e)
                if dfs(h):
                    return True
                path.pop()
                on.discard(h)
        return False

    return path if dfs(root) else None


def _support_paths(lg, support, root, t, limit):
    path: list[int] = []
    on = {root}
    out: list[tuple] = []

    def dfs(v):
        if v == t:
            out.append(tuple(path))
            if len(out) > limit:
                raise EnumerationBoundExceeded(f"more than {limit} paths on the support")
            return
        for e in lg.out_edges[v]:
            h = lg.head[e]
            if e in support and h not in on:
                on.add(h)
                path.append(e)
                dfs(h)
                path.pop()
                on.discard(h)

    dfs(root)
    return out


def _tree_weights(lg, flow, source, terminals, limit: int = 100_000):
    g = _packet_rates(lg, flow)
    support = set(g)
    root = lg.source(source)
    terms = [lg.sink(t) for t in terminals]
    trees: dict[frozenset, None] = {frozenset(): None}
    for t in terms:
        paths = _support_paths(lg, support, root, t, limit)
        nxt: dict[frozenset, None] = {}
        for base in trees:
            heads = {lg.head[e]: e for e in base}
            for p in paths:
                ok = True
                for e in p:
                    prev = heads.get(lg.head[e])
                    if prev is not None and prev != e:
                        ok = False
                        break
                if ok:
                    nxt[base.union(p)] = None
            if len(nxt) > limit:
                raise EnumerationBoundExceeded(f"more than {limit} arborescences on the support")
        trees = nxt
    trees_list = [t for t in sorted(trees, key=sorted) if len({lg.head[e] for e in t}) == len(t)]
    if not trees_list:
        raise DecompositionError("support contains no arborescence", dict(g))
    edges = sorted(support)
    row = {e: i for i, e in enumerate(edges)}
    lp = ExactLP(["="] * len(edges), [g[e] for e in edges])
    for t in trees_list:
        lp.add_column({row[e]: 1 for e in t}, 0, t)
    res = lp.solve()
    if res.status != OPTIMAL:
        raise DecompositionError("flow is not a combination of arborescences", dict(g))
    return [(make_tree(lg, t, root, terms), x) for t, x in zip(trees_list, res.x) if x]
