"""Minimum-cost routes on a cost-weighted layered graph.

All functions take ``costs`` as a sequence indexed by layered edge id.  Costs
may be floats or ``Fraction``; with fractions every comparison is exact,
with floats ties are detected with a small relative tolerance.  Costs must be
nonnegative.

Ties are broken by the lexicographic order of edge-id sequences, which makes
every routine deterministic.
"""

from __future__ import annotations

import heapq
import logging
from fractions import Fraction
from typing import Sequence

import networkx as nx

from .chaining import LayeredGraph, Route, make_path, make_tree

log = logging.getLogger(__name__)

EXACT_TERMINAL_BOUND = 8
REL_TOL = 1e-12


class RoutingError(RuntimeError):
    pass


class Unreachable(RoutingError):
    pass


class TooManyTerminals(RoutingError):
    pass


def _tol(costs) -> float:
    if costs and isinstance(costs[0], Fraction):
        return 0
    return REL_TOL


def dijkstra(out_edges, head, costs, sources, n_nodes, target=None):
    """Multi-source Dijkstra.  ``sources`` maps node -> initial distance.

    Returns ``(dist, parent_edge)``; unreachable nodes have ``dist is None``.
    Ties settle the smaller node index first, and a node's parent is the
    first edge that reached it at its final distance.  With ``target`` the
    search stops once every node no farther than the target is settled;
    other entries may then be tentative.
    """
    dist = [None] * n_nodes
    parent = [-1] * n_nodes
    done = [False] * n_nodes
    heap = []
    for s, d0 in sources.items():
        if dist[s] is None or d0 < dist[s]:
            dist[s] = d0
            heap.append((d0, s))
    heapq.heapify(heap)
    pop, push = heapq.heappop, heapq.heappush
    bound = None
    while heap:
        d, v = pop(heap)
        if done[v]:
            continue
        if bound is not None and d > bound:
            break
        done[v] = True
        if v == target:
            bound = d
        for e in out_edges[v]:
            h = head[e]
            if done[h]:
                continue
            nd = d + costs[e]
            dh = dist[h]
            if dh is None or nd < dh:
                dist[h] = nd
                parent[h] = e
                push(heap, (nd, h))
    return dist, parent


def _lex_path(out_edges, in_edges, head, tail, costs, dist, src, dst, tol):
    """Lexicographically smallest simple min-cost path from ``src`` to ``dst``.

    Only "tight" edges (``dist[u] + c == dist[v]``) lie on min-cost paths.  A
    backward search from ``dst`` over tight edges marks the nodes that can
    still finish; a depth-first search from ``src`` in edge-id order over
    those nodes then finds the smallest edge sequence first.
    """
    if tol:
        slack = 1.0 + tol

        def tight(e, u, h):
            du, dh = dist[u], dist[h]
            return du is not None and dh is not None and du + costs[e] <= dh * slack + tol
    else:
        def tight(e, u, h):
            du, dh = dist[u], dist[h]
            return du is not None and dh is not None and du + costs[e] <= dh

    can = {dst}
    stack = [dst]
    while stack:
        v = stack.pop()
        for e in in_edges[v]:
            u = tail[e]
            if u not in can and tight(e, u, v):
                can.add(u)
                stack.append(u)
    if src not in can:
        raise Unreachable("target not reachable")
    if src == dst:
        return []

    path: list[int] = []
    on_path = {src}

    def dfs(v):
        for e in out_edges[v]:
            h = head[e]
            if h in can and h not in on_path and tight(e, v, h):
                path.append(e)
                if h == dst:
                    return True
                on_path.add(h)
                if dfs(h):
                    return True
                on_path.discard(h)
                path.pop()
        return False

    if not dfs(src):
        raise Unreachable("no simple min-cost path")
    return path


def shortest_path_edges(lg: LayeredGraph, costs, src: int, dst: int) -> list[int]:
    zero = 0 * costs[0] if costs else 0
    dist, _ = dijkstra(lg.out_edges, lg.head, costs, {src: zero}, lg.n_nodes, target=dst)
    if dist[dst] is None:
        raise Unreachable(f"{lg.label(dst)} unreachable from {lg.label(src)}")
    return _lex_path(lg.out_edges, lg.in_edges, lg.head, lg.tail, costs, dist, src, dst, _tol(costs))


def select_route_unicast(lg: LayeredGraph, costs, source, destination, commodity=None) -> Route:
    """Min-cost service chain path from ``source`` (layer 0) to ``destination`` (layer M)."""
    src, dst = lg.source(source), lg.sink(destination)
    edges = shortest_path_edges(lg, costs, src, dst)
    return make_path(lg, edges, src, dst, commodity)


def _tree_in_subgraph(lg: LayeredGraph, costs, sub_edges, root: int, terminals) -> list[int]:
    """Shortest-path arborescence inside ``sub_edges``, pruned to the terminals."""
    allowed = set(sub_edges)
    out = [[e for e in lst if e in allowed] for lst in lg.out_edges]
    _, parent = dijkstra(out, lg.head, costs, {root: 0}, lg.n_nodes)
    keep: set[int] = set()
    for t in terminals:
        v = t
        while v != root:
            e = parent[v]
            if e < 0:
                raise Unreachable(f"terminal {lg.label(t)} not spanned")
            if e in keep:
                break
            keep.add(e)
            v = lg.tail[e]
    return sorted(keep)


def steiner_dp(lg: LayeredGraph, costs, root: int, terminals: Sequence[int]):
    """Exact minimum Steiner arborescence (Dreyfus-Wagner on the directed graph).

    ``dp[S][v]`` is the cost of the cheapest arborescence rooted at ``v``
    reaching every terminal in ``S``.  Returns ``(cost, edge list)``.
    """
    k = len(terminals)
    n = lg.n_nodes
    rev_out = lg.in_edges
    rev_head = lg.tail
    full = (1 << k) - 1
    dp: list = [None] * (full + 1)
    back: list = [None] * (full + 1)
    zero = 0 * costs[0] if costs else 0
    for j, t in enumerate(terminals):
        dist, par = dijkstra(rev_out, rev_head, costs, {t: zero}, n)
        dp[1 << j] = dist
        back[1 << j] = [("edge", par[v]) if par[v] >= 0 else None for v in range(n)]
    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0:
            continue
        low = mask & -mask
        g = [None] * n
        gb = [None] * n
        sub = (mask - 1) & mask
        while sub:
            if sub & low:
                a, b = dp[sub], dp[mask ^ sub]
                for v in range(n):
                    if a[v] is None or b[v] is None:
                        continue
                    c = a[v] + b[v]
                    if g[v] is None or c < g[v]:
                        g[v] = c
                        gb[v] = sub
            sub = (sub - 1) & mask
        seeds = {v: g[v] for v in range(n) if g[v] is not None}
        dist, par = dijkstra(rev_out, rev_head, costs, seeds, n)
        dp[mask] = dist
        bk = [None] * n
        for v in range(n):
            if dist[v] is None:
                continue
            if par[v] >= 0:
                bk[v] = ("edge", par[v])
            else:
                bk[v] = ("split", gb[v])
        back[mask] = bk
    if dp[full][root] is None:
        raise Unreachable("some terminal is unreachable from the root")

    edges: set[int] = set()
    stack = [(full, root)]
    while stack:
        mask, v = stack.pop()
        if mask & (mask - 1) == 0 and v == terminals[mask.bit_length() - 1]:
            continue
        step = back[mask][v]
        if step is None:
            continue
        if step[0] == "edge":
            e = step[1]
            edges.add(e)
            stack.append((mask, lg.head[e]))
        else:
            sub = step[1]
            stack.append((sub, v))
            stack.append((mask ^ sub, v))
    return dp[full][root], sorted(edges)


def select_route_multicast(lg: LayeredGraph, costs, source, destinations,
                           commodity=None, terminal_bound: int = EXACT_TERMINAL_BOUND) -> Route:
    """Exact min-cost service chain Steiner arborescence."""
    destinations = list(dict.fromkeys(destinations))
    if len(destinations) == 1:
        return select_route_unicast(lg, costs, source, destinations[0], commodity)
    if len(destinations) > terminal_bound:
        raise TooManyTerminals(
            f"{len(destinations)} terminals exceed the exact bound {terminal_bound}; use the approximation"
        )
    root = lg.source(source)
    terms = [lg.sink(d) for d in destinations]
    _, union = steiner_dp(lg, costs, root, terms)
    heads = {lg.head[e] for e in union}
    if len(heads) == len(union) and root not in heads:
        tree = union
    else:
        tree = _tree_in_subgraph(lg, costs, union, root, terms)
    return make_tree(lg, tree, root, terms, commodity)


def select_route_approx(lg: LayeredGraph, costs, source, destinations, commodity=None,
                        measure_ratio: bool = False) -> Route:
    """Approximate Steiner arborescence built from shortest paths.

    Three candidate unions are cleaned into arborescences and the cheapest
    wins: the minimum spanning arborescence of the terminals' metric closure
    (closure arcs expanded back into paths), the union of root-to-terminal
    shortest paths, and the best relay star (a shortest path to some node
    ``v`` followed by shortest paths from ``v`` to every terminal).  With at
    most three terminals the relay star through the optimum's top branch
    node costs at most twice the optimum; beyond that no constant factor is
    promised and ``measure_ratio`` logs the ratio actually achieved.
    """
    destinations = list(dict.fromkeys(destinations))
    if len(destinations) == 1:
        return select_route_unicast(lg, costs, source, destinations[0], commodity)
    root = lg.source(source)
    terms = [lg.sink(d) for d in destinations]
    points = [root] + terms
    tol = _tol(costs)
    zero = 0 * costs[0] if costs else 0
    n = lg.n_nodes
    dists = {}
    for p in points:
        dists[p], _ = dijkstra(lg.out_edges, lg.head, costs, {p: zero}, n)
    for t in terms:
        if dists[root][t] is None:
            raise Unreachable(f"terminal {lg.label(t)} unreachable")

    def expand(a, b):
        return _lex_path(lg.out_edges, lg.in_edges, lg.head, lg.tail, costs, dists[a], a, b, tol)

    candidates = []
    star = set()
    for t in terms:
        star.update(expand(root, t))
    candidates.append(star)

    closure = nx.DiGraph()
    closure.add_nodes_from(points)
    for a in points:
        for b in terms:
            if a != b and dists[a][b] is not None:
                closure.add_edge(a, b, weight=float(dists[a][b]))
    try:
        arb = nx.minimum_spanning_arborescence(closure, attr="weight", preserve_attrs=True)
        union = set()
        for a, b in sorted(arb.edges()):
            union.update(expand(a, b))
        candidates.append(union)
    except nx.NetworkXException:
        pass

    back = [dijkstra(lg.in_edges, lg.tail, costs, {t: zero}, n) for t in terms]
    relay, relay_cost = None, None
    for v in range(n):
        if dists[root][v] is None or any(d[v] is None for d, _ in back):
            continue
        c = dists[root][v] + sum(d[v] for d, _ in back)
        if relay_cost is None or c < relay_cost:
            relay, relay_cost = v, c
    if relay is not None:
        union = set(expand(root, relay))
        for _, par in back:
            v = relay
            while par[v] >= 0:
                union.add(par[v])
                v = lg.head[par[v]]
        candidates.append(union)

    best = None
    for cand in candidates:
        tree = _tree_in_subgraph(lg, costs, cand, root, terms)
        c = sum((costs[e] for e in tree), zero)
        if best is None or c < best[0]:
            best = (c, tree)
    route = make_tree(lg, best[1], root, terms, commodity)
    if measure_ratio and len(terms) <= EXACT_TERMINAL_BOUND:
        opt, _ = steiner_dp(lg, costs, root, terms)
        ratio = float(best[0] / opt) if opt else 1.0
        log.info("approximate Steiner ratio %.4f (cost %s, optimum %s)", ratio, best[0], opt)
    return route


def select_route_anycast(lg: LayeredGraph, costs, source, destinations, commodity=None) -> Route:
    """Shortest path to a virtual sink fed by zero-cost arcs from every destination."""
    destinations = list(dict.fromkeys(destinations))
    src = lg.source(source)
    sink = lg.n_nodes
    out = [list(lst) for lst in lg.out_edges] + [[]]
    inn = [list(lst) for lst in lg.in_edges] + [[]]
    head = list(lg.head)
    tail = list(lg.tail)
    aug = list(costs)
    zero = 0 * costs[0] if costs else 0
    first_virtual = len(head)
    for d in destinations:
        e = len(head)
        head.append(sink)
        tail.append(lg.sink(d))
        aug.append(zero)
        out[lg.sink(d)].append(e)
        inn[sink].append(e)
    dist, _ = dijkstra(out, head, aug, {src: zero}, lg.n_nodes + 1, target=sink)
    if dist[sink] is None:
        raise Unreachable("no destination reachable")
    path = _lex_path(out, inn, head, tail, aug, dist, src, sink, _tol(costs))
    assert path[-1] >= first_virtual
    end = lg.head[path[-2]] if len(path) > 1 else src
    return make_path(lg, path[:-1], src, end, commodity)


def route_cost(route: Route, costs):
    return sum((costs[e] for e in route.edges), 0 * costs[0] if costs else 0)
