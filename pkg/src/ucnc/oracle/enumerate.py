"""Brute-force enumeration of service chain paths and Steiner arborescences."""

from __future__ import annotations

from dataclasses import dataclass

from ..chaining import LayeredGraph, Route, make_path, make_tree


class EnumerationBoundExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class EnumerationBounds:
    max_nodes: int = 14
    max_terminals: int = 3
    max_routes: int = 100_000


DEFAULT_BOUNDS = EnumerationBounds()


def simple_paths(lg: LayeredGraph, src: int, dst: int, limit: int) -> list[tuple[int, ...]]:
    """All simple layered paths ``src -> dst`` as edge-id tuples, in lexicographic order."""
    # prune to nodes that can still reach dst
    can = {dst}
    stack = [dst]
    while stack:
        v = stack.pop()
        for e in lg.in_edges[v]:
            u = lg.tail[e]
            if u not in can:
                can.add(u)
                stack.append(u)
    out: list[tuple[int, ...]] = []
    if src not in can:
        return out
    path: list[int] = []
    on = {src}

    def dfs(v):
        if v == dst:
            out.append(tuple(path))
            if len(out) > limit:
                raise EnumerationBoundExceeded(f"more than {limit} paths")
            return
        for e in lg.out_edges[v]:
            h = lg.head[e]
            if h in can and h not in on:
                on.add(h)
                path.append(e)
                dfs(h)
                path.pop()
                on.discard(h)

    dfs(src)
    return out


def _arborescences(lg: LayeredGraph, root: int, terms: list[int], limit: int) -> list[frozenset]:
    per_terminal = [simple_paths(lg, root, t, limit) for t in terms]
    # partial unions as (edge set, parent map); in-degree <= 1 checked as we go
    partial: dict[frozenset, dict[int, int]] = {frozenset(): {}}
    for paths in per_terminal:
        nxt: dict[frozenset, dict[int, int]] = {}
        for edges, parent in partial.items():
            for p in paths:
                par = dict(parent)
                ok = True
                for e in p:
                    h = lg.head[e]
                    prev = par.get(h)
                    if prev is None:
                        par[h] = e
                    elif prev != e:
                        ok = False
                        break
                if not ok or root in par:
                    continue
                key = edges.union(p)
                if key not in nxt:
                    nxt[key] = par
                    if len(nxt) > limit:
                        raise EnumerationBoundExceeded(f"more than {limit} arborescences")
        partial = nxt
    return sorted(partial, key=lambda s: sorted(s))


def enumerate_routes(lg: LayeredGraph, commodity, bounds: EnumerationBounds = DEFAULT_BOUNDS) -> list[Route]:
    """Every service chain path (one destination) or arborescence (several) for ``commodity``.

    Arborescences are unions of one root-to-terminal path per terminal whose
    layered nodes are entered at most once, deduplicated by edge set.
    Anycast commodities yield the paths to every destination.
    """
    if lg.net.n > bounds.max_nodes:
        raise EnumerationBoundExceeded(f"{lg.net.n} nodes exceed the bound {bounds.max_nodes}")
    root = lg.source(commodity.source)
    dests = list(commodity.destinations)
    cid = commodity.id
    if commodity.kind == "anycast":
        out = []
        for d in dests:
            t = lg.sink(d)
            out += [make_path(lg, p, root, t, cid) for p in simple_paths(lg, root, t, bounds.max_routes)]
            if len(out) > bounds.max_routes:
                raise EnumerationBoundExceeded(f"more than {bounds.max_routes} routes")
        return out
    if len(dests) == 1:
        t = lg.sink(dests[0])
        return [make_path(lg, p, root, t, cid) for p in simple_paths(lg, root, t, bounds.max_routes)]
    if len(dests) > bounds.max_terminals:
        raise EnumerationBoundExceeded(f"{len(dests)} terminals exceed the bound {bounds.max_terminals}")
    terms = [lg.sink(d) for d in dests]
    return [make_tree(lg, s, root, terms, cid) for s in _arborescences(lg, root, terms, bounds.max_routes)]
