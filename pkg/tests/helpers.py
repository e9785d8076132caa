"""Small instance generators shared by the test modules."""

from __future__ import annotations

import random
from fractions import Fraction

from ucnc.chaining import ServiceChain, ServiceFunction
from ucnc.controller import Commodity
from ucnc.topology import Network

SMALL_FRACTIONS = [Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1), Fraction(3, 2), Fraction(2)]


def pair_network() -> Network:
    """Two nodes a, b joined both ways; both compute."""
    return Network.build({"a": 1, "b": 1}, [("a", "b", 1), ("b", "a", 1)])


def pair_chain() -> ServiceChain:
    return ServiceChain("pair", (
        ServiceFunction(Fraction(1, 10), 1, ("b",)),
        ServiceFunction(2, Fraction(4, 5), ("a",)),
    ))


def random_network(rng: random.Random, n_min=3, n_max=8, extra=0.5, undirected=False) -> Network:
    """Connected random graph: a random tree in both directions plus a few extra arcs."""
    n = rng.randint(n_min, n_max)
    nodes = list(range(n))
    arcs = set()
    for v in range(1, n):
        u = rng.randrange(v)
        arcs.add((u, v))
        if not undirected:
            arcs.add((v, u))
    for _ in range(int(extra * n)):
        u, v = rng.sample(nodes, 2)
        if undirected and (v, u) in arcs:
            continue
        arcs.add((u, v))
    n_compute = rng.randint(1, max(1, n // 2))
    compute = set(rng.sample(nodes, n_compute))
    node_caps = {u: (rng.choice(SMALL_FRACTIONS) if u in compute else 0) for u in nodes}
    links = [(u, v, rng.choice(SMALL_FRACTIONS)) for u, v in sorted(arcs)]
    return Network.build(node_caps, links, directed=not undirected)


def random_chain(rng: random.Random, net: Network, max_len=2, name="phi") -> ServiceChain:
    compute = [u for u in net.nodes if net.mu(u) > 0]
    fns = []
    for _ in range(rng.randint(0, max_len)):
        hosts = tuple(sorted(rng.sample(compute, rng.randint(1, len(compute)))))
        fns.append(ServiceFunction(rng.choice(SMALL_FRACTIONS), rng.choice(SMALL_FRACTIONS), hosts))
    return ServiceChain(name, tuple(fns))


def random_commodity(rng: random.Random, net: Network, chain: ServiceChain, max_terms=3, cid="c") -> Commodity:
    nodes = list(net.nodes)
    src = rng.choice(nodes)
    others = [u for u in nodes if u != src]
    k = rng.randint(1, min(max_terms, len(others)))
    dests = tuple(sorted(rng.sample(others, k)))
    return Commodity(cid, src, dests, chain, 1.0)
