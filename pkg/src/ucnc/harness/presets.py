"""Built-in Abilene scenarios.

Every preset uses base rate 1 for each commodity, so the run multiplier is
the per-commodity arrival rate directly.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..chaining import ServiceChain, ServiceFunction
from ..controller import Commodity
from ..topology import ABILENE_EDGES, Network, abilene_preset
from .scenario import Scenario, ScenarioError

COMPUTE_NODES = (3, 8)
MIXED_DEFAULT_SEED = 0
MIXED_GRID = 20  # r and xi are drawn on a 1/20 grid over [0.5, 2]


def _two_function_chain(cid: str) -> ServiceChain:
    f = ServiceFunction(1, 1, COMPUTE_NODES)
    return ServiceChain(cid, (f, f))


def abilene_2uc() -> Scenario:
    chain = _two_function_chain("two-step")
    comms = (
        Commodity("c1", 1, (11,), chain, 1.0),
        Commodity("c2", 4, (7,), chain, 1.0),
    )
    return Scenario("abilene-2uc", abilene_preset(), comms, lambdas=(0.45,),
                    description="two unicast commodities 1->11 and 4->7, two unit functions at {3, 8}")


def abilene_shrink() -> Scenario:
    chain = ServiceChain("shrink", (ServiceFunction(Fraction(1, 3), Fraction(1, 3), COMPUTE_NODES),))
    comms = (Commodity("c1", 2, (7,), chain, 1.0),)
    return Scenario("abilene-shrink", abilene_preset(), comms, lambdas=(2.5,),
                    description="2->7, one function with r = xi = 1/3 at {3, 8}")


def abilene_expand() -> Scenario:
    chain = ServiceChain("expand", (ServiceFunction(1, 3, COMPUTE_NODES),))
    comms = (Commodity("c1", 2, (7,), chain, 1.0),)
    return Scenario("abilene-expand", abilene_preset(), comms, lambdas=(0.8,),
                    description="2->7, one function with r = 1, xi = 3 at {3, 8}")


def abilene_mc() -> Scenario:
    chain = _two_function_chain("two-step")
    comms = (Commodity("m1", 1, (7, 11), chain, 1.0),)
    return Scenario("abilene-mc", abilene_preset(), comms, lambdas=(0.9,),
                    description="multicast 1->{7, 11}, two unit functions at {3, 8}")


def _grid_value(rng: np.random.Generator) -> Fraction:
    k = int(rng.integers(0, int(1.5 * MIXED_GRID) + 1))
    return Fraction(1, 2) + Fraction(k, MIXED_GRID)


def mixed_18(seed: int = MIXED_DEFAULT_SEED) -> Scenario:
    """Randomized mixed-cast instance on Abilene.

    Three chains with 2, 2 and 3 functions; every ``r`` and ``xi`` uniform on
    a 1/20 grid over [0.5, 2]; each function hostable at 4 random nodes, each
    host with unit compute.  Each chain carries 4 unicast and 2 two-destination
    multicast commodities, with every destination at least two hops from its
    source.
    """
    rng = np.random.default_rng(seed)
    nodes = list(range(1, 12))
    chains = []
    for name, length in (("phi1", 2), ("phi2", 2), ("phi3", 3)):
        fns = []
        for _ in range(length):
            hosts = tuple(sorted(int(h) for h in rng.choice(nodes, size=4, replace=False)))
            fns.append(ServiceFunction(_grid_value(rng), _grid_value(rng), hosts))
        chains.append(ServiceChain(name, tuple(fns)))
    compute_nodes = sorted({h for ch in chains for f in ch.functions for h in f.hosts})
    links = [(u, v, 1) for u, v in ABILENE_EDGES] + [(v, u, 1) for u, v in ABILENE_EDGES]
    net = Network.build({u: (1 if u in compute_nodes else 0) for u in nodes}, links)
    hops = net.hop_distances()
    comms = []
    for ch in chains:
        for j in range(6):
            n_dest = 1 if j < 4 else 2
            while True:
                s = int(rng.choice(nodes))
                far = [u for u in nodes if hops[s].get(u, 0) >= 2]
                if len(far) >= n_dest:
                    break
            dests = tuple(sorted(int(d) for d in rng.choice(far, size=n_dest, replace=False)))
            kind = "u" if n_dest == 1 else "m"
            comms.append(Commodity(f"{ch.id}-{kind}{j + 1}", s, dests, ch, 1.0))
    return Scenario("mixed-18", net, tuple(comms), lambdas=(0.1,),
                    description=f"18 random mixed-cast commodities over 3 chains (generator seed {seed})",
                    extra={"generator_seed": seed})


PRESETS = {
    "abilene-2uc": abilene_2uc,
    "abilene-shrink": abilene_shrink,
    "abilene-expand": abilene_expand,
    "abilene-mc": abilene_mc,
    "mixed-18": mixed_18,
}


def get_preset(name: str, generator_seed: int | None = None) -> Scenario:
    """Look up a preset; ``mixed-18`` accepts ``mixed-18:<seed>`` or ``generator_seed``."""
    base, _, suffix = name.partition(":")
    if base not in PRESETS:
        raise ScenarioError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    if base == "mixed-18":
        if suffix:
            try:
                generator_seed = int(suffix)
            except ValueError:
                raise ScenarioError(f"bad generator seed in {name!r}") from None
        return mixed_18(MIXED_DEFAULT_SEED if generator_seed is None else generator_seed)
    if suffix:
        raise ScenarioError(f"preset {base!r} takes no generator seed")
    return PRESETS[base]()
