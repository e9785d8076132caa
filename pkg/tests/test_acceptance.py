"""Acceptance checks, one group per criterion.

The terminal summary prints one PASS/FAIL line per criterion.  Simulations
run at the full horizon of 10^5 slots.
"""

import random
from fractions import Fraction

import pytest

from helpers import random_chain, random_commodity, random_network
from ucnc.chaining import ServiceChain, ServiceFunction, build_layered_graph
from ucnc.controller import Commodity, UCNCController
from ucnc.dataplane import DataPlane
from ucnc.harness import cli
from ucnc.harness.presets import get_preset, mixed_18
from ucnc.harness.runner import (
    STABLE_SLOPE,
    UNSTABLE_SLOPE,
    draw_arrivals,
    make_policy,
    rows_to_csv,
    run,
)
from ucnc.oracle import (
    EnumerationBoundExceeded,
    capacity_feasible,
    compose,
    decompose_flow,
    enumerate_routes,
    max_scalar_rate,
    restrict_to_host,
    verify_conservation,
    verify_witness,
)
from ucnc.routing import (
    route_cost,
    select_route_approx,
    select_route_multicast,
    select_route_unicast,
)
from ucnc.topology import Network

T = 100_000
SEED = 1
crit = pytest.mark.criterion


def policy_theta(sc, policy):
    comms = make_policy(policy, sc.net, sc.commodities).commodities
    return max_scalar_rate(sc.net, comms)


# -- 1 ---------------------------------------------------------------------
C1 = crit(1, "capacity boundary, two unicast commodities")


@C1
def test_criterion_1_oracle():
    sc = get_preset("abilene-2uc")
    assert max_scalar_rate(sc.net, sc.commodities, [1, 1]) == Fraction(1, 2)


@C1
def test_criterion_1_inside():
    res = run(get_preset("abilene-2uc").with_(horizon=T), 0.45, SEED)
    assert res.slope < STABLE_SLOPE
    for thr in res.throughput:
        assert abs(thr - 0.45) <= 0.05 * 0.45


@C1
def test_criterion_1_outside():
    res = run(get_preset("abilene-2uc").with_(horizon=T), 0.55, SEED)
    assert res.slope > UNSTABLE_SLOPE


# -- 2 ---------------------------------------------------------------------
C2 = crit(2, "flow shrinkage vs nearest-to-destination")


@C2
def test_criterion_2_oracle():
    sc = get_preset("abilene-shrink")
    assert max_scalar_rate(sc.net, sc.commodities) == 3
    assert max_scalar_rate(sc.net, restrict_to_host(sc.commodities, 8)) == 2
    assert policy_theta(sc, "nearest-to-destination") == 2


@C2
@pytest.mark.parametrize("policy, stable", [("ucnc-ento", True), ("nearest-to-destination", False)])
def test_criterion_2_simulation(policy, stable):
    res = run(get_preset("abilene-shrink").with_(horizon=T), 2.5, SEED, policy)
    assert (res.slope < STABLE_SLOPE) if stable else (res.slope > UNSTABLE_SLOPE)


# -- 3 ---------------------------------------------------------------------
C3 = crit(3, "flow expansion vs nearest-to-source")


@C3
def test_criterion_3_oracle():
    sc = get_preset("abilene-expand")
    assert max_scalar_rate(sc.net, sc.commodities) == 1
    assert max_scalar_rate(sc.net, restrict_to_host(sc.commodities, 3)) == Fraction(2, 3)
    assert policy_theta(sc, "nearest-to-source") == Fraction(2, 3)


@C3
@pytest.mark.parametrize("policy, stable", [("ucnc-ento", True), ("nearest-to-source", False)])
def test_criterion_3_simulation(policy, stable):
    res = run(get_preset("abilene-expand").with_(horizon=T), 0.8, SEED, policy)
    assert (res.slope < STABLE_SLOPE) if stable else (res.slope > UNSTABLE_SLOPE)


# -- 4 ---------------------------------------------------------------------
C4 = crit(4, "multicast gain over split unicast")


@C4
def test_criterion_4_oracle():
    sc = get_preset("abilene-mc")
    assert max_scalar_rate(sc.net, sc.commodities) == 1
    assert max_scalar_rate(sc.net, sc.commodities, method="enumerate") == 1
    assert policy_theta(sc, "multicast-as-unicast") == Fraction(1, 2)


@C4
@pytest.mark.parametrize("policy, lam, stable", [
    ("ucnc-ento", 0.9, True),
    ("multicast-as-unicast", 0.9, False),
    ("multicast-as-unicast", 0.4, True),
])
def test_criterion_4_simulation(policy, lam, stable):
    res = run(get_preset("abilene-mc").with_(horizon=T), lam, SEED, policy)
    assert (res.slope < STABLE_SLOPE) if stable else (res.slope > UNSTABLE_SLOPE)


# -- 5 ---------------------------------------------------------------------
C5 = crit(5, "mixed-cast statistics over generator seeds")
MIXED_SEEDS = range(10)
_thetas = {}


def mixed_thetas(seed):
    if seed not in _thetas:
        sc = mixed_18(seed)
        _thetas[seed] = (max_scalar_rate(sc.net, sc.commodities),
                         policy_theta(sc, "multicast-as-unicast"))
    return _thetas[seed]


@C5
def test_criterion_5_multicast_beats_split():
    wins = 0
    for seed in MIXED_SEEDS:
        mc, split = mixed_thetas(seed)
        print(f"mixed-18 seed {seed}: theta multicast {float(mc):.4f}, split {float(split):.4f}")
        wins += mc > split
    assert wins >= 0.8 * len(MIXED_SEEDS)


@C5
@pytest.mark.parametrize("seed", MIXED_SEEDS)
def test_criterion_5_stability_band(seed):
    theta = float(mixed_thetas(seed)[0])
    sc = mixed_18(seed).with_(horizon=T)
    inside = run(sc, 0.9 * theta, SEED)
    outside = run(sc, 1.1 * theta, SEED)
    print(f"seed {seed}: slope at 0.9 theta {inside.slope:.3g}, at 1.1 theta {outside.slope:.3g}")
    assert inside.slope < STABLE_SLOPE
    assert outside.slope > UNSTABLE_SLOPE


# -- 6 ---------------------------------------------------------------------
C6 = crit(6, "oracle soundness on random instances")


def _skip_nodes(route, source, terminals):
    lg = route.lg
    dup = [v for v, kids in route.children.items() if len(kids) > 1]
    return dup, {lg.source(source), *(lg.sink(t) for t in terminals), *dup}


@C6
def test_criterion_6_random_instances():
    rng = random.Random(606)
    done = 0
    while done < 100:
        net = random_network(rng, n_max=6)
        chain = random_chain(rng, net)
        lg = build_layered_graph(net, chain)
        comms = [random_commodity(rng, net, chain, max_terms=3, cid=f"c{k}") for k in range(rng.randint(1, 2))]
        try:
            routes = enumerate_routes(lg, comms[0])
        except EnumerationBoundExceeded:
            continue
        if not routes:
            continue
        c = comms[0]

        # route-induced flows conserve; a bump on one edge shows up at exactly its endpoints
        for route in rng.sample(routes, min(3, len(routes))):
            dup, skip = _skip_nodes(route, c.source, c.destinations)
            flow = compose(lg, [(route, 1)])
            assert verify_conservation(lg, flow, c.source, c.destinations, dup).ok
            free = [e for e in range(lg.n_edges) if lg.tail[e] not in skip and lg.head[e] not in skip]
            if free:
                e = rng.choice(free)
                bumped = dict(flow)
                bumped[e] = bumped.get(e, 0) + Fraction(1, 10)
                report = verify_conservation(lg, bumped, c.source, c.destinations, dup)
                assert set(report.residuals) == {lg.tail[e], lg.head[e]}

        # compose then decompose
        chosen = rng.sample(routes, min(3, len(routes)))
        raw = [Fraction(rng.randint(1, 9)) for _ in chosen]
        combo = [(r, w / sum(raw)) for r, w in zip(chosen, raw)]
        flow = compose(lg, combo)
        parts = decompose_flow(lg, flow, c.source, c.destinations)
        assert compose(lg, parts) == flow
        assert sum(w for _, w in parts) == 1

        # witnesses re-verify
        theta = max_scalar_rate(net, comms)
        lam = [theta * Fraction(rng.randint(1, 10), 10) for _ in comms]
        res = capacity_feasible(net, comms, lam)
        assert res.feasible
        assert verify_witness(net, comms, lam, res.witness) == []
        over = [theta * Fraction(101, 100) for _ in comms]
        assert not capacity_feasible(net, comms, over).feasible
        done += 1


# -- 7 ---------------------------------------------------------------------
C7 = crit(7, "route selection equals enumerated optimum; approximation within 2x")


@C7
def test_criterion_7_random_instances():
    rng = random.Random(707)
    done = 0
    worst = Fraction(1)
    while done < 50:
        net = random_network(rng, n_min=3, n_max=8, extra=0.3)
        chain = random_chain(rng, net)
        lg = build_layered_graph(net, chain)
        uc = random_commodity(rng, net, chain, max_terms=1)
        mc = random_commodity(rng, net, chain, max_terms=3)
        if len(mc.destinations) < 2:
            continue
        try:
            paths = enumerate_routes(lg, uc)
            trees = enumerate_routes(lg, mc)
        except EnumerationBoundExceeded:
            continue
        if not paths or not trees:
            continue
        costs = [Fraction(rng.randint(0, 6), rng.randint(1, 3)) for _ in range(lg.n_edges)]
        r = select_route_unicast(lg, costs, uc.source, uc.destinations[0])
        r.validate()
        assert route_cost(r, costs) == min(route_cost(p, costs) for p in paths)
        opt = min(route_cost(t, costs) for t in trees)
        m = select_route_multicast(lg, costs, mc.source, mc.destinations)
        m.validate()
        assert route_cost(m, costs) == opt
        a = select_route_approx(lg, costs, mc.source, mc.destinations)
        a.validate()
        got = route_cost(a, costs)
        assert got <= 2 * opt
        if opt:
            worst = max(worst, got / opt)
        done += 1
    print(f"worst approximation ratio over 50 instances: {float(worst):.3f}")


# -- 8 ---------------------------------------------------------------------
C8 = crit(8, "ENTO ordering, duplicate hops, hop bound, FIFO stability")


def _depths(route):
    lg = route.lg
    depth = {route.root: 0}
    stack = [route.root]
    while stack:
        v = stack.pop()
        for e in route.children.get(v, ()):
            depth[lg.head[e]] = depth[v] + 1
            stack.append(lg.head[e])
    return depth


@C8
@pytest.mark.parametrize("preset, lam", [("abilene-2uc", 0.45), ("abilene-mc", 0.9), ("mixed-18", 0.12)])
def test_criterion_8_audited_trace(preset, lam):
    sc = get_preset(preset)
    comms = sc.commodities
    ctrl = UCNCController(sc.net, comms)
    dp = DataPlane(sc.net, len(comms), audit=True)
    horizon = 3000
    counts = draw_arrivals(comms, lam, horizon, SEED).tolist()
    depth_cache = {}
    for t in range(horizon):
        for d in ctrl.decide(counts[t]):
            dp.admit(d.count, d.route, d.commodity, t)
        dp.step(t)  # raises on any ordering or work-conservation violation
        ctrl.end_slot()
        for p in dp.packets():
            key = id(p.route)
            if key not in depth_cache:
                depth_cache[key] = _depths(p.route)
            # hop count equals edges completed, so copies keep their parent's count
            assert p.hop == depth_cache[key][p.route.lg.tail[p.edge]]
    assert dp.audit_slots == horizon
    bound = sc.net.n * (max(c.chain.length for c in comms) + 1)
    assert dp.max_hop_seen <= bound
    if preset != "abilene-2uc":
        assert dp.duplications > 0


@C8
def test_criterion_8_fifo():
    sc = get_preset("abilene-2uc").with_(horizon=T)
    fifo = run(sc, 0.45, SEED, "ucnc-fifo")
    ento = run(sc, 0.45, SEED, "ucnc-ento")
    assert fifo.slope < STABLE_SLOPE
    for f, e in zip(fifo.mean_delay, ento.mean_delay):
        assert 0.1 < f / e < 10


# -- 9 ---------------------------------------------------------------------
C9 = crit(9, "undirected links halve capacity; UCNC stable inside")


def line_instance(directed):
    links = [("a", "b", 1), ("b", "c", 1)]
    if directed:
        links += [("b", "a", 1), ("c", "b", 1)]
    net = Network.build({"a": 0, "b": 1, "c": 0}, links, directed=directed)
    chain = ServiceChain("half", (ServiceFunction(Fraction(1, 2), 1, ("b",)),))
    comms = (Commodity("ac", "a", ("c",), chain, 1.0), Commodity("ca", "c", ("a",), chain, 1.0))
    return net, comms


@C9
def test_criterion_9_oracle():
    assert max_scalar_rate(*line_instance(True)) == 1
    assert max_scalar_rate(*line_instance(False)) == Fraction(1, 2)


@C9
def test_criterion_9_simulation():
    from ucnc.harness.scenario import Scenario

    net, comms = line_instance(False)
    sc = Scenario("line", net, comms, horizon=T)
    assert run(sc, 0.45, SEED).slope < STABLE_SLOPE
    assert run(sc, 0.55, SEED).slope > UNSTABLE_SLOPE


# -- 10 --------------------------------------------------------------------
C10 = crit(10, "byte-identical CSV for identical scenario and seed")


@C10
@pytest.mark.parametrize("preset, lam, horizon", [("abilene-mc", 0.9, 20_000), ("mixed-18", 0.1, 2_000)])
def test_criterion_10_library(preset, lam, horizon):
    sc = get_preset(preset).with_(horizon=horizon)
    assert rows_to_csv(run(sc, lam, 7).rows()) == rows_to_csv(run(sc, lam, 7).rows())


@C10
def test_criterion_10_cli(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        assert cli.main(["sweep", "--preset", "abilene-2uc", "-T", "5000", "--lambdas", "0.3,0.5",
                         "--seeds", "1,2", "-o", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
