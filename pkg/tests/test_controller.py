import random

import numpy as np
import pytest

from helpers import pair_chain, pair_network, random_chain, random_commodity, random_network
from ucnc.chaining import ServiceChain, ServiceFunction, build_layered_graph, make_path
from ucnc.controller import (
    Commodity,
    UCNCController,
    VirtualQueueState,
    edge_costs,
    update_virtual_queues,
    virtual_arrivals,
)
from ucnc.routing import Unreachable
from ucnc.topology import Network, abilene_preset


@pytest.fixture
def pair():
    net = pair_network()
    lg = build_layered_graph(net, pair_chain())
    return net, lg


def test_zero_state_costs(pair):
    net, lg = pair
    assert edge_costs(VirtualQueueState(net), lg.profile, lg) == [0.0] * lg.n_edges


def test_transmission_cost_scales_by_w(pair):
    net, lg = pair
    vq = VirtualQueueState(net)
    vq.set_link("a", "b", 2)
    costs = edge_costs(vq, lg.profile, lg)
    # w = [1, 1, 0.8]
    assert costs[lg.edge_by_label("tx", 2, "a", "b")] == pytest.approx(1.6)
    assert costs[lg.edge_by_label("tx", 0, "a", "b")] == pytest.approx(2.0)
    assert costs[lg.edge_by_label("tx", 0, "b", "a")] == 0


def test_computation_cost_scales_by_x(pair):
    net, lg = pair
    vq = VirtualQueueState(net)
    vq.set_node("a", 5)
    costs = edge_costs(vq, lg.profile, lg)
    assert costs[lg.edge_by_label("cpu", 2, "a")] == pytest.approx(10.0)


def test_per_host_override_changes_cost():
    net = Network.build({"a": 1, "b": 1}, [("a", "b", 1)])
    chain = ServiceChain("o", (ServiceFunction(1, 1, ("a", "b"), (("b", 4),)),))
    lg = build_layered_graph(net, chain)
    vq = VirtualQueueState(net)
    vq.set_node("a", 1)
    vq.set_node("b", 1)
    costs = edge_costs(vq, lg.profile, lg)
    assert costs[lg.edge_by_label("cpu", 1, "a")] == 1
    assert costs[lg.edge_by_label("cpu", 1, "b")] == 4


def _two_stage_route(lg):
    labels = [("tx", 0, "a", "b"), ("cpu", 1, "b", None), ("tx", 1, "b", "a"),
              ("cpu", 2, "a", None), ("tx", 2, "a", "b")]
    edges = [lg.edge_by_label(*lab) for lab in labels]
    route = make_path(lg, edges, lg.source("a"), lg.sink("b"))
    route.validate()
    return route


def test_virtual_arrivals_two_stage_route(pair):
    _, lg = pair
    route = _two_stage_route(lg)
    links, nodes = virtual_arrivals(route, lg.profile, 1)
    assert links[("a", "b")] == pytest.approx(1.8)
    assert links[("b", "a")] == pytest.approx(1.0)
    assert nodes == {"b": pytest.approx(0.1), "a": pytest.approx(2.0)}
    _, nodes3 = virtual_arrivals(route, lg.profile, 3)
    assert nodes3["a"] == pytest.approx(6.0)


def test_virtual_arrivals_zero_count(pair):
    _, lg = pair
    assert virtual_arrivals(_two_stage_route(lg), lg.profile, 0) == ({}, {})


def test_undirected_arrivals_merge_directions():
    net = Network.build({"a": 1, "b": 1}, [("a", "b", 1)], directed=False)
    lg = build_layered_graph(net, pair_chain())
    route = _two_stage_route(lg)
    links, _ = virtual_arrivals(route, lg.profile, 1)
    assert links == {("a", "b"): pytest.approx(2.8)}


@pytest.mark.parametrize("q0, a, want", [(0.0, 0.0, 0.0), (0.5, 0.2, 0.0), (3.0, 1.8, 3.8)])
def test_queue_recursion(q0, a, want):
    net = Network.build({"a": 0, "b": 0}, [("a", "b", 1)])
    vq = VirtualQueueState(net, [q0, 0, 0])
    nxt = update_virtual_queues(vq, ({("a", "b"): a}, {}))
    assert nxt.link("a", "b") == pytest.approx(want)
    assert nxt.t == vq.t + 1
    assert vq.link("a", "b") == q0  # old state untouched


def test_negative_inputs_rejected():
    net = Network.build({"a": 0, "b": 0}, [("a", "b", 1)])
    with pytest.raises(ValueError):
        VirtualQueueState(net, [-1, 0, 0])
    with pytest.raises(ValueError):
        update_virtual_queues(VirtualQueueState(net), np.array([-1.0, 0, 0]))


def test_argmin_invariance_under_scaling():
    rng = random.Random(21)
    for _ in range(30):
        net = random_network(rng, n_max=7)
        chain = random_chain(rng, net)
        lg = build_layered_graph(net, chain)
        c = random_commodity(rng, net, chain, max_terms=2)
        q = np.array([rng.choice([0, 1, 2, 5]) for _ in range(net.n_resources)], dtype=float)
        try:
            base = _select(lg, net, q, c)
        except Unreachable:
            continue
        for k in (0.5, 3.0, 1000.0):
            assert _select(lg, net, q * k, c).edges == base.edges


def _select(lg, net, q, c):
    from ucnc.routing import select_route_multicast

    costs = edge_costs(VirtualQueueState(net, q), lg.profile, lg)
    return select_route_multicast(lg, costs, c.source, c.destinations)


def two_commodity_controller():
    net = abilene_preset()
    f = ServiceFunction(1, 1, (3, 8))
    chain = ServiceChain("two", (f, f))
    comms = [Commodity("c1", 1, (11,), chain, 1.0), Commodity("c2", 4, (7,), chain, 1.0)]
    return net, UCNCController(net, comms)


def test_zero_arrivals_change_nothing():
    _, ctrl = two_commodity_controller()
    assert ctrl.decide([0, 0]) == []
    ctrl.end_slot()
    assert ctrl.vq.total == 0 and ctrl.vq.t == 1


def test_costs_are_frozen_within_a_slot():
    _, ctrl = two_commodity_controller()
    # first decision in a slot does not change the second commodity's costs
    before = list(ctrl.costs(ctrl.layered_graph(1)))
    ctrl.decide([3, 0])
    assert ctrl.costs(ctrl.layered_graph(1)) == before
    d = ctrl.decide([0, 2])
    assert len(d) == 1 and d[0].count == 2


def test_end_slot_applies_recursion():
    net, ctrl = two_commodity_controller()
    decisions = ctrl.decide([2, 1])
    expected = np.zeros(net.n_resources)
    for d in decisions:
        for res, load in d.route.loads:
            expected[res] += d.count * load
    ctrl.end_slot()
    mu = np.array([float(c) for c in net.capacities()])
    assert np.allclose(ctrl.vq.q, np.maximum(expected - mu, 0))
    # the next slot sees the new costs
    lg = ctrl.layered_graph(0)
    assert ctrl.costs(lg) == edge_costs(ctrl.vq, lg.profile, lg)


def test_controller_rejects_unknown_nodes():
    net = abilene_preset()
    chain = ServiceChain("none")
    with pytest.raises(Exception):
        UCNCController(net, [Commodity("x", 99, (1,), chain, 1.0)])


def test_controller_anycast_and_approx():
    net = abilene_preset()
    f = ServiceFunction(1, 1, (3, 8))
    chain = ServiceChain("one", (f,))
    comms = [Commodity("any", 1, (7, 11), chain, 1.0, cast="anycast"),
             Commodity("mc", 1, (7, 9, 11), chain, 1.0)]
    ctrl = UCNCController(net, comms, multicast="approx")
    r_any = ctrl.select(0)
    assert r_any.kind == "path" and len(r_any.terminals) == 1
    r_mc = ctrl.select(1)
    r_mc.validate()
    assert len(r_mc.terminals) == 3
    with pytest.raises(ValueError):
        UCNCController(net, comms, multicast="greedy")


def test_commodity_validation():
    chain = ServiceChain("none")
    with pytest.raises(ValueError):
        Commodity("x", 1, (), chain)
    with pytest.raises(ValueError):
        Commodity("x", 1, (2,), chain, -1.0)
    with pytest.raises(ValueError):
        Commodity("x", 1, (2,), chain, 2.0, arrival="bernoulli")
    assert Commodity("x", 1, (2, 3), chain).kind == "multicast"
    assert Commodity("x", 1, (2,), chain).kind == "unicast"
