"""Capacity-region membership and the maximum scalar rate, in exact arithmetic.

A rate vector is supportable iff it splits over service chain routes so that
every link and compute node stays within capacity.  ``max_scalar_rate``
solves

    max theta  s.t.  sum_k lam_k = theta * d_c          (each commodity c)
                     sum_k load_k(r) * lam_k <= mu_r    (each link / node r)

Route columns are generated on demand: with capacity duals ``y`` a route
improves the LP iff its ``y``-weighted load is below minus the commodity
dual, which is a shortest path (unicast) or minimum Steiner arborescence
(multicast) with edge costs ``y_r * weight_e``.  ``method="enumerate"`` puts
every enumerated route in up front instead, as a cross-check on small
instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import yaml

from ..chaining import LayeredGraph, Route, build_layered_graph
from ..controller import Commodity
from ..routing import (
    select_route_anycast,
    select_route_multicast,
    select_route_unicast,
)
from ..topology import Network, format_fraction, to_fraction
from .enumerate import DEFAULT_BOUNDS, EnumerationBounds, enumerate_routes
from .lp import OPTIMAL, UNBOUNDED, ExactLP, LPError

FlowAssignment = dict  # commodity id -> list[(Route, Fraction)]


class OracleError(RuntimeError):
    pass


@dataclass
class CapacityResult:
    theta: Fraction | float
    assignment: FlowAssignment = field(default_factory=dict)
    columns: int = 0
    iterations: int = 0

    @property
    def unbounded(self) -> bool:
        return self.theta == math.inf


@dataclass
class Feasibility:
    feasible: bool
    witness: FlowAssignment | None
    theta: Fraction | float | None = None

    def __bool__(self):
        return self.feasible


def _direction(commodities: Sequence[Commodity], direction) -> list[Fraction]:
    if direction is None:
        return [to_fraction(c.rate) for c in commodities]
    if isinstance(direction, Mapping):
        return [to_fraction(direction.get(c.id, 0)) for c in commodities]
    d = [to_fraction(x) for x in direction]
    if len(d) != len(commodities):
        raise OracleError("one rate per commodity required")
    return d


def _graphs(net: Network, commodities) -> list[LayeredGraph]:
    cache: dict[int, LayeredGraph] = {}
    out = []
    for c in commodities:
        key = id(c.chain)
        if key not in cache:
            cache[key] = build_layered_graph(net, c.chain)
        out.append(cache[key])
    return out


def _best_route(lg: LayeredGraph, costs, c: Commodity) -> Route:
    if c.kind == "unicast":
        return select_route_unicast(lg, costs, c.source, c.destinations[0], c.id)
    if c.kind == "anycast":
        return select_route_anycast(lg, costs, c.source, c.destinations, c.id)
    return select_route_multicast(lg, costs, c.source, c.destinations, c.id)


def max_scalar_rate_detail(net: Network, commodities: Sequence[Commodity], direction=None,
                           method: str = "colgen",
                           bounds: EnumerationBounds = DEFAULT_BOUNDS) -> CapacityResult:
    if method not in ("colgen", "enumerate"):
        raise OracleError(f"unknown method {method!r}")
    d = _direction(commodities, direction)
    if any(x < 0 for x in d):
        raise OracleError("rates must be nonnegative")
    if not any(d):
        raise OracleError("direction must be nonzero")
    active = [k for k, x in enumerate(d) if x > 0]
    lgs = _graphs(net, commodities)
    caps = net.capacities()
    K = len(active)
    R = net.n_resources
    lp = ExactLP(["="] * K + ["<="] * R, [0] * K + caps)
    lp.add_column({row: -d[k] for row, k in enumerate(active)}, 1, "theta")
    seen: set = set()

    def add_route(row: int, route: Route) -> None:
        entries = {row: 1}
        for r, load in route.loads_exact.items():
            entries[K + r] = entries.get(K + r, 0) + load
        seen.add((row, route.key))
        lp.add_column(entries, 0, (active[row], route))

    for row, k in enumerate(active):
        c, lg = commodities[k], lgs[k]
        if method == "enumerate":
            routes = enumerate_routes(lg, c, bounds)
            if not routes:
                raise OracleError(f"commodity {c.id!r} has no route")
            for route in routes:
                add_route(row, route)
        else:
            add_route(row, _best_route(lg, lg.weight_exact, c))

    def pricing(duals):
        new = []
        y_res = duals[K:]
        for row, k in enumerate(active):
            c, lg = commodities[k], lgs[k]
            costs = [y_res[r] * w for r, w in zip(lg.resource, lg.weight_exact)]
            route = _best_route(lg, costs, c)
            price = sum((costs[e] for e in route.edges), Fraction(0))
            if price < -duals[row]:
                if (row, route.key) in seen:
                    raise OracleError("pricing returned a route already in the basis candidates")
                entries = {row: 1}
                for r, load in route.loads_exact.items():
                    entries[K + r] = entries.get(K + r, 0) + load
                seen.add((row, route.key))
                new.append((entries, 0, (k, route)))
        return new

    try:
        res = lp.solve(pricing if method == "colgen" else None)
    except LPError as exc:
        raise OracleError(str(exc)) from exc
    if res.status == UNBOUNDED:
        return CapacityResult(math.inf, {}, len(lp.columns), res.iterations)
    if res.status != OPTIMAL:
        raise OracleError(f"capacity LP ended {res.status}")
    assignment: FlowAssignment = {commodities[k].id: [] for k in active}
    for tag, val in zip(lp.tags, res.x):
        if tag == "theta" or not val:
            continue
        k, route = tag
        assignment[commodities[k].id].append((route, val))
    return CapacityResult(res.objective, assignment, len(lp.columns), res.iterations)


def max_scalar_rate(net: Network, commodities: Sequence[Commodity], direction=None,
                    method: str = "colgen", bounds: EnumerationBounds = DEFAULT_BOUNDS):
    """Largest ``theta`` with ``theta * direction`` in the capacity region.

    ``direction`` is a sequence aligned with ``commodities``, a mapping by
    commodity id, or ``None`` for the commodities' own rates.  Returns a
    ``Fraction``, or ``math.inf`` when some commodity needs no resources.
    """
    return max_scalar_rate_detail(net, commodities, direction, method, bounds).theta


def capacity_feasible(net: Network, commodities: Sequence[Commodity], rates=None,
                      method: str = "colgen", bounds: EnumerationBounds = DEFAULT_BOUNDS) -> Feasibility:
    """Decide whether ``rates`` is supportable; feasible answers carry a witness split."""
    lam = _direction(commodities, rates)
    if any(x < 0 for x in lam):
        raise OracleError("rates must be nonnegative")
    if not any(lam):
        return Feasibility(True, {c.id: [] for c in commodities}, math.inf)
    res = max_scalar_rate_detail(net, commodities, lam, method, bounds)
    theta = res.theta
    if theta != math.inf and theta < 1:
        return Feasibility(False, None, theta)
    witness: FlowAssignment = {c.id: [] for c in commodities}
    if theta == math.inf:
        # some commodity is free; route it on a zero-load path, others via the LP at rate 0
        lgs = _graphs(net, commodities)
        for c, lg, x in zip(commodities, lgs, lam):
            if x > 0:
                witness[c.id].append((_best_route(lg, lg.weight_exact, c), x))
        return Feasibility(not verify_witness(net, commodities, lam, witness), witness, theta)
    for cid, parts in res.assignment.items():
        witness[cid] = [(route, val / theta) for route, val in parts]
    return Feasibility(True, witness, theta)


def route_loads_from_chain(net: Network, route: Route) -> dict[int, Fraction]:
    """Recompute per-resource loads of one packet on ``route`` from the raw ``r`` and ``xi``.

    Deliberately does not reuse the layered graph's cached weights.
    """
    lg = route.lg
    fns = lg.chain.functions
    out: dict[int, Fraction] = {}
    for e in route.edges:
        edge = lg.edges[e]
        if edge.kind == "tx":
            load = Fraction(1)
            for f in fns[:edge.stage]:
                load *= f.xi
            res = net.link_index(edge.u, edge.v)
        else:
            load = fns[edge.stage - 1].r_at(edge.u)
            for f in fns[:edge.stage - 1]:
                load *= f.xi
            res = net.node_resource(edge.u)
        out[res] = out.get(res, Fraction(0)) + load
    return out


def verify_witness(net: Network, commodities: Sequence[Commodity], rates, witness: FlowAssignment) -> list[str]:
    """Independent exact re-check of a flow split.  Returns a list of violations (empty means sound)."""
    lam = _direction(commodities, rates)
    problems: list[str] = []
    used = [Fraction(0)] * net.n_resources
    for c, x in zip(commodities, lam):
        parts = witness.get(c.id, [])
        total = Fraction(0)
        for route, val in parts:
            if val < 0:
                problems.append(f"{c.id}: negative route rate {val}")
            try:
                route.validate()
            except Exception as exc:  # noqa: BLE001 - any invariant failure is a violation
                problems.append(f"{c.id}: invalid route ({exc})")
                continue
            lg = route.lg
            if lg.label(route.root) != (c.source, 0):
                problems.append(f"{c.id}: route rooted at {lg.label(route.root)}")
            got = {lg.label(t) for t in route.terminals}
            want = {(d, lg.M) for d in c.destinations}
            if c.kind == "anycast":
                if len(got) != 1 or not got <= want:
                    problems.append(f"{c.id}: anycast route ends at {got}")
            elif got != want:
                problems.append(f"{c.id}: route reaches {got}, expected {want}")
            total += val
            for r, load in route_loads_from_chain(net, route).items():
                used[r] += load * val
        if total != x:
            problems.append(f"{c.id}: route rates sum to {total}, expected {x}")
    for r, (u, cap) in enumerate(zip(used, net.capacities())):
        if u > cap:
            problems.append(f"{net.resource_label(r)}: load {u} exceeds capacity {cap}")
    return problems


def witness_to_dict(witness: FlowAssignment) -> dict:
    out = {}
    for cid, parts in witness.items():
        items = []
        for route, val in parts:
            lg = route.lg
            items.append({
                "rate": format_fraction(Fraction(val)),
                "edges": [
                    {"kind": lg.edges[e].kind, "stage": lg.edges[e].stage,
                     "from": lg.edges[e].u, "to": lg.edges[e].v}
                    for e in route.edges
                ],
            })
        out[str(cid)] = items
    return out


def witness_to_yaml(witness: FlowAssignment) -> str:
    return yaml.safe_dump(witness_to_dict(witness), sort_keys=False)


def restrict_to_host(commodities: Sequence[Commodity], host) -> list[Commodity]:
    """Same commodities with every function forced onto ``host``."""
    return [c.with_chain(c.chain.restricted_to(host)) for c in commodities]
