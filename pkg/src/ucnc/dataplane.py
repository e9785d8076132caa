"""Packet-level physical queues.

Each link and each compute node owns one queue.  A queue serves up to its
capacity in work units per slot (flow units for links, compute units for
nodes), in priority order fixed at the start of the slot, with partial
service carried over.  A packet finishing an edge moves to the queue of the
next edge on its stored route; at a branch node of a multicast tree it is
copied once per outgoing edge.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from functools import cmp_to_key
from itertools import count
from typing import Sequence

import numpy as np

from .chaining import Route
from .topology import Network

EPS = 1e-9


class DataPlaneError(RuntimeError):
    """Internal inconsistency; signals a routing bug."""


class AuditError(AssertionError):
    pass


class _Delivery:
    __slots__ = ("commodity", "arrival", "pending")

    def __init__(self, commodity: int, arrival: int, pending: int):
        self.commodity = commodity
        self.arrival = arrival
        self.pending = pending


class Packet:
    __slots__ = ("commodity", "route", "node", "edge", "stage", "hop", "size",
                 "remaining", "arrival", "seq", "queue_arrival", "token")

    def __init__(self, commodity, route, node, stage, hop, size, arrival, seq, token):
        self.commodity = commodity
        self.route = route
        self.node = node
        self.edge = -1
        self.stage = stage
        self.hop = hop
        self.size = size
        self.remaining = 0.0
        self.arrival = arrival
        self.seq = seq
        self.queue_arrival = arrival
        self.token = token

    def __repr__(self):
        return (f"Packet(c={self.commodity}, seq={self.seq}, hop={self.hop}, stage={self.stage}, "
                f"edge={self.edge}, remaining={self.remaining:.4g})")


def _cmp(a, b) -> int:
    return (a > b) - (a < b)


def ento_priority(p: Packet, q: Packet) -> int:
    """Negative when ``p`` goes first: fewer hops, then earlier arrival, then lower sequence id."""
    return _cmp((p.hop, p.arrival, p.seq), (q.hop, q.arrival, q.seq))


def fifo_priority(p: Packet, q: Packet) -> int:
    """Negative when ``p`` reached this queue first (ties on sequence id)."""
    return _cmp((p.queue_arrival, p.seq), (q.queue_arrival, q.seq))


DISCIPLINES = {"ento": ento_priority, "fifo": fifo_priority}


class PhysicalQueue:
    __slots__ = ("resource", "owner", "capacity", "heap", "backlog")

    def __init__(self, resource: int, owner, capacity: float):
        self.resource = resource
        self.owner = owner
        self.capacity = capacity
        self.heap: list = []
        self.backlog = 0.0

    def __len__(self):
        return len(self.heap)

    def packets(self) -> list[Packet]:
        return [entry[-1] for entry in sorted(self.heap)]


@dataclass
class DeliveryLog:
    n_commodities: int
    delivered: list = field(default=None)
    delay_sum: list = field(default=None)
    delays: list = field(default=None)
    keep_samples: bool = True

    def __post_init__(self):
        k = self.n_commodities
        self.delivered = [0] * k
        self.delay_sum = [0] * k
        self.delays = [[] for _ in range(k)]

    def record(self, commodity: int, arrival: int, slot: int) -> None:
        d = slot - arrival
        self.delivered[commodity] += 1
        self.delay_sum[commodity] += d
        if self.keep_samples:
            self.delays[commodity].append(d)

    def mean_delay(self, commodity: int):
        n = self.delivered[commodity]
        return self.delay_sum[commodity] / n if n else None


def metrics(log: DeliveryLog, horizon: int, backlog_trace=None) -> dict:
    """Throughput ``R/T`` and mean delay per commodity plus the backlog trace."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    return {
        "throughput": [r / horizon for r in log.delivered],
        "mean_delay": [log.mean_delay(k) for k in range(log.n_commodities)],
        "delivered": list(log.delivered),
        "backlog": backlog_trace,
    }


class DataPlane:
    """Physical queues for one network.

    ``discipline`` is ``"ento"`` or ``"fifo"``.  With ``audit=True`` every
    slot is checked independently: the packets that received service form a
    prefix of the queue in priority order, the served amount equals
    ``min(capacity, backlog)`` and no hop count exceeds ``n * (M + 1)``.
    """

    def __init__(self, net: Network, n_commodities: int, discipline: str = "ento",
                 audit: bool = False, keep_delay_samples: bool = True):
        if discipline not in DISCIPLINES:
            raise ValueError(f"unknown discipline {discipline!r}")
        self.net = net
        self.discipline = discipline
        self.audit = audit
        caps = [float(c) for c in net.capacities()]
        self.queues = [PhysicalQueue(r, net.resource_label(r), caps[r]) for r in range(net.n_resources)]
        self._caps = tuple(caps)  # the audit checks against these, not the queues' own copy
        self.log = DeliveryLog(n_commodities, keep_samples=keep_delay_samples)
        self.injected = np.zeros(net.n_resources)
        self._seq = count()
        self._active: set[int] = set()
        self.max_hop_seen = 0
        self.audit_slots = 0
        self.duplications = 0

    # -- helpers -----------------------------------------------------------
    def _key(self, p: Packet):
        if self.discipline == "ento":
            return (p.hop, p.arrival, p.seq, p)
        return (p.queue_arrival, p.seq, 0, p)

    def _enqueue(self, p: Packet, e: int, now: int) -> None:
        lg = p.route.lg
        p.edge = e
        p.remaining = lg.weight[e]
        p.queue_arrival = now
        r = lg.resource[e]
        q = self.queues[r]
        heapq.heappush(q.heap, self._key(p))
        q.backlog += p.remaining
        self.injected[r] += p.remaining
        self._active.add(r)

    def _forward(self, p: Packet, now: int) -> None:
        """Deliver and/or push ``p`` onward from its current layered node."""
        route = p.route
        v = p.node
        kids = route.children.get(v, ())
        if v in route.terminal_set:
            tok = p.token
            tok.pending -= 1
            if tok.pending == 0:
                self.log.record(tok.commodity, tok.arrival, now)
        elif not kids:
            raise DataPlaneError(f"{p!r} stranded at non-terminal {route.lg.label(v)}")
        if len(kids) > 1:
            self.duplications += len(kids) - 1
        for i, e in enumerate(kids):
            if i == 0:
                q = p
            else:
                q = Packet(p.commodity, route, v, p.stage, p.hop, p.size, p.arrival,
                           next(self._seq), p.token)
            self._enqueue(q, e, now)

    # -- public ------------------------------------------------------------
    def admit(self, count_: int, route: Route, commodity: int, t: int) -> None:
        """Inject ``count_`` fresh packets that arrived in slot ``t`` onto ``route``."""
        lg = route.lg
        w0 = lg.profile.w[0]
        for _ in range(int(count_)):
            tok = _Delivery(commodity, t, len(route.terminals))
            p = Packet(commodity, route, route.root, 0, 0, float(w0), t, next(self._seq), tok)
            self._forward(p, t)

    def step(self, t: int) -> None:
        """Serve slot ``t`` and move finished packets to their next queues."""
        completed: list[Packet] = []
        queues = self.queues
        audit = self.audit
        for r in sorted(self._active):
            q = queues[r]
            heap = q.heap
            cap = q.capacity
            if audit:
                snapshot = [entry[-1] for entry in heap]
                before = {id(p): p.remaining for p in snapshot}
                backlog0 = q.backlog
                served_amount = 0.0
            while heap and cap > EPS:
                p = heap[0][-1]
                amt = p.remaining if p.remaining < cap else cap
                p.remaining -= amt
                cap -= amt
                q.backlog -= amt
                if audit:
                    served_amount += amt
                if p.remaining <= EPS:
                    heapq.heappop(heap)
                    q.backlog -= p.remaining
                    p.remaining = 0.0
                    completed.append(p)
            if not heap:
                q.backlog = 0.0
                self._active.discard(r)
            if audit:
                self._audit_queue(q, snapshot, before, backlog0, served_amount)
        now = t + 1
        for p in completed:
            lg = p.route.lg
            e = p.edge
            p.hop += 1
            if p.hop > self.max_hop_seen:
                self.max_hop_seen = p.hop
            p.node = lg.head[e]
            if lg.edges[e].kind == "cpu":
                p.stage += 1
                p.size = float(lg.profile.w[p.stage])
            if audit:
                bound = self.net.n * (lg.M + 1)
                if p.hop > bound:
                    raise AuditError(f"{p!r} exceeded hop bound {bound}")
            self._forward(p, now)
        if audit:
            self.audit_slots += 1

    def _audit_queue(self, q: PhysicalQueue, snapshot, before, backlog0, served_amount) -> None:
        prio = DISCIPLINES[self.discipline]
        order = sorted(snapshot, key=cmp_to_key(prio))
        served = [p.remaining < before[id(p)] - 1e-15 or p.remaining == 0 for p in order]
        # served packets must form a prefix of the priority order
        seen_unserved = False
        for p, s in zip(order, served):
            if not s:
                seen_unserved = True
            elif seen_unserved:
                raise AuditError(f"queue {q.owner}: {p!r} served ahead of a higher-priority packet")
        expect = min(self._caps[q.resource], backlog0)
        if abs(served_amount - expect) > 1e-6 * max(1.0, expect):
            raise AuditError(f"queue {q.owner}: served {served_amount}, expected {expect}")

    # -- observation -------------------------------------------------------
    def backlog(self) -> list[float]:
        return [q.backlog for q in self.queues]

    def total_backlog(self) -> float:
        return sum(self.queues[r].backlog for r in self._active)

    def n_packets(self) -> int:
        return sum(len(q) for q in self.queues)

    def idle(self) -> bool:
        return not self._active

    def packets(self) -> list[Packet]:
        return [entry[-1] for q in self.queues for entry in q.heap]


def drain(dp: DataPlane, start: int, limit: int = 10**6) -> int:
    """Step without arrivals until every queue is empty; returns the next slot."""
    t = start
    while not dp.idle():
        if t - start >= limit:
            raise DataPlaneError("network did not drain")
        dp.step(t)
        t += 1
    return t


def priority_sorted(packets: Sequence[Packet], discipline: str = "ento") -> list[Packet]:
    return sorted(packets, key=cmp_to_key(DISCIPLINES[discipline]))
