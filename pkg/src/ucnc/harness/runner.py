"""Simulation runs, baselines, sweeps and CSV output."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..controller import Commodity, UCNCController
from ..dataplane import DataPlane
from ..topology import Network
from .scenario import Scenario, ScenarioError

CSV_COLUMNS = (
    "policy",
    "lambda_multiplier",
    "seed",
    "commodity_id",
    "throughput",
    "mean_delay",
    "delivered",
    "vq_sum_final",
    "max_backlog",
    "growth_slope",
)

STABLE_SLOPE = 1e-3
UNSTABLE_SLOPE = 1e-1


@dataclass(frozen=True)
class Policy:
    name: str
    commodities: tuple[Commodity, ...]
    discipline: str = "ento"
    multicast: str = "exact"
    hosts: tuple = ()


def multicast_as_unicast(c: Commodity) -> list[Commodity]:
    """One unicast commodity per destination, same source, chain and rate."""
    if len(c.destinations) < 2 or c.kind != "multicast":
        raise ScenarioError(f"commodity {c.id!r} is not multicast")
    return [
        Commodity(f"{c.id}>{d}", c.source, (d,), c.chain, c.rate, c.arrival, "unicast")
        for d in c.destinations
    ]


def nearest_host(net: Network, c: Commodity, flavor: str, hops=None):
    """Compute node closest to the source or to the destinations (hop count; ties to earlier nodes).

    Only nodes that can host every function of the chain qualify.  For the
    destination flavor with several destinations the summed hop count is
    minimized.
    """
    if flavor not in ("source", "destination"):
        raise ValueError(f"flavor must be 'source' or 'destination', got {flavor!r}")
    fns = c.chain.functions
    if not fns:
        raise ScenarioError(f"commodity {c.id!r} has an empty chain; nothing to place")
    common = set(fns[0].hosts)
    for f in fns[1:]:
        common &= set(f.hosts)
    candidates = [u for u in net.nodes if u in common and net.mu(u) > 0]
    if not candidates:
        raise ScenarioError(f"no single node can host every function of chain {c.chain.id!r}")
    hops = net.hop_distances() if hops is None else hops

    def dist(u):
        if flavor == "source":
            return hops[c.source].get(u, math.inf)
        return sum(hops[u].get(d, math.inf) for d in c.destinations)

    return min(candidates, key=lambda u: (dist(u), net.index(u)))


def baseline_nearest(net: Network, commodities: Sequence[Commodity], flavor: str) -> Policy:
    """Pin each commodity's whole chain to its nearest compute node, then route as usual."""
    hops = net.hop_distances()
    pinned = []
    hosts = []
    for c in commodities:
        h = nearest_host(net, c, flavor, hops)
        hosts.append(h)
        pinned.append(c.with_chain(c.chain.restricted_to(h)))
    return Policy(f"nearest-to-{flavor}", tuple(pinned), "ento", "exact", tuple(hosts))


def make_policy(name: str, net: Network, commodities: Sequence[Commodity]) -> Policy:
    commodities = tuple(commodities)
    if name == "ucnc-ento":
        return Policy(name, commodities)
    if name == "ucnc-fifo":
        return Policy(name, commodities, "fifo")
    if name == "ucnc-approx":
        return Policy(name, commodities, "ento", "approx")
    if name == "nearest-to-source":
        return baseline_nearest(net, commodities, "source")
    if name == "nearest-to-destination":
        return baseline_nearest(net, commodities, "destination")
    if name == "multicast-as-unicast":
        out = []
        for c in commodities:
            out += multicast_as_unicast(c) if c.is_multicast else [c]
        return Policy(name, tuple(out))
    raise ScenarioError(f"unknown policy {name!r}")


def draw_arrivals(commodities: Sequence[Commodity], multiplier: float, horizon: int, seed: int) -> np.ndarray:
    """Per-slot packet counts, shape ``(horizon, K)``; column ``k`` follows commodity ``k``'s distribution."""
    rng = np.random.default_rng(seed)
    out = np.zeros((horizon, len(commodities)), dtype=np.int64)
    for k, c in enumerate(commodities):
        lam = c.rate * multiplier
        if c.arrival == "poisson":
            out[:, k] = rng.poisson(lam, size=horizon)
        else:
            if lam > 1:
                raise ScenarioError(f"bernoulli rate {lam} above 1 for {c.id!r}")
            out[:, k] = rng.random(horizon) < lam
    return out


def growth_slope(*traces) -> float:
    """Largest least-squares slope over the second half of the given traces."""
    best = 0.0
    for tr in traces:
        tr = np.asarray(tr, dtype=float)
        half = tr[len(tr) // 2:]
        if len(half) < 2:
            continue
        x = np.arange(len(half), dtype=float)
        slope = float(np.polyfit(x, half, 1)[0])
        best = max(best, slope)
    return best


@dataclass
class RunResult:
    policy: Policy
    multiplier: float
    seed: int
    horizon: int
    delivered: list
    throughput: list
    mean_delay: list
    vq_trace: np.ndarray
    backlog_trace: np.ndarray
    vq_final: float
    max_backlog: float
    slope: float
    dataplane: DataPlane
    controller: UCNCController

    @property
    def stable(self) -> bool:
        return self.slope < STABLE_SLOPE

    def rows(self) -> list[dict]:
        out = []
        for k, c in enumerate(self.policy.commodities):
            out.append({
                "policy": self.policy.name,
                "lambda_multiplier": self.multiplier,
                "seed": self.seed,
                "commodity_id": c.id,
                "throughput": self.throughput[k],
                "mean_delay": self.mean_delay[k],
                "delivered": self.delivered[k],
                "vq_sum_final": self.vq_final,
                "max_backlog": self.max_backlog,
                "growth_slope": self.slope,
            })
        return out


def simulate(net: Network, policy: Policy, multiplier: float, seed: int, horizon: int,
             audit: bool = False) -> RunResult:
    comms = policy.commodities
    ctrl = UCNCController(net, comms, multicast=policy.multicast)
    dp = DataPlane(net, len(comms), policy.discipline, audit=audit, keep_delay_samples=False)
    counts = draw_arrivals(comms, multiplier, horizon, seed)
    busy = counts.any(axis=1).tolist()
    rows = counts.tolist()
    vq_trace = np.zeros(horizon)
    bl_trace = np.zeros(horizon)
    vq = ctrl.vq
    for t in range(horizon):
        if busy[t]:
            for d in ctrl.decide(rows[t]):
                dp.admit(d.count, d.route, d.commodity, t)
        dp.step(t)
        ctrl.end_slot()
        vq_trace[t] = vq.q.sum()
        bl_trace[t] = dp.total_backlog()
    T = max(horizon, 1)
    log = dp.log
    return RunResult(
        policy=policy,
        multiplier=multiplier,
        seed=seed,
        horizon=horizon,
        delivered=list(log.delivered),
        throughput=[r / T for r in log.delivered] if horizon else [0.0] * len(comms),
        mean_delay=[log.mean_delay(k) for k in range(len(comms))],
        vq_trace=vq_trace,
        backlog_trace=bl_trace,
        vq_final=float(vq.q.sum()),
        max_backlog=float(bl_trace.max()) if horizon else 0.0,
        slope=growth_slope(vq_trace, bl_trace),
        dataplane=dp,
        controller=ctrl,
    )


def run(scenario: Scenario, multiplier: float | None = None, seed: int | None = None,
        policy: str | None = None, audit: bool = False) -> RunResult:
    """Simulate one (policy, rate multiplier, seed) point of ``scenario``."""
    multiplier = scenario.lambdas[0] if multiplier is None else multiplier
    seed = scenario.seeds[0] if seed is None else seed
    pol = make_policy(policy or scenario.policy, scenario.net, scenario.commodities)
    return simulate(scenario.net, pol, multiplier, seed, scenario.horizon, audit)


def _run_rows(args) -> list[dict]:
    scenario, policy, lam, seed = args
    return run(scenario, lam, seed, policy).rows()


def sweep(scenario: Scenario, lambdas: Sequence[float] | None = None, seeds: Sequence[int] | None = None,
          policies: Sequence[str] | None = None, jobs: int = 1) -> list[dict]:
    """Rows for every (policy, multiplier, seed), sorted in that order."""
    lambdas = list(scenario.lambdas if lambdas is None else lambdas)
    seeds = list(scenario.seeds if seeds is None else seeds)
    policies = list(policies or [scenario.policy])
    if not seeds:
        raise ScenarioError("seed list is empty")
    if not lambdas:
        raise ScenarioError("rate grid is empty")
    if lambdas != sorted(lambdas):
        raise ScenarioError("rate grid must be sorted ascending")
    tasks = [(scenario, p, lam, s) for p in sorted(policies) for lam in lambdas for s in seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_rows, tasks))
    else:
        results = [_run_rows(t) for t in tasks]
    return [row for rows in results for row in rows]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "%.10g" % value
    return str(value)


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))


def gnuplot_columns(rows: Sequence[dict], metric: str = "mean_delay") -> str:
    """Whitespace table: multiplier followed by the seed-averaged metric per policy."""
    if metric not in CSV_COLUMNS:
        raise ScenarioError(f"unknown metric {metric!r}")
    policies = sorted({r["policy"] for r in rows})
    lams = sorted({r["lambda_multiplier"] for r in rows})
    lines = ["# lambda " + " ".join(policies)]
    for lam in lams:
        cells = []
        for p in policies:
            vals = [r[metric] for r in rows
                    if r["policy"] == p and r["lambda_multiplier"] == lam and r[metric] is not None]
            cells.append("%.10g" % (sum(vals) / len(vals)) if vals else "NaN")
        lines.append("%.10g " % lam + " ".join(cells))
    return "\n".join(lines) + "\n"
