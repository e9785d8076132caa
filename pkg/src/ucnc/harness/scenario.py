"""Scenario documents: topology + chains + commodities + run settings."""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from ..chaining import ChainError, chain_from_dict, chain_to_dict
from ..controller import Commodity
from ..topology import Network, TopologyError, abilene_preset, network_from_dict, topology_to_dict

POLICIES = (
    "ucnc-ento",
    "ucnc-fifo",
    "ucnc-approx",
    "nearest-to-source",
    "nearest-to-destination",
    "multicast-as-unicast",
)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """Everything needed for a run except the rate multiplier and the seed.

    Commodity rates are base rates; a run at multiplier ``lam`` offers
    ``lam * rate`` packets per slot to each commodity.
    """

    name: str
    net: Network
    commodities: tuple[Commodity, ...]
    policy: str = "ucnc-ento"
    horizon: int = 100_000
    seeds: tuple[int, ...] = (1,)
    lambdas: tuple[float, ...] = (1.0,)
    description: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "commodities", tuple(self.commodities))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        self.validate()

    def validate(self) -> None:
        if self.policy not in POLICIES:
            raise ScenarioError(f"unknown policy {self.policy!r}; choose from {', '.join(POLICIES)}")
        if self.horizon < 0:
            raise ScenarioError("horizon must be nonnegative")
        if not self.commodities:
            raise ScenarioError("scenario has no commodities")
        ids = [c.id for c in self.commodities]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate commodity id")
        for c in self.commodities:
            for u in (c.source, *c.destinations):
                if u not in self.net:
                    raise ScenarioError(f"commodity {c.id!r} references unknown node {u!r}")
        if self.policy == "multicast-as-unicast" and not any(c.is_multicast for c in self.commodities):
            raise ScenarioError("multicast-as-unicast needs at least one multicast commodity")
        if any(x < 0 for x in self.lambdas):
            raise ScenarioError("rate multipliers must be nonnegative")

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def scenario_to_dict(sc: Scenario) -> dict:
    chains = {}
    for c in sc.commodities:
        chains.setdefault(c.chain.id, c.chain)
    return {
        "name": sc.name,
        "description": sc.description,
        "topology": topology_to_dict(sc.net),
        "chains": [chain_to_dict(ch) for ch in chains.values()],
        "commodities": [
            {
                "id": c.id,
                "source": c.source,
                "destinations": list(c.destinations),
                "chain": c.chain.id,
                "rate": c.rate,
                "arrival": c.arrival,
                "cast": c.cast,
            }
            for c in sc.commodities
        ],
        "scenario": {
            "policy": sc.policy,
            "horizon": sc.horizon,
            "seeds": list(sc.seeds),
            "lambdas": list(sc.lambdas),
        },
    }


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    try:
        if "topology" in doc:
            topo = doc["topology"]
            if isinstance(topo, str):
                if topo != "abilene":
                    raise ScenarioError(f"unknown built-in topology {topo!r}")
                net = abilene_preset()
            else:
                net = network_from_dict(topo)
        else:
            raise ScenarioError("missing 'topology' section")
        chains = {}
        for item in doc.get("chains", []):
            ch = chain_from_dict(item)
            if ch.id in chains:
                raise ScenarioError(f"duplicate chain id {ch.id!r}")
            chains[ch.id] = ch
        commodities = []
        for item in doc.get("commodities", []):
            cid = str(item["id"])
            chain_id = str(item["chain"])
            if chain_id not in chains:
                raise ScenarioError(f"commodity {cid!r} uses unknown chain {chain_id!r}")
            dests = item.get("destinations")
            if dests is None:
                dests = [item["destination"]]
            elif not isinstance(dests, list):
                dests = [dests]
            commodities.append(Commodity(
                cid, item["source"], tuple(dests), chains[chain_id],
                float(item.get("rate", 1.0)), item.get("arrival", "poisson"), item.get("cast", "auto"),
            ))
        run = doc.get("scenario", {}) or {}
        seeds = run.get("seeds", [run.get("seed", 1)])
        return Scenario(
            name=str(doc.get("name", "custom")),
            net=net,
            commodities=tuple(commodities),
            policy=run.get("policy", "ucnc-ento"),
            horizon=int(run.get("horizon", 100_000)),
            seeds=tuple(seeds),
            lambdas=tuple(run.get("lambdas", [1.0])),
            description=str(doc.get("description", "")),
        )
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"malformed scenario: missing or bad field {exc}") from exc
    except (ChainError, TopologyError) as exc:
        raise ScenarioError(str(exc)) from exc
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc)) from exc


def load_scenario(config) -> Scenario:
    """Parse a YAML scenario from text, a path or an already-loaded mapping."""
    if isinstance(config, dict):
        return scenario_from_dict(config)
    if isinstance(config, Path):
        config = config.read_text()
    try:
        doc = yaml.safe_load(io.StringIO(config))
    except yaml.YAMLError as exc:
        raise ScenarioError(f"parse error: {exc}") from exc
    return scenario_from_dict(doc)


def dump_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False)
