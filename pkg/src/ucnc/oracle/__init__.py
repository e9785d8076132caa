"""Exact capacity-region oracle: route enumeration, rational LP, flow decomposition."""

from .capacity import (
    CapacityResult,
    Feasibility,
    OracleError,
    capacity_feasible,
    max_scalar_rate,
    max_scalar_rate_detail,
    restrict_to_host,
    route_loads_from_chain,
    verify_witness,
    witness_to_dict,
    witness_to_yaml,
)
from .enumerate import EnumerationBoundExceeded, EnumerationBounds, enumerate_routes
from .flows import (
    ConservationReport,
    DecompositionError,
    compose,
    decompose_flow,
    micro_denominator,
    verify_conservation,
)
from .lp import ExactLP, LPError, LPResult

__all__ = [
    "CapacityResult", "ConservationReport", "DecompositionError", "EnumerationBoundExceeded",
    "EnumerationBounds", "ExactLP", "Feasibility", "LPError", "LPResult", "OracleError",
    "capacity_feasible", "compose", "decompose_flow", "enumerate_routes", "max_scalar_rate",
    "max_scalar_rate_detail", "micro_denominator", "restrict_to_host", "route_loads_from_chain",
    "verify_conservation", "verify_witness", "witness_to_dict", "witness_to_yaml",
]
