"""Max-min throughput allocation for multi-hop energy-harvesting cognitive radio networks."""
from .baselines import etopa_solve, otepa_solve
from .jotpa import feasibility_check, jotpa_solve, solve_weighted
from .model import (
    Allocation,
    ChannelRealization,
    SolveResult,
    SystemParams,
    Topology,
    constraint_residuals,
    end_to_end_throughput,
)
from .oracle import oracle_solve
from .scenarios import ScenarioId, SeededRng, build_topology, sample_channels

__all__ = [
    "Allocation",
    "ChannelRealization",
    "ScenarioId",
    "SeededRng",
    "SolveResult",
    "SystemParams",
    "Topology",
    "build_topology",
    "constraint_residuals",
    "end_to_end_throughput",
    "etopa_solve",
    "feasibility_check",
    "jotpa_solve",
    "oracle_solve",
    "otepa_solve",
    "sample_channels",
    "solve_weighted",
]
