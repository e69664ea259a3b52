"""Topology-aware message aggregation over a simulated two-level cluster."""

from ._magg import (
    CsrGraph,
    DomainMap,
    all_to_all,
    aml_hops,
    generate_graph,
    hops_delta,
    mst_hops,
    policies,
    route_aml,
    route_mst,
    route_select,
    run_bfs,
    run_sssp,
    teps,
)

__all__ = [
    "CsrGraph",
    "DomainMap",
    "all_to_all",
    "aml_hops",
    "generate_graph",
    "hops_delta",
    "mst_hops",
    "policies",
    "route_aml",
    "route_mst",
    "route_select",
    "run_bfs",
    "run_sssp",
    "teps",
]
