"""Trace-driven caching simulator with query-budgeted learning-augmented policies."""
from .instances import (
    IngestionSpec,
    LowerBoundSpec,
    ingest_csv,
    lower_bound_instance,
    zipf_trace,
)
from .oracles import OracleSpec, QueryLog, QueryRecord, count_inversions, query_set, total_error
from .policies import PolicyConfig, SimReport, brute_force_opt, simulate
from .trace import PhaseStructure, Trace, build_trace, decompose_phases, stale_rank_order

__all__ = [
    "IngestionSpec",
    "LowerBoundSpec",
    "OracleSpec",
    "PhaseStructure",
    "PolicyConfig",
    "QueryLog",
    "QueryRecord",
    "SimReport",
    "Trace",
    "brute_force_opt",
    "build_trace",
    "count_inversions",
    "decompose_phases",
    "ingest_csv",
    "lower_bound_instance",
    "query_set",
    "simulate",
    "stale_rank_order",
    "total_error",
    "zipf_trace",
]
