"""Deterministic agent-registry core.

Thin Python surface over the C++ library: identity and record operations,
capability tokens, liveness staples, last-writer-wins replication cells, the
audit chain, and the benchmark scenario runner. Structured values cross the
boundary as canonical JSON strings; ``json.loads`` them as needed.
"""

from ._agentnet import (
    AuditChain,
    Error,
    KeyPair,
    bump_record,
    capability_key,
    check_staple,
    check_token,
    default_config,
    derive_agent_id,
    issue_staple,
    issue_token,
    make_record,
    merge_cells,
    normalize_capability,
    record_cell,
    record_issues,
    revoke,
    run_scenario,
    scenario_names,
    sha256_hex,
    tombstone_cell,
    xor_distance,
)

__all__ = [
    "AuditChain",
    "Error",
    "KeyPair",
    "bump_record",
    "capability_key",
    "check_staple",
    "check_token",
    "default_config",
    "derive_agent_id",
    "issue_staple",
    "issue_token",
    "make_record",
    "merge_cells",
    "normalize_capability",
    "record_cell",
    "record_issues",
    "revoke",
    "run_scenario",
    "scenario_names",
    "sha256_hex",
    "tombstone_cell",
    "xor_distance",
]
