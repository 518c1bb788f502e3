#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "agentnet/attestation.hpp"
#include "agentnet/audit.hpp"
#include "agentnet/crdt.hpp"
#include "agentnet/sim.hpp"

namespace agentnet {

/// Canonical JSON encodings: field order is fixed (ordered_json), binary
/// fields are lowercase hex, integers stay integers. parse_* throws Error on
/// malformed input and re-checks structural invariants where cheap.
using Json = nlohmann::ordered_json;

Json to_json(const HlcStamp& stamp);
HlcStamp stamp_from_json(const Json& j);

Json to_json(const CapabilityDescriptor& cap);
CapabilityDescriptor capability_from_json(const Json& j);

Json to_json(const PolicyConstraints& policy);
PolicyConstraints policy_from_json(const Json& j);

Json to_json(const AgentFacts& record);
AgentFacts record_from_json(const Json& j);

Json to_json(const Tombstone& tomb);
Tombstone tombstone_from_json(const Json& j);

Json to_json(const CrdtRecord& cell);
CrdtRecord crdt_from_json(const Json& j);

Json to_json(const CapabilityToken& token);
CapabilityToken token_from_json(const Json& j);

Json to_json(const RevocationStaple& staple);
RevocationStaple staple_from_json(const Json& j);

Json to_json(const AuditEvent& event);
Json to_json(const AuditChain& chain);

/// One trace entry per line: {"t_send":..,"t_deliver":..,"src":..,"dst":..,
/// "kind":..,"size":..}. t_deliver is null for lost messages.
std::string trace_jsonl(const std::vector<sim::TraceEntry>& trace);

}  // namespace agentnet
