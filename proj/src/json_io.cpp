#include "agentnet/json_io.hpp"

#include "agentnet/errors.hpp"

namespace agentnet {

namespace {

template <size_t N>
std::array<uint8_t, N> fixed_from_hex(const Json& j, const char* field) {
  if (!j.is_string()) throw Error(std::string(field) + ": expected hex string");
  Bytes raw = hex_decode(j.get<std::string>());
  if (raw.size() != N) {
    throw Error(std::string(field) + ": expected " + std::to_string(N) + " bytes, got " +
                std::to_string(raw.size()));
  }
  std::array<uint8_t, N> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

const Json& need(const Json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw Error(std::string("missing field: ") + field);
  return *it;
}

}  // namespace

Json to_json(const HlcStamp& stamp) {
  return Json{{"physical_ms", stamp.physical_ms},
              {"logical", stamp.logical},
              {"node_tiebreak", stamp.node_tiebreak.hex()}};
}

HlcStamp stamp_from_json(const Json& j) {
  HlcStamp s;
  s.physical_ms = need(j, "physical_ms").get<int64_t>();
  s.logical = need(j, "logical").get<uint32_t>();
  s.node_tiebreak.bytes = fixed_from_hex<32>(need(j, "node_tiebreak"), "node_tiebreak");
  return s;
}

Json to_json(const CapabilityDescriptor& cap) {
  Json params = Json::object();
  for (const auto& [k, v] : cap.params) params[k] = v;
  return Json{{"path", cap.path},
              {"manifest_digest", hex_encode(cap.manifest_digest)},
              {"params", std::move(params)}};
}

CapabilityDescriptor capability_from_json(const Json& j) {
  CapabilityDescriptor cap;
  cap.path = need(j, "path").get<std::string>();
  cap.manifest_digest = fixed_from_hex<32>(need(j, "manifest_digest"), "manifest_digest");
  for (const auto& [k, v] : need(j, "params").items()) cap.params[k] = v.get<std::string>();
  return cap;
}

Json to_json(const PolicyConstraints& policy) {
  return Json{{"allow_external_resolution", policy.allow_external_resolution},
              {"allowed_boundaries",
               std::vector<std::string>(policy.allowed_boundaries.begin(),
                                        policy.allowed_boundaries.end())},
              {"max_delegation_depth", policy.max_delegation_depth}};
}

PolicyConstraints policy_from_json(const Json& j) {
  PolicyConstraints p;
  p.allow_external_resolution = need(j, "allow_external_resolution").get<bool>();
  for (const auto& v : need(j, "allowed_boundaries")) {
    p.allowed_boundaries.insert(v.get<std::string>());
  }
  p.max_delegation_depth = need(j, "max_delegation_depth").get<uint32_t>();
  return p;
}

Json to_json(const AgentFacts& record) {
  Json caps = Json::array();
  for (const auto& c : record.capabilities) caps.push_back(to_json(c));
  return Json{{"agent_id", record.agent_id.hex()},
              {"public_key", hex_encode(record.public_key)},
              {"capabilities", std::move(caps)},
              {"endpoints", record.endpoints},
              {"trust_score", record.trust_score},
              {"policy", to_json(record.policy)},
              {"version", to_json(record.version)},
              {"ttl_ms", record.ttl_ms},
              {"signature", hex_encode(record.signature)}};
}

AgentFacts record_from_json(const Json& j) {
  AgentFacts r;
  r.agent_id.bytes = fixed_from_hex<32>(need(j, "agent_id"), "agent_id");
  r.public_key = fixed_from_hex<32>(need(j, "public_key"), "public_key");
  for (const auto& c : need(j, "capabilities")) r.capabilities.push_back(capability_from_json(c));
  r.endpoints = need(j, "endpoints").get<std::vector<std::string>>();
  r.trust_score = need(j, "trust_score").get<double>();
  r.policy = policy_from_json(need(j, "policy"));
  r.version = stamp_from_json(need(j, "version"));
  r.ttl_ms = need(j, "ttl_ms").get<uint64_t>();
  r.signature = fixed_from_hex<64>(need(j, "signature"), "signature");
  return r;
}

Json to_json(const Tombstone& tomb) {
  return Json{{"agent_id", tomb.agent_id.hex()},
              {"revoked_at", to_json(tomb.revoked_at)},
              {"signature", hex_encode(tomb.signature)}};
}

Tombstone tombstone_from_json(const Json& j) {
  Tombstone t;
  t.agent_id.bytes = fixed_from_hex<32>(need(j, "agent_id"), "agent_id");
  t.revoked_at = stamp_from_json(need(j, "revoked_at"));
  t.signature = fixed_from_hex<64>(need(j, "signature"), "signature");
  return t;
}

Json to_json(const CrdtRecord& cell) {
  if (cell.is_tombstone()) {
    return Json{{"kind", "tombstone"}, {"value", to_json(std::get<Tombstone>(cell.value))}};
  }
  return Json{{"kind", "record"}, {"value", to_json(*cell.record())}};
}

CrdtRecord crdt_from_json(const Json& j) {
  std::string kind = need(j, "kind").get<std::string>();
  if (kind == "tombstone") return CrdtRecord::of(tombstone_from_json(need(j, "value")));
  if (kind == "record") return CrdtRecord::of(record_from_json(need(j, "value")));
  throw Error("crdt cell kind must be 'record' or 'tombstone', got '" + kind + "'");
}

Json to_json(const CapabilityToken& token) {
  return Json{{"agent_id", token.agent_id.hex()},
              {"capability_path", token.capability_path},
              {"manifest_digest", hex_encode(token.manifest_digest)},
              {"not_before_ms", token.not_before_ms},
              {"not_after_ms", token.not_after_ms},
              {"signature", hex_encode(token.signature)}};
}

CapabilityToken token_from_json(const Json& j) {
  CapabilityToken t;
  t.agent_id.bytes = fixed_from_hex<32>(need(j, "agent_id"), "agent_id");
  t.capability_path = need(j, "capability_path").get<std::string>();
  t.manifest_digest = fixed_from_hex<32>(need(j, "manifest_digest"), "manifest_digest");
  t.not_before_ms = need(j, "not_before_ms").get<int64_t>();
  t.not_after_ms = need(j, "not_after_ms").get<int64_t>();
  t.signature = fixed_from_hex<64>(need(j, "signature"), "signature");
  return t;
}

Json to_json(const RevocationStaple& staple) {
  return Json{{"agent_id", staple.agent_id.hex()},
              {"record_version", to_json(staple.record_version)},
              {"issued_ms", staple.issued_ms},
              {"valid_for_ms", staple.valid_for_ms},
              {"signature", hex_encode(staple.signature)}};
}

RevocationStaple staple_from_json(const Json& j) {
  RevocationStaple s;
  s.agent_id.bytes = fixed_from_hex<32>(need(j, "agent_id"), "agent_id");
  s.record_version = stamp_from_json(need(j, "record_version"));
  s.issued_ms = need(j, "issued_ms").get<int64_t>();
  s.valid_for_ms = need(j, "valid_for_ms").get<int64_t>();
  s.signature = fixed_from_hex<64>(need(j, "signature"), "signature");
  return s;
}

Json to_json(const AuditEvent& event) {
  return Json{{"seq", event.seq},
              {"timestamp_ms", event.timestamp_ms},
              {"actor", event.actor.hex()},
              {"query", event.query},
              {"from_boundary", event.from_boundary},
              {"to_boundary", event.to_boundary},
              {"prev_digest", hex_encode(event.prev_digest)},
              {"event_digest", hex_encode(event.event_digest)},
              {"signature", hex_encode(event.signature)}};
}

Json to_json(const AuditChain& chain) {
  Json events = Json::array();
  for (const auto& e : chain.events()) events.push_back(to_json(e));
  return Json{{"resolver_key", hex_encode(chain.resolver_key())}, {"events", std::move(events)}};
}

std::string trace_jsonl(const std::vector<sim::TraceEntry>& trace) {
  std::string out;
  for (const sim::TraceEntry& e : trace) {
    Json line{{"t_send", e.t_send},
              {"t_deliver", e.t_deliver < 0 ? Json(nullptr) : Json(e.t_deliver)},
              {"src", e.src},
              {"dst", e.dst},
              {"kind", e.kind},
              {"size", e.size}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace agentnet
