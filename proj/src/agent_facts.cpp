#include "agentnet/agent_facts.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "agentnet/errors.hpp"

namespace agentnet {

namespace {

bool segment_char_ok(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
}

bool is_canonical_path(std::string_view path) {
  if (path.empty() || path.front() != '/') return false;
  if (path.size() > 1 && path.back() == '/') return false;
  bool segment_empty = true;
  for (size_t i = 1; i < path.size(); ++i) {
    char c = path[i];
    if (c == '/') {
      if (segment_empty) return false;
      segment_empty = true;
    } else if (segment_char_ok(c)) {
      segment_empty = false;
    } else {
      return false;
    }
  }
  return !segment_empty;
}

void write_stamp(BodyWriter& w, const HlcStamp& s) {
  w.i64(s.physical_ms);
  w.u32(s.logical);
  w.raw(s.node_tiebreak.bytes);
}

}  // namespace

Bytes AgentFacts::signing_body() const {
  BodyWriter w;
  w.raw(agent_id.bytes);
  w.raw(public_key);
  w.u32(static_cast<uint32_t>(capabilities.size()));
  for (const auto& cap : capabilities) {
    w.str(cap.path);
    w.raw(cap.manifest_digest);
    w.u32(static_cast<uint32_t>(cap.params.size()));
    for (const auto& [k, v] : cap.params) {
      w.str(k);
      w.str(v);
    }
  }
  w.u32(static_cast<uint32_t>(endpoints.size()));
  for (const auto& ep : endpoints) w.str(ep);
  w.f64(trust_score);
  w.u8(policy.allow_external_resolution ? 1 : 0);
  w.u32(static_cast<uint32_t>(policy.allowed_boundaries.size()));
  for (const auto& b : policy.allowed_boundaries) w.str(b);
  w.u32(policy.max_delegation_depth);
  write_stamp(w, version);
  w.u64(ttl_ms);
  return w.take();
}

const char* to_string(ValidationIssue issue) {
  switch (issue) {
    case ValidationIssue::SignatureInvalid: return "SignatureInvalid";
    case ValidationIssue::AgentIdMismatch: return "AgentIdMismatch";
    case ValidationIssue::DuplicateCapability: return "DuplicateCapability";
    case ValidationIssue::InvalidCapabilityPath: return "InvalidCapabilityPath";
    case ValidationIssue::TrustScoreOutOfRange: return "TrustScoreOutOfRange";
    case ValidationIssue::TtlTooLarge: return "TtlTooLarge";
  }
  return "Unknown";
}

bool ValidationReport::has(ValidationIssue i) const {
  return std::find(issues.begin(), issues.end(), i) != issues.end();
}

std::string ValidationReport::describe() const {
  std::ostringstream os;
  for (size_t i = 0; i < issues.size(); ++i) {
    if (i) os << ", ";
    os << to_string(issues[i]);
  }
  return os.str();
}

std::string normalize_capability(std::string_view raw) {
  if (raw.empty()) throw InvalidCapabilityPath("capability path is empty");
  std::string folded;
  folded.reserve(raw.size() + 1);
  if (raw.front() != '/') folded.push_back('/');
  for (char c : raw) folded.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  while (folded.size() > 1 && folded.back() == '/') folded.pop_back();
  if (!is_canonical_path(folded))
    throw InvalidCapabilityPath("capability path not canonicalizable: \"" + std::string(raw) + "\"");
  return folded;
}

AgentFacts new_record(const KeyPair& keypair, std::vector<CapabilityDescriptor> capabilities,
                      std::vector<std::string> endpoints, double trust_score,
                      PolicyConstraints policy, uint64_t ttl_ms, HlcClock& clock, int64_t now_ms) {
  AgentFacts record;
  record.agent_id = derive_agent_id(keypair.public_key);
  record.public_key = keypair.public_key;
  record.capabilities = std::move(capabilities);
  record.endpoints = std::move(endpoints);
  record.trust_score = trust_score;
  record.policy = std::move(policy);
  record.version = clock.next(now_ms);
  record.ttl_ms = ttl_ms;
  record.signature = sign(keypair.secret_key, record.signing_body());
  ValidationReport report = validate_record(record);
  if (!report.ok()) throw RecordInvalid("record invariants violated: " + report.describe());
  return record;
}

ValidationReport validate_record(const AgentFacts& record, uint64_t max_ttl_ms) {
  ValidationReport report;
  if (derive_agent_id(record.public_key) != record.agent_id)
    report.issues.push_back(ValidationIssue::AgentIdMismatch);
  if (!verify(record.public_key, record.signing_body(), record.signature))
    report.issues.push_back(ValidationIssue::SignatureInvalid);
  std::set<std::string> seen;
  bool dup = false, bad_path = false;
  for (const auto& cap : record.capabilities) {
    if (!seen.insert(cap.path).second) dup = true;
    if (!is_canonical_path(cap.path)) bad_path = true;
  }
  if (dup) report.issues.push_back(ValidationIssue::DuplicateCapability);
  if (bad_path) report.issues.push_back(ValidationIssue::InvalidCapabilityPath);
  if (!(record.trust_score >= 0.0 && record.trust_score <= 1.0) || std::isnan(record.trust_score))
    report.issues.push_back(ValidationIssue::TrustScoreOutOfRange);
  if (record.ttl_ms > max_ttl_ms) report.issues.push_back(ValidationIssue::TtlTooLarge);
  return report;
}

AgentFacts bump_version(const AgentFacts& record, const KeyPair& keypair, HlcClock& clock,
                        int64_t now_ms) {
  if (derive_agent_id(keypair.public_key) != record.agent_id)
    throw NotOwner("key pair does not own this record");
  AgentFacts next = record;
  clock.observe(record.version);
  next.version = clock.next(now_ms);
  next.signature = sign(keypair.secret_key, next.signing_body());
  return next;
}

}  // namespace agentnet
