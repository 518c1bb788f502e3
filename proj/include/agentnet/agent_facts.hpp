#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "agentnet/crypto.hpp"
#include "agentnet/hlc.hpp"

namespace agentnet {

/// Hard ceiling on record TTLs: 24 h, the worst-case staleness regime the
/// hierarchical fabric is allowed to model.
inline constexpr uint64_t kMaxTtlMs = 86'400'000;

/// One advertised capability. `path` is canonical (see normalize_capability),
/// `manifest_digest` stands in for a code/SBOM digest.
struct CapabilityDescriptor {
  std::string path;
  Digest32 manifest_digest{};
  std::map<std::string, std::string> params;

  friend bool operator==(const CapabilityDescriptor&, const CapabilityDescriptor&) = default;
};

struct PolicyConstraints {
  bool allow_external_resolution = true;
  std::set<std::string> allowed_boundaries;  // empty = no per-label restriction
  uint32_t max_delegation_depth = 0;

  friend bool operator==(const PolicyConstraints&, const PolicyConstraints&) = default;
};

/// Signed registry record binding a key-derived agent id to capabilities,
/// endpoints, trust metadata and a version stamp. Immutable after build;
/// all re-publication goes through bump_version.
struct AgentFacts {
  AgentId agent_id{};
  PublicKey public_key{};
  std::vector<CapabilityDescriptor> capabilities;
  std::vector<std::string> endpoints;
  double trust_score = 0.0;
  PolicyConstraints policy;
  HlcStamp version;
  uint64_t ttl_ms = 0;
  Signature signature{};

  /// Length-prefixed concatenation of every field except the signature, in
  /// declared field order. This is the exact byte string that gets signed.
  Bytes signing_body() const;

  friend bool operator==(const AgentFacts&, const AgentFacts&) = default;
};

enum class ValidationIssue {
  SignatureInvalid,
  AgentIdMismatch,
  DuplicateCapability,
  InvalidCapabilityPath,
  TrustScoreOutOfRange,
  TtlTooLarge,
};

const char* to_string(ValidationIssue issue);

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  bool has(ValidationIssue i) const;
  std::string describe() const;
};

/// Canonicalize a raw capability string: ASCII-lowercase, ensure a single
/// leading "/", strip trailing "/", segments limited to [a-z0-9-].
/// Idempotent on accepted inputs. Throws InvalidCapabilityPath.
std::string normalize_capability(std::string_view raw);

/// Build and sign a fresh record. The result always passes validate_record;
/// invariant violations in the inputs throw RecordInvalid listing every issue.
AgentFacts new_record(const KeyPair& keypair, std::vector<CapabilityDescriptor> capabilities,
                      std::vector<std::string> endpoints, double trust_score,
                      PolicyConstraints policy, uint64_t ttl_ms, HlcClock& clock, int64_t now_ms);

/// Check every AgentFacts invariant and report all failures, not just the first.
ValidationReport validate_record(const AgentFacts& record, uint64_t max_ttl_ms = kMaxTtlMs);

/// Re-sign the record with a strictly greater version stamp. Throws NotOwner
/// if the key pair does not match record.agent_id.
AgentFacts bump_version(const AgentFacts& record, const KeyPair& keypair, HlcClock& clock,
                        int64_t now_ms);

}  // namespace agentnet
