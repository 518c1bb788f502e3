#pragma once

#include <cstdint>

#include "agentnet/agent_facts.hpp"

namespace agentnet {

/// Millisecond-scale default liveness window for agent records.
inline constexpr int64_t kDefaultStapleWindowMs = 500;
/// Preset matching the one-minute stapling regime of the upgrade path.
inline constexpr int64_t kOcspStyleStapleWindowMs = 60'000;

/// Self-signed proof that an agent possesses a capability, valid over the
/// half-open window [not_before_ms, not_after_ms).
struct CapabilityToken {
  AgentId agent_id{};
  std::string capability_path;
  Digest32 manifest_digest{};
  int64_t not_before_ms = 0;
  int64_t not_after_ms = 0;
  Signature signature{};

  Bytes signing_body() const;

  friend bool operator==(const CapabilityToken&, const CapabilityToken&) = default;
};

enum class TokenStatus { Valid, NotYetValid, Expired, SignatureInvalid };
const char* to_string(TokenStatus s);

/// Short-lived liveness proof for a record version. Revocation is modeled as
/// the owner ceasing to re-staple: every verifier rejects once the last
/// staple's window [issued_ms, issued_ms + valid_for_ms) has passed.
struct RevocationStaple {
  AgentId agent_id{};
  HlcStamp record_version;
  int64_t issued_ms = 0;
  int64_t valid_for_ms = 0;
  Signature signature{};

  Bytes signing_body() const;
  int64_t expires_at_ms() const { return issued_ms + valid_for_ms; }

  friend bool operator==(const RevocationStaple&, const RevocationStaple&) = default;
};

enum class StapleStatus { Valid, Expired, SignatureInvalid };
const char* to_string(StapleStatus s);

CapabilityToken issue_capability_token(const KeyPair& keypair,
                                       const CapabilityDescriptor& descriptor,
                                       int64_t not_before_ms, int64_t not_after_ms);

TokenStatus verify_capability_token(const CapabilityToken& token, const PublicKey& key,
                                    int64_t now_ms);

RevocationStaple issue_staple(const KeyPair& keypair, const HlcStamp& record_version,
                              int64_t now_ms, int64_t valid_for_ms);

StapleStatus verify_staple(const RevocationStaple& staple, const PublicKey& key, int64_t now_ms);

}  // namespace agentnet
