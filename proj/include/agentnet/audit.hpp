#pragma once

#include <optional>
#include <string>
#include <vector>

#include "agentnet/crypto.hpp"

namespace agentnet {

/// Hash-chained log entry emitted when a resolution crosses out of a private
/// boundary. event_digest covers every field before it; prev_digest links to
/// the predecessor (all zero for seq 0).
struct AuditEvent {
  uint64_t seq = 0;
  int64_t timestamp_ms = 0;
  AgentId actor{};
  std::string query;
  std::string from_boundary;
  std::string to_boundary;
  Digest32 prev_digest{};
  Digest32 event_digest{};
  Signature signature{};  // emitting resolver's signature over event_digest

  Bytes digest_body() const;

  friend bool operator==(const AuditEvent&, const AuditEvent&) = default;
};

struct ChainCheck {
  std::optional<uint64_t> tampered_at;  // earliest broken seq
  bool ok() const { return !tampered_at.has_value(); }
};

/// Append-only, tamper-evident sequence of audit events, single writer.
/// The chain is bound to the emitting resolver's verification key.
class AuditChain {
 public:
  AuditChain() = default;
  explicit AuditChain(PublicKey resolver_key) : resolver_key_(resolver_key) {}

  const AuditEvent& append(const KeyPair& resolver_key, int64_t timestamp_ms, AgentId actor,
                           std::string query, std::string from_boundary,
                           std::string to_boundary);

  /// Valid iff seq values are contiguous from 0, every digest link holds and
  /// every signature verifies. Returns the earliest broken seq otherwise.
  ChainCheck verify_chain() const;

  const std::vector<AuditEvent>& events() const { return events_; }
  size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const PublicKey& resolver_key() const { return resolver_key_; }

  /// Test hook: direct mutable access for tamper experiments.
  std::vector<AuditEvent>& mutable_events() { return events_; }

 private:
  PublicKey resolver_key_{};
  std::vector<AuditEvent> events_;
};

}  // namespace agentnet
