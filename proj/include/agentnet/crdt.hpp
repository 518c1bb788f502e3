#pragma once

#include <variant>

#include "agentnet/agent_facts.hpp"

namespace agentnet {

/// Signed, timestamped deletion marker. A valid tombstone permanently
/// dominates any record with a lower stamp.
struct Tombstone {
  AgentId agent_id{};
  HlcStamp revoked_at;
  Signature signature{};

  Bytes signing_body() const;

  friend bool operator==(const Tombstone&, const Tombstone&) = default;
};

Tombstone make_tombstone(const KeyPair& owner, HlcClock& clock, int64_t now_ms);
bool verify_tombstone(const Tombstone& tomb, const PublicKey& owner_key);

/// Last-writer-wins register cell: an AgentFacts record or its tombstone,
/// ordered by HLC stamp. The unit of switch-fabric replication.
struct CrdtRecord {
  std::variant<AgentFacts, Tombstone> value;

  static CrdtRecord of(AgentFacts record);
  static CrdtRecord of(Tombstone tomb);

  const AgentId& agent_id() const;
  const HlcStamp& stamp() const;
  bool is_tombstone() const { return std::holds_alternative<Tombstone>(value); }
  const AgentFacts* record() const { return std::get_if<AgentFacts>(&value); }

  friend bool operator==(const CrdtRecord&, const CrdtRecord&) = default;
};

/// Keep the argument with the greater stamp; a tombstone wins a stamp tie.
/// Commutative, associative, idempotent. Throws MergeDomainError when the
/// two sides concern different agents.
CrdtRecord crdt_merge(const CrdtRecord& a, const CrdtRecord& b);

}  // namespace agentnet
