#include "agentnet/crdt.hpp"

#include "agentnet/errors.hpp"

namespace agentnet {

Bytes Tombstone::signing_body() const {
  BodyWriter w;
  w.raw(agent_id.bytes);
  w.i64(revoked_at.physical_ms);
  w.u32(revoked_at.logical);
  w.raw(revoked_at.node_tiebreak.bytes);
  return w.take();
}

Tombstone make_tombstone(const KeyPair& owner, HlcClock& clock, int64_t now_ms) {
  Tombstone tomb;
  tomb.agent_id = derive_agent_id(owner.public_key);
  tomb.revoked_at = clock.next(now_ms);
  tomb.signature = sign(owner.secret_key, tomb.signing_body());
  return tomb;
}

bool verify_tombstone(const Tombstone& tomb, const PublicKey& owner_key) {
  if (derive_agent_id(owner_key) != tomb.agent_id) return false;
  return verify(owner_key, tomb.signing_body(), tomb.signature);
}

CrdtRecord CrdtRecord::of(AgentFacts record) { return CrdtRecord{std::move(record)}; }
CrdtRecord CrdtRecord::of(Tombstone tomb) { return CrdtRecord{std::move(tomb)}; }

const AgentId& CrdtRecord::agent_id() const {
  if (const auto* rec = std::get_if<AgentFacts>(&value)) return rec->agent_id;
  return std::get<Tombstone>(value).agent_id;
}

const HlcStamp& CrdtRecord::stamp() const {
  if (const auto* rec = std::get_if<AgentFacts>(&value)) return rec->version;
  return std::get<Tombstone>(value).revoked_at;
}

CrdtRecord crdt_merge(const CrdtRecord& a, const CrdtRecord& b) {
  if (a.agent_id() != b.agent_id())
    throw MergeDomainError("crdt_merge across distinct agent ids");
  if (a.stamp() < b.stamp()) return b;
  if (b.stamp() < a.stamp()) return a;
  // Equal stamps cannot come from distinct writers (node tiebreak); keep the
  // tombstone if one side revokes so a tie can never resurrect a record.
  if (b.is_tombstone()) return b;
  return a;
}

}  // namespace agentnet
