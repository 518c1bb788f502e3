#include "agentnet/audit.hpp"

#include "agentnet/errors.hpp"

namespace agentnet {

Bytes AuditEvent::digest_body() const {
  BodyWriter w;
  w.u64(seq);
  w.i64(timestamp_ms);
  w.raw(actor.bytes);
  w.str(query);
  w.str(from_boundary);
  w.str(to_boundary);
  w.raw(prev_digest);
  return w.take();
}

const AuditEvent& AuditChain::append(const KeyPair& resolver_key, int64_t timestamp_ms,
                                     AgentId actor, std::string query, std::string from_boundary,
                                     std::string to_boundary) {
  if (events_.empty()) resolver_key_ = resolver_key.public_key;
  AuditEvent ev;
  ev.seq = events_.size();
  ev.timestamp_ms = timestamp_ms;
  ev.actor = actor;
  ev.query = std::move(query);
  ev.from_boundary = std::move(from_boundary);
  ev.to_boundary = std::move(to_boundary);
  ev.prev_digest = events_.empty() ? Digest32{} : events_.back().event_digest;
  ev.event_digest = sha256(ev.digest_body());
  ev.signature = sign(resolver_key.secret_key, ev.event_digest);
  events_.push_back(std::move(ev));
  return events_.back();
}

ChainCheck AuditChain::verify_chain() const {
  // Pass 1: structural integrity (sequence, hash links, digests). Cheap, and
  // any edit to a digest-covered field is caught here without touching the
  // far more expensive signature checks.
  size_t structural_fail = events_.size();
  Digest32 prev{};
  for (size_t i = 0; i < events_.size(); ++i) {
    const AuditEvent& ev = events_[i];
    if (ev.seq != i || ev.prev_digest != prev || sha256(ev.digest_body()) != ev.event_digest) {
      structural_fail = i;
      break;
    }
    prev = ev.event_digest;
  }
  // Pass 2: signatures, but only for events before the first structural
  // failure; an earlier bad signature takes precedence, matching a single
  // front-to-back scan.
  for (size_t i = 0; i < structural_fail; ++i) {
    if (!verify(resolver_key_, events_[i].event_digest, events_[i].signature)) {
      return ChainCheck{i};
    }
  }
  if (structural_fail < events_.size()) return ChainCheck{structural_fail};
  return ChainCheck{};
}

}  // namespace agentnet
