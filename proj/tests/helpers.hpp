#pragma once

// Shared fixtures for the unit tests: deterministic key material and compact
// record builders so individual tests stay focused on the behavior under test.

#include <cstdint>
#include <string>
#include <vector>

#include "agentnet/agent_facts.hpp"
#include "agentnet/crypto.hpp"
#include "agentnet/hlc.hpp"

namespace testutil {

/// Key pair derived deterministically from a small integer label.
inline agentnet::KeyPair kp(uint64_t label) {
  agentnet::BodyWriter w;
  w.str("test.keypair");
  w.u64(label);
  agentnet::Digest32 d = agentnet::sha256(w.data());
  return agentnet::generate_keypair(d);
}

/// Clock whose issuer matches the key pair, as the library expects.
inline agentnet::HlcClock clock_for(const agentnet::KeyPair& keys) {
  return agentnet::HlcClock(agentnet::derive_agent_id(keys.public_key));
}

inline agentnet::CapabilityDescriptor cap(const std::string& path) {
  agentnet::CapabilityDescriptor d;
  d.path = path;
  d.manifest_digest = agentnet::sha256(
      std::vector<uint8_t>(path.begin(), path.end()));
  return d;
}

/// A minimal valid record: one capability, one endpoint.
inline agentnet::AgentFacts record(const agentnet::KeyPair& keys, agentnet::HlcClock& clock,
                                   int64_t now_ms, double trust = 0.8,
                                   uint64_t ttl_ms = 60'000,
                                   const std::string& path = "/translate-en-es") {
  return agentnet::new_record(keys, {cap(path)}, {"sim://endpoint"}, trust,
                              agentnet::PolicyConstraints{}, ttl_ms, clock, now_ms);
}

}  // namespace testutil
