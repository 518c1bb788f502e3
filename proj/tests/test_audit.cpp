#include <doctest.h>

#include <optional>
#include <string>
#include <vector>

#include "agentnet/audit.hpp"
#include "agentnet/crypto.hpp"
#include "agentnet/rng.hpp"
#include "helpers.hpp"

using namespace agentnet;

namespace {

AuditChain sample_chain(const KeyPair& resolver, size_t n) {
  AuditChain chain(resolver.public_key);
  AgentId actor = derive_agent_id(testutil::kp(99).public_key);
  for (size_t i = 0; i < n; ++i) {
    chain.append(resolver, 1000 + static_cast<int64_t>(i) * 7, actor,
                 "cap:/translate-en-es?mt=0." + std::to_string(i), "private:acme",
                 "public:index");
  }
  return chain;
}

/// Straightforward front-to-back reference verifier, kept independent of the
/// production implementation so the two can be cross-checked.
std::optional<size_t> reference_first_failure(const AuditChain& chain) {
  Digest32 prev{};
  const auto& evs = chain.events();
  for (size_t i = 0; i < evs.size(); ++i) {
    const AuditEvent& ev = evs[i];
    if (ev.seq != i) return i;
    if (ev.prev_digest != prev) return i;
    if (sha256(ev.digest_body()) != ev.event_digest) return i;
    if (!verify(chain.resolver_key(), ev.event_digest, ev.signature)) return i;
    prev = ev.event_digest;
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("append links events and verify accepts an untouched chain") {
  KeyPair resolver = testutil::kp(1);
  AuditChain chain = sample_chain(resolver, 5);

  CHECK(chain.events().size() == 5);
  for (size_t i = 0; i < 5; ++i) CHECK(chain.events()[i].seq == i);
  for (size_t i = 1; i < 5; ++i) {
    CHECK(chain.events()[i].prev_digest == chain.events()[i - 1].event_digest);
  }
  CHECK(chain.events()[0].prev_digest == Digest32{});
  CHECK(chain.verify_chain().ok());
}

TEST_CASE("an empty chain verifies") {
  AuditChain chain(testutil::kp(1).public_key);
  CHECK(chain.verify_chain().ok());
}

TEST_CASE("tampering any field of any event is detected at that event") {
  KeyPair resolver = testutil::kp(2);
  for (size_t victim : {size_t{0}, size_t{2}, size_t{4}}) {
    AuditChain chain = sample_chain(resolver, 5);
    auto& ev = chain.mutable_events()[victim];

    SUBCASE("query text") { ev.query += "x"; }
    SUBCASE("timestamp") { ev.timestamp_ms += 1; }
    SUBCASE("actor") { ev.actor.bytes[0] ^= 1; }
    SUBCASE("from boundary") { ev.from_boundary = "private:evil"; }
    SUBCASE("to boundary") { ev.to_boundary += "2"; }
    SUBCASE("stored digest") { ev.event_digest[31] ^= 0x80; }
    SUBCASE("signature") { ev.signature[5] ^= 0x10; }

    ChainCheck check = chain.verify_chain();
    CAPTURE(victim);
    CHECK_FALSE(check.ok());
    // Digest/sig edits localize exactly; a field edit breaks the digest at the
    // same event. Either way the failure lands on the victim.
    CHECK(check.tampered_at == victim);
  }
}

TEST_CASE("re-signing with a different key does not fool verification") {
  KeyPair resolver = testutil::kp(3);
  KeyPair rogue = testutil::kp(4);
  AuditChain chain = sample_chain(resolver, 4);
  auto& ev = chain.mutable_events()[2];
  ev.query = "cap:/rewritten?mt=0.0";
  ev.event_digest = sha256(ev.digest_body());          // recompute to hide the edit
  ev.signature = sign(rogue.secret_key, ev.event_digest);  // rogue signature

  ChainCheck check = chain.verify_chain();
  CHECK_FALSE(check.ok());
  CHECK(check.tampered_at == 2);
}

TEST_CASE("splicing an event out breaks the chain") {
  KeyPair resolver = testutil::kp(5);
  AuditChain chain = sample_chain(resolver, 5);
  auto& evs = chain.mutable_events();
  evs.erase(evs.begin() + 2);
  CHECK_FALSE(chain.verify_chain().ok());
}

TEST_CASE("reordering events breaks the chain") {
  KeyPair resolver = testutil::kp(6);
  AuditChain chain = sample_chain(resolver, 5);
  auto& evs = chain.mutable_events();
  std::swap(evs[1], evs[3]);
  CHECK_FALSE(chain.verify_chain().ok());
}

TEST_CASE("verify_chain agrees with a front-to-back reference on random tampering") {
  KeyPair resolver = testutil::kp(7);
  sim::Rng rng = sim::Rng::derive(2024, "audit.fuzz");
  for (int trial = 0; trial < 200; ++trial) {
    AuditChain chain = sample_chain(resolver, 6);
    // Apply one to three independent random corruptions.
    size_t edits = 1 + rng.below(3);
    for (size_t e = 0; e < edits; ++e) {
      auto& ev = chain.mutable_events()[rng.below(6)];
      switch (rng.below(6)) {
        case 0: ev.query += "!"; break;
        case 1: ev.timestamp_ms ^= static_cast<int64_t>(1) << rng.below(20); break;
        case 2: ev.prev_digest[rng.below(32)] ^= static_cast<uint8_t>(1 << rng.below(8)); break;
        case 3: ev.event_digest[rng.below(32)] ^= static_cast<uint8_t>(1 << rng.below(8)); break;
        case 4: ev.signature[rng.below(64)] ^= static_cast<uint8_t>(1 << rng.below(8)); break;
        case 5: ev.seq += 1; break;
      }
    }
    ChainCheck check = chain.verify_chain();
    std::optional<size_t> expect = reference_first_failure(chain);
    CHECK(check.tampered_at == expect);
  }
}
