#include <doctest.h>

#include <vector>

#include "agentnet/crdt.hpp"
#include "agentnet/errors.hpp"
#include "agentnet/rng.hpp"
#include "helpers.hpp"

using namespace agentnet;

namespace {

bool same(const CrdtRecord& a, const CrdtRecord& b) { return a == b; }

}  // namespace

TEST_CASE("the freshest stamp wins a merge in either argument order") {
  KeyPair keys = testutil::kp(1);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts v1 = testutil::record(keys, clock, 100);
  AgentFacts v2 = bump_version(v1, keys, clock, 200);

  CrdtRecord a = CrdtRecord::of(v1), b = CrdtRecord::of(v2);
  CHECK(same(crdt_merge(a, b), b));
  CHECK(same(crdt_merge(b, a), b));
}

TEST_CASE("a tombstone beats any record with a lower stamp") {
  KeyPair keys = testutil::kp(2);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts v1 = testutil::record(keys, clock, 100);
  Tombstone tomb = make_tombstone(keys, clock, 200);

  CrdtRecord rec = CrdtRecord::of(v1), dead = CrdtRecord::of(tomb);
  CHECK(crdt_merge(rec, dead).is_tombstone());
  CHECK(crdt_merge(dead, rec).is_tombstone());
}

TEST_CASE("a strictly newer record supersedes an old tombstone (re-registration)") {
  KeyPair keys = testutil::kp(3);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts v1 = testutil::record(keys, clock, 100);
  Tombstone tomb = make_tombstone(keys, clock, 200);
  AgentFacts reborn = bump_version(v1, keys, clock, 300);

  CrdtRecord merged = crdt_merge(CrdtRecord::of(tomb), CrdtRecord::of(reborn));
  CHECK_FALSE(merged.is_tombstone());
  CHECK(merged.stamp() == reborn.version);
}

TEST_CASE("on an exact stamp tie the tombstone side is kept") {
  KeyPair keys = testutil::kp(4);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts rec = testutil::record(keys, clock, 100);
  // Forge a tombstone carrying the record's own stamp: same issuer, same
  // instant. Ties across distinct issuers are impossible; within one issuer
  // the revocation must win or a tie could resurrect the record.
  Tombstone tomb;
  tomb.agent_id = rec.agent_id;
  tomb.revoked_at = rec.version;
  tomb.signature = sign(keys.secret_key, tomb.signing_body());

  CHECK(crdt_merge(CrdtRecord::of(rec), CrdtRecord::of(tomb)).is_tombstone());
  CHECK(crdt_merge(CrdtRecord::of(tomb), CrdtRecord::of(rec)).is_tombstone());
}

TEST_CASE("merging across distinct agents is a domain error") {
  KeyPair ka = testutil::kp(5), kb = testutil::kp(6);
  HlcClock ca = testutil::clock_for(ka), cb = testutil::clock_for(kb);
  CrdtRecord a = CrdtRecord::of(testutil::record(ka, ca, 1));
  CrdtRecord b = CrdtRecord::of(testutil::record(kb, cb, 1));
  CHECK_THROWS_AS(crdt_merge(a, b), MergeDomainError);
}

TEST_CASE("tombstone signatures bind the owner") {
  KeyPair owner = testutil::kp(7), other = testutil::kp(8);
  HlcClock clock = testutil::clock_for(owner);
  Tombstone tomb = make_tombstone(owner, clock, 50);
  CHECK(verify_tombstone(tomb, owner.public_key));
  CHECK_FALSE(verify_tombstone(tomb, other.public_key));

  Tombstone forged = tomb;
  forged.revoked_at.physical_ms += 1;
  CHECK_FALSE(verify_tombstone(forged, owner.public_key));
}

TEST_CASE("merge is commutative, associative and idempotent on random triples") {
  KeyPair keys = testutil::kp(9);
  HlcClock clock = testutil::clock_for(keys);

  // A pool of states for one agent: record versions and tombstones with
  // assorted stamps, including duplicated stamps across entries.
  std::vector<CrdtRecord> pool;
  AgentFacts base = testutil::record(keys, clock, 10);
  pool.push_back(CrdtRecord::of(base));
  AgentFacts cur = base;
  for (int i = 0; i < 6; ++i) {
    cur = bump_version(cur, keys, clock, 20 + i * 10);
    pool.push_back(CrdtRecord::of(cur));
  }
  for (int i = 0; i < 4; ++i) pool.push_back(CrdtRecord::of(make_tombstone(keys, clock, 35 + i * 10)));
  // A tombstone that exactly ties a record stamp.
  Tombstone tie;
  tie.agent_id = base.agent_id;
  tie.revoked_at = pool[3].stamp();
  tie.signature = sign(keys.secret_key, tie.signing_body());
  pool.push_back(CrdtRecord::of(tie));

  sim::Rng rng = sim::Rng::derive(77, "crdt.triples");
  size_t failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const CrdtRecord& a = pool[rng.below(pool.size())];
    const CrdtRecord& b = pool[rng.below(pool.size())];
    const CrdtRecord& c = pool[rng.below(pool.size())];
    if (!same(crdt_merge(a, b), crdt_merge(b, a))) ++failures;
    if (!same(crdt_merge(crdt_merge(a, b), c), crdt_merge(a, crdt_merge(b, c)))) ++failures;
    if (!same(crdt_merge(a, a), a)) ++failures;
  }
  CHECK(failures == 0);
}
