#include <doctest.h>

#include <map>
#include <vector>

#include "agentnet/errors.hpp"
#include "agentnet/tree_fabric.hpp"
#include "helpers.hpp"

using namespace agentnet;

namespace {

TreeParams flat_params(uint32_t depth, uint32_t fanout, int64_t processing,
                       double link_ms = 10.0) {
  TreeParams p;
  p.depth = depth;
  p.fanout = fanout;
  p.processing_ms = processing;
  p.link = sim::LinkModel::fixed(link_ms);
  return p;
}

}  // namespace

TEST_CASE("a depth-3 cold resolve over 10ms links costs 60ms with free processing") {
  sim::SimEngine eng(1);
  TreeFabric tree(eng, flat_params(3, 2, 0));
  CHECK(tree.node_count() == 1 + 2 + 4 + 8);
  CHECK(tree.leaves().size() == 8);

  KeyPair keys = testutil::kp(1);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts rec = testutil::record(keys, clock, 0);
  tree.publish(rec);

  auto out = tree.resolve_now(tree.leaves()[0], rec.agent_id);
  CHECK(out.found);
  CHECK(out.latency_ms == 60);  // 3 links up + 3 links down
  CHECK(out.depth_hit == 3);
  CHECK(out.record->version == rec.version);
}

TEST_CASE("per-hop processing is charged at every message arrival") {
  sim::SimEngine eng(1);
  TreeFabric tree(eng, flat_params(3, 2, 1));
  KeyPair keys = testutil::kp(1);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts rec = testutil::record(keys, clock, 0);
  tree.publish(rec);
  auto out = tree.resolve_now(tree.leaves()[0], rec.agent_id);
  CHECK(out.latency_ms == 66);  // 6 x 10ms links + 6 x 1ms arrivals
}

TEST_CASE("a push reaches a depth-3 subscriber 30ms after publish") {
  sim::SimEngine eng(1);
  TreeFabric tree(eng, flat_params(3, 2, 0));
  KeyPair keys = testutil::kp(1);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts rec = testutil::record(keys, clock, 0);

  for (size_t leaf : tree.leaves()) tree.subscribe_push(leaf, rec.agent_id);
  std::map<size_t, int64_t> arrivals = tree.push_convergence(rec);

  CHECK(arrivals.size() == tree.node_count());  // all resolvers sit on some route
  int64_t t_pub = arrivals.at(0);
  for (const auto& [node, t] : arrivals) {
    CHECK(t - t_pub == 10 * tree.level_of(node));
  }
}

TEST_CASE("pushes follow only subscribed routes") {
  sim::SimEngine eng(1);
  TreeFabric tree(eng, flat_params(2, 3, 0));
  KeyPair keys = testutil::kp(2);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts rec = testutil::record(keys, clock, 0);

  size_t chosen = tree.leaves()[4];
  tree.subscribe_push(chosen, rec.agent_id);
  auto receipt_targets = tree.publish(rec).push_targets;
  eng.run_to_quiescence();
  CHECK(receipt_targets == 1);

  const auto* arrivals = tree.push_arrivals(rec.agent_id, rec.version);
  REQUIRE(arrivals != nullptr);
  // Exactly the root, the chosen leaf and its ancestor chain.
  CHECK(arrivals->size() == 3);
  CHECK(arrivals->count(0) == 1);
  CHECK(arrivals->count(chosen) == 1);
  CHECK(arrivals->count(tree.parent_of(chosen)) == 1);

  // An unsubscribed sibling got nothing.
  size_t sibling = tree.leaves()[0];
  CHECK(arrivals->count(sibling) == 0);
  CHECK_FALSE(tree.cache_entry(sibling, rec.agent_id).has_value());
}

TEST_CASE("a root-only fabric converges instantly") {
  sim::SimEngine eng(1);
  TreeFabric tree(eng, flat_params(0, 2, 0));
  CHECK(tree.node_count() == 1);
  CHECK(tree.leaves() == std::vector<size_t>{0});

  KeyPair keys = testutil::kp(3);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts rec = testutil::record(keys, clock, 0);
  tree.subscribe_push(0, rec.agent_id);
  auto arrivals = tree.push_convergence(rec);
  REQUIRE(arrivals.size() == 1);
  CHECK(arrivals.at(0) == 0);

  auto out = tree.resolve_now(0, rec.agent_id);
  CHECK(out.latency_ms == 0);
  CHECK(out.depth_hit == 0);
}

TEST_CASE("caches filled on the way down serve later queries closer to the edge") {
  sim::SimEngine eng(1);
  TreeFabric tree(eng, flat_params(3, 2, 0));
  KeyPair keys = testutil::kp(4);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts rec = testutil::record(keys, clock, 0);
  tree.publish(rec);

  size_t a = tree.leaves()[0];
  size_t b = tree.leaves()[1];  // shares a parent with a (fanout 2)
  REQUIRE(tree.parent_of(a) == tree.parent_of(b));

  CHECK(tree.resolve_now(a, rec.agent_id).latency_ms == 60);

  // Same leaf again: local cache, free.
  auto again = tree.resolve_now(a, rec.agent_id);
  CHECK(again.latency_ms == 0);
  CHECK(again.depth_hit == 0);

  // Sibling leaf: the shared parent was filled by the first query.
  auto near = tree.resolve_now(b, rec.agent_id);
  CHECK(near.latency_ms == 20);
  CHECK(near.depth_hit == 1);
}

TEST_CASE("cached entries inherit the authoritative expiry instant") {
  sim::SimEngine eng(1);
  TreeParams params = flat_params(3, 2, 0);
  params.ttl_override_ms = 1000;
  TreeFabric tree(eng, params);
  KeyPair keys = testutil::kp(5);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts rec = testutil::record(keys, clock, 0);
  tree.publish(rec);

  size_t leaf = tree.leaves()[0];
  int64_t t0 = eng.now();
  tree.resolve_now(leaf, rec.agent_id);

  size_t parent = tree.parent_of(leaf);
  size_t grand = tree.parent_of(parent);
  auto at_leaf = tree.cache_entry(leaf, rec.agent_id);
  auto at_parent = tree.cache_entry(parent, rec.agent_id);
  auto at_grand = tree.cache_entry(grand, rec.agent_id);
  REQUIRE(at_leaf.has_value());
  REQUIRE(at_parent.has_value());
  REQUIRE(at_grand.has_value());

  // The root vouched at t0+30; every copy expires at that instant + ttl, so
  // freshness is NOT restarted per layer.
  CHECK(at_leaf->expires_at_ms == t0 + 30 + 1000);
  CHECK(at_parent->expires_at_ms == at_leaf->expires_at_ms);
  CHECK(at_grand->expires_at_ms == at_leaf->expires_at_ms);
  CHECK(at_leaf->expires_at_ms - at_leaf->inserted_ms < 1000);

  // After expiry the fabric refetches instead of serving the stale copy.
  eng.run_until(at_leaf->expires_at_ms + 1);
  AgentFacts v2 = bump_version(rec, keys, clock, eng.now());
  tree.publish(v2);
  auto out = tree.resolve_now(leaf, rec.agent_id);
  CHECK(out.record->version == v2.version);
  CHECK(out.latency_ms == 60);
}

TEST_CASE("no cache ever serves a version more than one TTL after it was superseded") {
  sim::SimEngine eng(7);
  TreeParams params = flat_params(3, 3, 1);
  params.ttl_override_ms = 200;
  params.link = sim::LinkModel::uniform(5, 0, 10);
  TreeFabric tree(eng, params);

  KeyPair keys = testutil::kp(6);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts rec = testutil::record(keys, clock, 0);
  tree.publish(rec);

  // Interleave updates and queries from rotating leaves for 2 seconds.
  std::map<HlcStamp, int64_t> superseded_at;  // version -> publish time of successor
  AgentFacts cur = rec;
  for (int step = 1; step <= 20; ++step) {
    eng.schedule(step * 100 - eng.now(), [&, step] {
      AgentFacts next = bump_version(cur, keys, clock, eng.now());
      superseded_at[cur.version] = eng.now();
      tree.publish(next);
      cur = next;
    });
    for (int q = 0; q < 4; ++q) {
      eng.schedule(step * 100 - 50 - eng.now() + q, [&, q] {
        size_t leaf = tree.leaves()[(q * 7) % tree.leaves().size()];
        tree.resolve_ttl(leaf, rec.agent_id, [](const TreeFabric::ResolveOutcome&) {});
      });
    }
    eng.run_until(step * 100);
  }
  eng.run_to_quiescence();

  size_t stale_serves = 0;
  for (const auto& serve : tree.serves()) {
    auto it = superseded_at.find(serve.version);
    if (it == superseded_at.end()) continue;  // was the freshest at serve time
    if (serve.t_ms > it->second) {
      ++stale_serves;
      CHECK(serve.t_ms - it->second <= 200);
    }
  }
  CHECK(stale_serves > 0);  // the regime actually exercised staleness
}

TEST_CASE("publish enforces strictly increasing versions") {
  sim::SimEngine eng(1);
  TreeFabric tree(eng, flat_params(2, 2, 0));
  KeyPair keys = testutil::kp(7);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts v1 = testutil::record(keys, clock, 10);
  AgentFacts v2 = bump_version(v1, keys, clock, 20);

  tree.publish(v2);
  CHECK_THROWS_AS(tree.publish(v2), StaleVersion);  // same version again
  CHECK_THROWS_AS(tree.publish(v1), StaleVersion);  // older version
}

TEST_CASE("publish validates the record") {
  sim::SimEngine eng(1);
  TreeFabric tree(eng, flat_params(2, 2, 0));
  KeyPair keys = testutil::kp(8);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts rec = testutil::record(keys, clock, 10);
  rec.trust_score = 0.123;  // invalidates the signature
  CHECK_THROWS_AS(tree.publish(rec), RecordInvalid);
}

TEST_CASE("unknown agents resolve to a miss that still pays the full path") {
  sim::SimEngine eng(1);
  TreeFabric tree(eng, flat_params(3, 2, 0));
  AgentId ghost = derive_agent_id(testutil::kp(9).public_key);

  std::optional<TreeFabric::ResolveOutcome> out;
  tree.resolve_ttl(tree.leaves()[0], ghost, [&](const TreeFabric::ResolveOutcome& o) { out = o; });
  eng.run_to_quiescence();
  REQUIRE(out.has_value());
  CHECK_FALSE(out->found);
  CHECK(out->latency_ms == 60);

  CHECK_THROWS_AS(tree.resolve_now(tree.leaves()[0], ghost), NotFound);
}

TEST_CASE("subscriptions require the push channel") {
  sim::SimEngine eng(1);
  TreeParams params = flat_params(2, 2, 0);
  params.push_enabled = false;
  TreeFabric tree(eng, params);
  AgentId agent = derive_agent_id(testutil::kp(10).public_key);
  CHECK_THROWS_AS(tree.subscribe_push(tree.leaves()[0], agent), PushUnavailable);
}

TEST_CASE("a push refreshes subscribed caches ahead of TTL expiry") {
  sim::SimEngine eng(1);
  TreeParams params = flat_params(3, 2, 0);
  params.ttl_override_ms = 100'000;  // TTL alone would hold v1 for a long time
  TreeFabric tree(eng, params);
  KeyPair keys = testutil::kp(11);
  HlcClock clock = testutil::clock_for(keys);
  AgentFacts v1 = testutil::record(keys, clock, 0);
  tree.publish(v1);

  size_t leaf = tree.leaves()[3];
  tree.subscribe_push(leaf, v1.agent_id);
  tree.resolve_now(leaf, v1.agent_id);  // v1 now cached locally

  AgentFacts v2 = bump_version(v1, keys, clock, eng.now());
  tree.push_convergence(v2);

  auto out = tree.resolve_now(leaf, v1.agent_id);
  CHECK(out.record->version == v2.version);  // fresh despite the huge TTL
  CHECK(out.latency_ms == 0);                // served from the pushed copy
  CHECK(out.depth_hit == 0);
}
