#include <doctest.h>

#include <algorithm>
#include <set>
#include <tuple>
#include <vector>

#include "agentnet/hlc.hpp"
#include "helpers.hpp"

using namespace agentnet;

TEST_CASE("stamps from one clock are strictly increasing even when time stalls") {
  HlcClock clock(derive_agent_id(testutil::kp(1).public_key));
  std::vector<HlcStamp> stamps;
  // Physical input: advances, stalls, and jumps backwards.
  for (int64_t t : {10, 10, 10, 12, 12, 5, 5, 13}) stamps.push_back(clock.next(t));
  for (size_t i = 1; i < stamps.size(); ++i) {
    CHECK(stamps[i - 1] < stamps[i]);
  }
}

TEST_CASE("a physical advance resets the logical counter") {
  HlcClock clock(derive_agent_id(testutil::kp(1).public_key));
  clock.next(100);
  HlcStamp burst = clock.next(100);
  CHECK(burst.logical == 1);
  HlcStamp later = clock.next(200);
  CHECK(later.physical_ms == 200);
  CHECK(later.logical == 0);
}

TEST_CASE("ordering matches the lexicographic tuple oracle") {
  AgentId ida = derive_agent_id(testutil::kp(1).public_key);
  AgentId idb = derive_agent_id(testutil::kp(2).public_key);
  std::vector<HlcStamp> all;
  for (int64_t p : {1, 2}) {
    for (uint32_t l : {0u, 1u}) {
      for (const AgentId& id : {ida, idb}) all.push_back(HlcStamp{p, l, id});
    }
  }
  for (const HlcStamp& x : all) {
    for (const HlcStamp& y : all) {
      bool oracle = std::tie(x.physical_ms, x.logical, x.node_tiebreak) <
                    std::tie(y.physical_ms, y.logical, y.node_tiebreak);
      CHECK((x < y) == oracle);
    }
  }
}

TEST_CASE("distinct issuers can never mint equal stamps") {
  HlcClock a(derive_agent_id(testutil::kp(1).public_key));
  HlcClock b(derive_agent_id(testutil::kp(2).public_key));
  std::set<HlcStamp> seen;
  for (int64_t t = 0; t < 50; ++t) {
    CHECK(seen.insert(a.next(t / 3)).second);  // same physical input thrice
    CHECK(seen.insert(b.next(t / 3)).second);
  }
  CHECK(seen.size() == 100);
}

TEST_CASE("observe folds a foreign stamp in so the next local stamp dominates it") {
  HlcClock local(derive_agent_id(testutil::kp(1).public_key));
  HlcClock remote(derive_agent_id(testutil::kp(2).public_key));

  local.next(10);
  HlcStamp foreign = remote.next(500);  // far ahead of local physical time
  local.observe(foreign);
  HlcStamp next = local.next(11);  // local wall clock still behind
  CHECK(foreign < next);

  // Also strictly greater than anything minted locally before the observe.
  HlcStamp after = local.next(11);
  CHECK(next < after);
}

TEST_CASE("observe of an older stamp does not disturb the clock") {
  HlcClock local(derive_agent_id(testutil::kp(1).public_key));
  HlcStamp high = local.next(1000);
  HlcClock remote(derive_agent_id(testutil::kp(2).public_key));
  local.observe(remote.next(3));
  CHECK(high < local.next(3));
}
