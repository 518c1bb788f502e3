// Release gate: ten end-to-end checks over the assembled system, each
// printed as a single PASS/FAIL line with the measured numbers. The binary
// exits nonzero if any check fails, so CI can gate on it directly.
//
// Checks 1-6 run the packaged benchmark scenarios at their default desk-scale
// configurations and hold the published latency / freshness / containment
// targets. Checks 7-9 exercise the core invariants directly (merge algebra,
// lookup correctness against a brute-force oracle, tamper evidence of the
// audit chain). Check 10 re-runs every scenario and demands byte-identical
// output, which is what makes every other number here reproducible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agentnet/agent_facts.hpp"
#include "agentnet/audit.hpp"
#include "agentnet/crdt.hpp"
#include "agentnet/crypto.hpp"
#include "agentnet/dht_fabric.hpp"
#include "agentnet/hlc.hpp"
#include "agentnet/metrics.hpp"
#include "agentnet/rng.hpp"
#include "agentnet/scenario.hpp"
#include "agentnet/sim.hpp"

namespace {

using namespace agentnet;
using Clock = std::chrono::steady_clock;

int g_failures = 0;
std::optional<MetricsReport> g_boundary_report;  // shared by checks 4 and 9

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) { return format_value(v); }

void run_check(int index, const std::string& name,
               const std::function<std::pair<bool, std::string>()>& body) {
  bool pass = false;
  std::string detail;
  try {
    auto [ok, text] = body();
    pass = ok;
    detail = text;
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  std::printf("[%s] %02d %-28s %s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

// --- 1. hierarchical push: p99 update convergence under 1 s ----------------

std::pair<bool, std::string> check_push_convergence() {
  auto t0 = Clock::now();
  ScenarioConfig c = default_config("update_propagation");
  c.workload.mode = "push";
  MetricsReport rep = run_scenario(c);
  double wall = seconds_since(t0);

  double p99 = rep.stat_of("push_convergence_ms", Stat::P99);
  double worst = rep.stat_of("push_convergence_ms", Stat::Max);
  size_t resolvers = rep.values("push_convergence_ms").size();
  double reached = rep.stat_of("push_reached", Stat::Max);
  double total = rep.stat_of("push_resolvers", Stat::Max);

  bool ok = p99 < 1'000.0 && resolvers >= 100 && reached == total && wall < 10.0;
  return {ok, "p99=" + fmt(p99) + "ms max=" + fmt(worst) + "ms across " +
                  std::to_string(resolvers) + " resolvers (" + fmt(reached) + "/" + fmt(total) +
                  " reached, wall " + fmt(wall) + "s, need p99<1000ms over >=100 in <10s)"};
}

// --- 2. gossip: full 1000-node convergence within 2*ceil(log2 N) rounds ----

std::pair<bool, std::string> check_gossip_convergence() {
  auto t0 = Clock::now();
  ScenarioConfig c = default_config("update_propagation");
  c.workload.mode = "gossip";
  c.dht.nodes = 1'000;
  MetricsReport rep = run_scenario(c);
  double wall = seconds_since(t0);

  const double round_limit = 2.0 * std::ceil(std::log2(1000.0));  // = 20
  bool ok = wall < 30.0;
  std::string detail;
  for (const char* prefix : {"gossip", "revoke"}) {
    std::string p(prefix);
    double reached = rep.stat_of(p + "_reached", Stat::Max);
    double population = rep.stat_of(p + "_population", Stat::Max);
    ok = ok && reached == population && population == 1'000.0;
    if (reached < population) {
      detail += p + ": " + fmt(reached) + "/" + fmt(population) + " reached; ";
      continue;  // convergence metrics are left unsampled on a partial spread
    }
    double rounds = rep.stat_of(p + "_convergence_rounds", Stat::Max);
    double ms = rep.stat_of(p + "_convergence_ms", Stat::Max);
    ok = ok && rounds <= round_limit;
    detail += p + ": " + fmt(reached) + "/" + fmt(population) + " in " + fmt(rounds) +
              " rounds (" + fmt(ms) + "ms); ";
  }
  detail += "limit " + fmt(round_limit) + " rounds, wall " + fmt(wall) + "s<30s";
  return {ok, detail};
}

// --- 3. revocation: no acceptance past staple-expiry + propagation bound ---

std::pair<bool, std::string> check_revocation_bound() {
  const uint64_t seeds = 10;
  double violations = 0;
  size_t verifier_rows = 0;
  double worst_bound = 0;
  double worst_lag = 0;
  size_t unreached = 0;
  for (uint64_t seed = 1; seed <= seeds; ++seed) {
    ScenarioConfig c = default_config("revocation_race");
    c.seed = seed;
    MetricsReport rep = run_scenario(c);
    std::vector<double> rows = rep.values("bound_violations");
    verifier_rows += rows.size();
    violations += sum(rows);
    worst_bound = std::max(worst_bound, rep.stat_of("revocation_bound_ms", Stat::Max));
    if (!rep.values("stale_accept_lag_ms").empty()) {
      worst_lag = std::max(worst_lag, rep.stat_of("stale_accept_lag_ms", Stat::Max));
    }
    unreached += static_cast<size_t>(rep.stat_of("tombstone_unreached", Stat::Max));
  }
  size_t expected_rows = seeds * default_config("revocation_race").workload.verifiers;
  bool ok = violations == 0 && verifier_rows == expected_rows;
  return {ok, fmt(violations) + " violations over " + std::to_string(verifier_rows) +
                  " verifier outcomes, " + std::to_string(seeds) + " seeds; worst bound " +
                  fmt(worst_bound) + "ms, worst stale accept " + fmt(worst_lag) + "ms, " +
                  std::to_string(unreached) + " nodes missed the tombstone"};
}

// --- 4. warm cross-boundary bridge query under 50 ms -----------------------

std::pair<bool, std::string> check_bridge_warm_latency() {
  ScenarioConfig c = default_config("boundary_audit");
  MetricsReport rep = run_scenario(c);

  std::vector<double> warm = rep.values("bridge_warm_ms");
  double worst = rep.stat_of("bridge_warm_ms", Stat::Max);
  double p99 = rep.stat_of("bridge_warm_ms", Stat::P99);
  double proofs_bad = rep.stat_of("bridge_proofs_bad", Stat::Max);

  g_boundary_report = std::move(rep);  // check 9 audits the same run

  bool ok = warm.size() >= 1'000 && worst < 50.0 && proofs_bad == 0;
  return {ok, "max=" + fmt(worst) + "ms p99=" + fmt(p99) + "ms over " +
                  std::to_string(warm.size()) + " warm queries (need max<50ms over >=1000), " +
                  fmt(proofs_bad) + " bad proofs"};
}

// --- 5. capability discovery p99 under 250 ms ------------------------------

std::pair<bool, std::string> check_discovery_latency() {
  ScenarioConfig c = default_config("discovery_latency");
  MetricsReport rep = run_scenario(c);

  std::vector<double> lat = rep.values("discovery_ms");
  double p99 = rep.stat_of("discovery_ms", Stat::P99);
  double worst = rep.stat_of("discovery_ms", Stat::Max);
  std::vector<double> hits = rep.values("discovery_hits");
  size_t answered = static_cast<size_t>(
      std::count_if(hits.begin(), hits.end(), [](double h) { return h > 0; }));

  bool ok = lat.size() == c.workload.queries && p99 < 250.0;
  return {ok, "p99=" + fmt(p99) + "ms max=" + fmt(worst) + "ms over " +
                  std::to_string(lat.size()) + " queries (need p99<250ms), " +
                  std::to_string(answered) + " returned providers"};
}

// --- 6. TTL staleness bounded by the TTL (and genuinely paying for it) -----

std::pair<bool, std::string> check_ttl_staleness() {
  ScenarioConfig c = default_config("update_propagation");
  c.workload.mode = "ttl";
  MetricsReport rep = run_scenario(c);

  bool ok = true;
  std::string detail;
  for (uint64_t ttl : c.workload.ttl_values_ms) {
    std::string metric = "staleness_ms.ttl" + std::to_string(ttl);
    std::vector<double> vals = rep.values(metric);
    if (vals.empty()) {
      ok = false;
      detail += "ttl" + std::to_string(ttl) + ": no stale serves; ";
      continue;
    }
    double worst = rep.stat_of(metric, Stat::Max);
    bool bounded = worst <= static_cast<double>(ttl);
    bool substantial = worst > 0.5 * static_cast<double>(ttl);
    ok = ok && bounded && substantial;
    detail += "ttl" + std::to_string(ttl) + ": max staleness " + fmt(worst) + "ms of " +
              std::to_string(vals.size()) + " stale serves; ";
  }
  detail += "need max <= ttl and > ttl/2 for each";
  return {ok, detail};
}

// --- 7. replica merge is commutative, associative, idempotent --------------

std::pair<bool, std::string> check_merge_algebra() {
  KeyPair kp = generate_keypair(sha256(Bytes{'g', 'a', 't', 'e', '.', 'c', 'r', 'd', 't'}));
  HlcClock clock(derive_agent_id(kp.public_key));

  // One agent's history: interleaved re-registrations and revocations, plus a
  // forged-looking tombstone that ties an existing record stamp exactly.
  std::vector<CrdtRecord> pool;
  AgentFacts rec = new_record(kp, {}, {"sim://merge-pool"}, 0.8, PolicyConstraints{}, 60'000,
                              clock, 1'000);
  pool.push_back(CrdtRecord::of(rec));
  for (int i = 1; i <= 9; ++i) {
    rec = bump_version(rec, kp, clock, 1'000 + 250 * i);
    pool.push_back(CrdtRecord::of(rec));
    if (i % 3 == 0) pool.push_back(CrdtRecord::of(make_tombstone(kp, clock, 1'000 + 250 * i)));
  }
  {
    // Tie-stamp tombstone: same HLC stamp as the latest record version.
    Tombstone tie = make_tombstone(kp, clock, 9'999);
    tie.revoked_at = rec.version;
    pool.push_back(CrdtRecord::of(tie));
  }

  const size_t trials = 10'000;
  sim::Rng rng = sim::Rng::derive(77, "gate.merge");
  size_t failures = 0;
  for (size_t t = 0; t < trials; ++t) {
    const CrdtRecord& a = pool[rng.below(pool.size())];
    const CrdtRecord& b = pool[rng.below(pool.size())];
    const CrdtRecord& c = pool[rng.below(pool.size())];
    bool commutes = crdt_merge(a, b) == crdt_merge(b, a);
    bool associates = crdt_merge(crdt_merge(a, b), c) == crdt_merge(a, crdt_merge(b, c));
    bool idempotent = crdt_merge(a, a) == a;
    if (!(commutes && associates && idempotent)) ++failures;
  }
  bool ok = failures == 0;
  return {ok, std::to_string(failures) + " law violations in " + std::to_string(trials) +
                  " random triples from a " + std::to_string(pool.size()) +
                  "-element version/tombstone pool"};
}

// --- 8. lookups at N=1024: hop bound and exact closest-k -------------------

std::pair<bool, std::string> check_dht_lookup() {
  auto t0 = Clock::now();
  sim::SimEngine eng(4242, /*record_trace=*/false);
  DhtParams params;  // k=20, alpha=3, fixed 5 ms links
  DhtFabric dht(eng, params);
  dht.build_network(1'024);

  const uint32_t hop_limit = 12;  // ceil(log2 1024) + 2
  const size_t lookups = 1'000;
  sim::Rng rng = sim::Rng::derive(4242, "gate.lookup");
  size_t within_hops = 0;
  size_t oracle_exact = 0;
  uint32_t max_hops = 0;
  std::vector<double> hop_samples;
  hop_samples.reserve(lookups);

  std::vector<size_t> live = dht.live_nodes();
  for (size_t i = 0; i < lookups; ++i) {
    AgentId target{};
    for (auto& byte : target.bytes) byte = static_cast<uint8_t>(rng.below(256));
    size_t origin = live[rng.below(live.size())];

    std::optional<LookupResult> res;
    dht.lookup(origin, target, [&res](const LookupResult& r) { res = r; });
    eng.run_to_quiescence();
    if (!res || !res->complete) continue;

    max_hops = std::max(max_hops, res->hop_count);
    hop_samples.push_back(static_cast<double>(res->hop_count));
    if (res->hop_count <= hop_limit) ++within_hops;
    if (res->closest == dht.brute_force_closest(target, params.k)) ++oracle_exact;
  }

  double hop_p99 = percentile_p99(hop_samples);
  bool ok = oracle_exact == lookups && within_hops >= (lookups * 99) / 100 &&
            hop_samples.size() == lookups;
  return {ok, std::to_string(oracle_exact) + "/" + std::to_string(lookups) +
                  " matched the brute-force closest-20 oracle; hops p99=" + fmt(hop_p99) +
                  " max=" + std::to_string(max_hops) + " (" + std::to_string(within_hops) +
                  " within " + std::to_string(hop_limit) + "), wall " +
                  fmt(seconds_since(t0)) + "s"};
}

// --- 9. audit chain: complete coverage and single-bit tamper evidence ------

size_t sweep_bits(AuditChain& chain, uint8_t* bytes, size_t len) {
  size_t detected = 0;
  for (size_t i = 0; i < len; ++i) {
    for (int b = 0; b < 8; ++b) {
      bytes[i] ^= static_cast<uint8_t>(1u << b);
      if (!chain.verify_chain().ok()) ++detected;
      bytes[i] ^= static_cast<uint8_t>(1u << b);
    }
  }
  return detected;
}

std::pair<bool, std::string> check_audit_tamper_evidence() {
  // (a) the boundary run from check 4: every cross-boundary message audited.
  if (!g_boundary_report) {
    ScenarioConfig c = default_config("boundary_audit");
    g_boundary_report = run_scenario(c);
  }
  const MetricsReport& rep = *g_boundary_report;
  double unmatched_msgs = rep.stat_of("unmatched_messages", Stat::Max);
  double unmatched_events = rep.stat_of("unmatched_events", Stat::Max);
  double chain_ok = rep.stat_of("chain_ok", Stat::Min);
  double events_total = rep.stat_of("audit_events_total", Stat::Max);
  bool coverage_ok =
      unmatched_msgs == 0 && unmatched_events == 0 && chain_ok == 1 && events_total >= 1;

  // (b) a fresh 10-event chain: every single-bit corruption of every field of
  // every event must break verification, and undoing it must restore it.
  KeyPair rk = generate_keypair(sha256(Bytes{'g', 'a', 't', 'e', '.', 'a', 'u', 'd'}));
  AuditChain chain(rk.public_key);
  for (uint64_t i = 0; i < 10; ++i) {
    AgentId actor{};
    actor.bytes[0] = static_cast<uint8_t>(0x10 + i);
    chain.append(rk, 1'000 + static_cast<int64_t>(7 * i), actor,
                 "cap:/translate-en-es?mt=0." + std::to_string(i), "private:acme",
                 "public:index");
  }
  if (!chain.verify_chain().ok()) return {false, "fresh chain failed to verify"};

  size_t flips = 0, detected = 0;
  auto sweep = [&](uint8_t* bytes, size_t len) {
    flips += len * 8;
    detected += sweep_bits(chain, bytes, len);
  };
  for (AuditEvent& ev : chain.mutable_events()) {
    sweep(reinterpret_cast<uint8_t*>(&ev.seq), sizeof(ev.seq));
    sweep(reinterpret_cast<uint8_t*>(&ev.timestamp_ms), sizeof(ev.timestamp_ms));
    sweep(ev.actor.bytes.data(), ev.actor.bytes.size());
    sweep(reinterpret_cast<uint8_t*>(ev.query.data()), ev.query.size());
    sweep(reinterpret_cast<uint8_t*>(ev.from_boundary.data()), ev.from_boundary.size());
    sweep(reinterpret_cast<uint8_t*>(ev.to_boundary.data()), ev.to_boundary.size());
    sweep(ev.prev_digest.data(), ev.prev_digest.size());
    sweep(ev.event_digest.data(), ev.event_digest.size());
    sweep(ev.signature.data(), ev.signature.size());
  }
  bool restored = chain.verify_chain().ok();

  bool ok = coverage_ok && detected == flips && restored;
  return {ok, "coverage: " + fmt(unmatched_msgs) + " unmatched messages, " +
                  fmt(unmatched_events) + " unmatched events over " + fmt(events_total) +
                  " audited crossings; tamper sweep: " + std::to_string(detected) + "/" +
                  std::to_string(flips) + " bit flips detected, chain " +
                  (restored ? "restored" : "NOT restored")};
}

// --- 10. every scenario reproduces byte-identical output -------------------

std::pair<bool, std::string> check_determinism() {
  size_t identical = 0;
  std::string divergent;
  for (const std::string& name : scenario_names()) {
    ScenarioConfig c = default_config(name);
    c.seed = 7;
    std::string first = run_scenario(c).to_csv();
    std::string second = run_scenario(c).to_csv();
    if (first == second && !first.empty()) {
      ++identical;
    } else {
      divergent += (divergent.empty() ? "" : ", ") + name;
    }
  }
  bool ok = identical == scenario_names().size();
  std::string detail = std::to_string(identical) + "/" +
                       std::to_string(scenario_names().size()) +
                       " scenarios byte-identical across repeated runs (seed 7)";
  if (!divergent.empty()) detail += "; divergent: " + divergent;
  return {ok, detail};
}

}  // namespace

int main() {
  auto t0 = Clock::now();
  std::printf("release gate: %zu scenario + invariant checks\n", static_cast<size_t>(10));

  run_check(1, "push-convergence-p99", check_push_convergence);
  run_check(2, "gossip-round-bound", check_gossip_convergence);
  run_check(3, "revocation-bound", check_revocation_bound);
  run_check(4, "bridge-warm-latency", check_bridge_warm_latency);
  run_check(5, "discovery-p99", check_discovery_latency);
  run_check(6, "ttl-staleness-bound", check_ttl_staleness);
  run_check(7, "merge-algebra", check_merge_algebra);
  run_check(8, "lookup-oracle-and-hops", check_dht_lookup);
  run_check(9, "audit-tamper-evidence", check_audit_tamper_evidence);
  run_check(10, "deterministic-replay", check_determinism);

  std::printf("%s: %d of 10 checks failed (%.1fs)\n", g_failures == 0 ? "OK" : "FAILED",
              g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
