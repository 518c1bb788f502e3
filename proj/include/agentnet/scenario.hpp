#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agentnet/json_io.hpp"
#include "agentnet/metrics.hpp"

namespace agentnet {

/// JSON-facing mirror of sim::LinkModel.
struct LinkConfig {
  std::string kind = "fixed";  // fixed | uniform | lognormal
  double base_ms = 0.0;
  double lo_ms = 0.0, hi_ms = 0.0;      // uniform jitter bounds
  double median_ms = 0.0, sigma = 0.0;  // lognormal jitter shape
  double loss_rate = 0.0;

  static LinkConfig fixed(double base_ms);
  static LinkConfig uniform(double base_ms, double lo_ms, double hi_ms);
  static LinkConfig lognormal(double base_ms, double median_ms, double sigma);
  sim::LinkModel to_model() const;
};

struct TreeConfig {
  size_t depth = 3;
  size_t fanout = 5;
  bool push_enabled = true;
  uint64_t ttl_ms = 0;  // 0 = honor each record's own TTL
  int64_t processing_ms = 1;
  LinkConfig link = LinkConfig::fixed(10.0);
};

struct DhtConfig {
  size_t nodes = 1'000;
  size_t k = 20;
  size_t alpha = 3;
  size_t query_replicas = 3;
  int64_t rpc_timeout_ms = 100;
  LinkConfig link = LinkConfig::fixed(5.0);
  size_t gossip_fanout = 3;
  int64_t gossip_period_ms = 10;  // 0 disables anti-entropy
};

struct ChurnConfig {
  double join_per_s = 0.0;
  double leave_per_s = 0.0;
};

struct WorkloadConfig {
  std::string mode = "all";  // update_propagation: ttl | push | gossip | all
  std::vector<uint64_t> ttl_values_ms = {1'000, 60'000};
  size_t queries = 1'000;
  size_t providers = 50;
  double min_trust = 0.0;
  int64_t duration_ms = 10'000;
  int64_t revoke_at_ms = 2'000;
  int64_t staple_valid_for_ms = 500;
  int64_t staple_refresh_ms = 200;
  size_t verifiers = 32;
  int64_t verifier_check_interval_ms = 50;
};

struct BridgeConfig {
  int64_t cache_ttl_ms = 60'000;
  LinkConfig link = LinkConfig::fixed(5.0);
  size_t max_providers = 16;
};

struct SearchPathEntry {
  std::string label;
  std::string kind;  // private_shard | upgrade_fabric | switch_fabric
};

/// Full description of one benchmark run. Parsed strictly: unknown keys and
/// out-of-bounds values are rejected with every violation listed at once.
struct ScenarioConfig {
  std::string scenario;
  uint64_t seed = 1;
  TreeConfig tree;
  DhtConfig dht;
  ChurnConfig churn;
  WorkloadConfig workload;
  BridgeConfig bridge;
  std::vector<SearchPathEntry> search_path;  // consulted by boundary_audit
  std::vector<Budget> budgets;               // empty = scenario defaults
  bool record_trace = false;
};

const std::vector<std::string>& scenario_names();

/// Desk-scale defaults for a named scenario. Throws ConfigError on an
/// unknown name.
ScenarioConfig default_config(const std::string& scenario);

/// Strict parse: starts from the named scenario's defaults, applies
/// overrides, rejects unknown keys at every nesting level and aggregates all
/// violations into a single ConfigError.
ScenarioConfig config_from_json(const Json& j);

Json to_json(const ScenarioConfig& config);

/// Budget set actually applied to a run: the config's own budgets, or the
/// scenario defaults (a pure function of the config) when none are given.
std::vector<Budget> effective_budgets(const ScenarioConfig& config);

/// Build fabrics and workload, run the simulation, record samples and attach
/// effective_budgets(). Deterministic for a fixed config.
MetricsReport run_scenario(const ScenarioConfig& config);

}  // namespace agentnet
