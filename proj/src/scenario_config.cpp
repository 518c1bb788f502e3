#include <algorithm>
#include <cmath>
#include <set>

#include "agentnet/agent_facts.hpp"
#include "agentnet/errors.hpp"
#include "agentnet/scenario.hpp"

namespace agentnet {

LinkConfig LinkConfig::fixed(double base_ms) {
  LinkConfig c;
  c.kind = "fixed";
  c.base_ms = base_ms;
  return c;
}

LinkConfig LinkConfig::uniform(double base_ms, double lo_ms, double hi_ms) {
  LinkConfig c;
  c.kind = "uniform";
  c.base_ms = base_ms;
  c.lo_ms = lo_ms;
  c.hi_ms = hi_ms;
  return c;
}

LinkConfig LinkConfig::lognormal(double base_ms, double median_ms, double sigma) {
  LinkConfig c;
  c.kind = "lognormal";
  c.base_ms = base_ms;
  c.median_ms = median_ms;
  c.sigma = sigma;
  return c;
}

sim::LinkModel LinkConfig::to_model() const {
  sim::LinkModel m;
  if (kind == "fixed") {
    m = sim::LinkModel::fixed(base_ms);
  } else if (kind == "uniform") {
    m = sim::LinkModel::uniform(base_ms, lo_ms, hi_ms);
  } else if (kind == "lognormal") {
    m = sim::LinkModel::lognormal_median(base_ms, median_ms, sigma);
  } else {
    throw ConfigError("unknown link kind: " + kind);
  }
  m.loss_rate = loss_rate;
  return m;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "update_propagation", "revocation_race", "discovery_latency",
      "boundary_audit",     "churn_resilience",
  };
  return names;
}

ScenarioConfig default_config(const std::string& scenario) {
  if (std::find(scenario_names().begin(), scenario_names().end(), scenario) ==
      scenario_names().end()) {
    std::string known;
    for (const auto& n : scenario_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown scenario '" + scenario + "' (known: " + known + ")");
  }

  ScenarioConfig c;
  c.scenario = scenario;
  c.seed = 1;

  if (scenario == "update_propagation") {
    // Depth-3 / fanout-5 tree = 156 resolvers; lognormal links, median 10 ms.
    c.tree.link = LinkConfig::lognormal(0.0, 10.0, 0.35);
    c.dht.nodes = 1'000;
  } else if (scenario == "revocation_race") {
    c.dht.nodes = 200;
    c.workload.duration_ms = 10'000;
    c.workload.revoke_at_ms = 2'000;
    c.workload.staple_valid_for_ms = 500;
    c.workload.staple_refresh_ms = 200;
    c.workload.verifiers = 32;
    c.workload.verifier_check_interval_ms = 50;
  } else if (scenario == "discovery_latency") {
    c.dht.nodes = 1'000;
    c.dht.gossip_period_ms = 0;  // pure lookup path, no background traffic
    c.workload.queries = 1'000;
    c.workload.providers = 50;
  } else if (scenario == "boundary_audit") {
    c.dht.nodes = 200;
    c.dht.gossip_period_ms = 0;
    c.workload.queries = 1'200;
    c.workload.providers = 20;
    c.search_path = {{"private:acme", "private_shard"}, {"public:index", "switch_fabric"}};
    c.record_trace = true;
  } else if (scenario == "churn_resilience") {
    c.dht.nodes = 500;
    c.dht.gossip_period_ms = 50;  // repair pace; denser gossip adds cost, not signal
    c.churn.join_per_s = 2.0;
    c.churn.leave_per_s = 2.0;
    c.workload.queries = 400;
    c.workload.duration_ms = 10'000;
  }
  return c;
}

std::vector<Budget> effective_budgets(const ScenarioConfig& c) {
  if (!c.budgets.empty()) return c.budgets;
  std::vector<Budget> out;
  auto add = [&out](std::string name, std::string metric, Stat stat, Cmp cmp, double threshold) {
    out.push_back(Budget{std::move(name), std::move(metric), stat, cmp, threshold});
  };

  if (c.scenario == "update_propagation") {
    bool all = c.workload.mode == "all";
    if (all || c.workload.mode == "ttl") {
      for (uint64_t ttl : c.workload.ttl_values_ms) {
        std::string metric = "staleness_ms.ttl" + std::to_string(ttl);
        add("staleness_under_ttl_" + std::to_string(ttl), metric, Stat::Max, Cmp::Le,
            static_cast<double>(ttl));
        add("staleness_over_half_ttl_" + std::to_string(ttl), metric, Stat::Max, Cmp::Gt,
            0.5 * static_cast<double>(ttl));
      }
    }
    if (all || c.workload.mode == "push") {
      add("push_p99_under_1s", "push_convergence_ms", Stat::P99, Cmp::Lt, 1'000.0);
    }
    if (all || c.workload.mode == "gossip") {
      double bound = 2.0 * std::ceil(std::log2(static_cast<double>(std::max<size_t>(c.dht.nodes, 2))));
      add("gossip_rounds_within_2log2n", "gossip_convergence_rounds", Stat::Max, Cmp::Le, bound);
    }
  } else if (c.scenario == "revocation_race") {
    add("no_stale_acceptance_past_bound", "bound_violations", Stat::Max, Cmp::Eq, 0.0);
  } else if (c.scenario == "discovery_latency") {
    add("discovery_p99_under_250ms", "discovery_ms", Stat::P99, Cmp::Lt, 250.0);
  } else if (c.scenario == "boundary_audit") {
    add("audit_no_unmatched_messages", "unmatched_messages", Stat::Max, Cmp::Eq, 0.0);
    add("audit_no_unmatched_events", "unmatched_events", Stat::Max, Cmp::Eq, 0.0);
    add("audit_chain_verifies", "chain_ok", Stat::Min, Cmp::Eq, 1.0);
    add("containment_holds", "containment_violations", Stat::Max, Cmp::Eq, 0.0);
    add("warm_bridge_under_50ms", "bridge_warm_ms", Stat::Max, Cmp::Lt, 50.0);
  } else if (c.scenario == "churn_resilience") {
    add("churn_lookup_success", "churn_success_rate", Stat::Min, Cmp::Ge, 0.9);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Strict JSON parsing

namespace {

/// Per-object key checker: flags unknown keys, wrong-typed values and bounds
/// violations into a shared diagnostic list instead of stopping at the first.
class Fields {
 public:
  Fields(const Json& j, std::string path, std::vector<std::string>& errs)
      : j_(j), path_(std::move(path)), errs_(errs) {
    if (!j_.is_object()) {
      errs_.push_back(path_ + ": expected a JSON object");
      ok_ = false;
    }
  }

  ~Fields() {
    if (!ok_) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) errs_.push_back(path_ + ": unknown key '" + key + "'");
    }
  }

  const Json* sub(const char* key) {
    if (!ok_) return nullptr;
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const char* key, T& out) {
    const Json* v = sub(key);
    if (v == nullptr) return;
    try {
      out = v->get<T>();
    } catch (const nlohmann::json::exception&) {
      errs_.push_back(path_ + "." + key + ": wrong type (got " + std::string(v->type_name()) +
                      ")");
    }
  }

  bool object_ok() const { return ok_; }

 private:
  const Json& j_;
  std::string path_;
  std::vector<std::string>& errs_;
  std::set<std::string> seen_;
  bool ok_ = true;
};

void parse_link(const Json& j, const std::string& path, LinkConfig& link,
                std::vector<std::string>& errs) {
  Fields f(j, path, errs);
  f.get("kind", link.kind);
  f.get("base_ms", link.base_ms);
  f.get("lo_ms", link.lo_ms);
  f.get("hi_ms", link.hi_ms);
  f.get("median_ms", link.median_ms);
  f.get("sigma", link.sigma);
  f.get("loss_rate", link.loss_rate);
}

void parse_tree(const Json& j, ScenarioConfig& c, std::vector<std::string>& errs) {
  Fields f(j, "tree", errs);
  f.get("depth", c.tree.depth);
  f.get("fanout", c.tree.fanout);
  f.get("push_enabled", c.tree.push_enabled);
  f.get("ttl_ms", c.tree.ttl_ms);
  f.get("processing_ms", c.tree.processing_ms);
  if (const Json* l = f.sub("link")) parse_link(*l, "tree.link", c.tree.link, errs);
}

void parse_dht(const Json& j, ScenarioConfig& c, std::vector<std::string>& errs) {
  Fields f(j, "dht", errs);
  f.get("nodes", c.dht.nodes);
  f.get("k", c.dht.k);
  f.get("alpha", c.dht.alpha);
  f.get("query_replicas", c.dht.query_replicas);
  f.get("rpc_timeout_ms", c.dht.rpc_timeout_ms);
  f.get("gossip_fanout", c.dht.gossip_fanout);
  f.get("gossip_period_ms", c.dht.gossip_period_ms);
  if (const Json* l = f.sub("link")) parse_link(*l, "dht.link", c.dht.link, errs);
}

void parse_churn(const Json& j, ScenarioConfig& c, std::vector<std::string>& errs) {
  Fields f(j, "churn", errs);
  f.get("join_per_s", c.churn.join_per_s);
  f.get("leave_per_s", c.churn.leave_per_s);
}

void parse_workload(const Json& j, ScenarioConfig& c, std::vector<std::string>& errs) {
  Fields f(j, "workload", errs);
  f.get("mode", c.workload.mode);
  f.get("ttl_values_ms", c.workload.ttl_values_ms);
  f.get("queries", c.workload.queries);
  f.get("providers", c.workload.providers);
  f.get("min_trust", c.workload.min_trust);
  f.get("duration_ms", c.workload.duration_ms);
  f.get("revoke_at_ms", c.workload.revoke_at_ms);
  f.get("staple_valid_for_ms", c.workload.staple_valid_for_ms);
  f.get("staple_refresh_ms", c.workload.staple_refresh_ms);
  f.get("verifiers", c.workload.verifiers);
  f.get("verifier_check_interval_ms", c.workload.verifier_check_interval_ms);
}

void parse_bridge(const Json& j, ScenarioConfig& c, std::vector<std::string>& errs) {
  Fields f(j, "bridge", errs);
  f.get("cache_ttl_ms", c.bridge.cache_ttl_ms);
  f.get("max_providers", c.bridge.max_providers);
  if (const Json* l = f.sub("link")) parse_link(*l, "bridge.link", c.bridge.link, errs);
}

void parse_search_path(const Json& j, ScenarioConfig& c, std::vector<std::string>& errs) {
  if (!j.is_array()) {
    errs.push_back("search_path: expected an array");
    return;
  }
  c.search_path.clear();
  size_t i = 0;
  for (const Json& entry : j) {
    SearchPathEntry e;
    Fields f(entry, "search_path[" + std::to_string(i) + "]", errs);
    f.get("label", e.label);
    f.get("kind", e.kind);
    c.search_path.push_back(std::move(e));
    ++i;
  }
}

std::optional<Stat> stat_from_string(const std::string& s) {
  for (Stat v : {Stat::Count, Stat::Min, Stat::Median, Stat::P99, Stat::Max}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

std::optional<Cmp> cmp_from_string(const std::string& s) {
  for (Cmp v : {Cmp::Lt, Cmp::Le, Cmp::Gt, Cmp::Ge, Cmp::Eq}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

void parse_budgets(const Json& j, ScenarioConfig& c, std::vector<std::string>& errs) {
  if (!j.is_array()) {
    errs.push_back("budgets: expected an array");
    return;
  }
  c.budgets.clear();
  size_t i = 0;
  for (const Json& entry : j) {
    std::string path = "budgets[" + std::to_string(i) + "]";
    Budget b;
    std::string stat = "p99", cmp = "<";
    Fields f(entry, path, errs);
    f.get("name", b.name);
    f.get("metric", b.metric);
    f.get("stat", stat);
    f.get("cmp", cmp);
    f.get("threshold", b.threshold);
    if (auto s = stat_from_string(stat)) {
      b.stat = *s;
    } else {
      errs.push_back(path + ".stat: unknown stat '" + stat + "'");
    }
    if (auto m = cmp_from_string(cmp)) {
      b.cmp = *m;
    } else {
      errs.push_back(path + ".cmp: unknown comparison '" + cmp + "'");
    }
    c.budgets.push_back(std::move(b));
    ++i;
  }
}

void check_link(const LinkConfig& link, const std::string& path,
                std::vector<std::string>& errs) {
  if (link.kind != "fixed" && link.kind != "uniform" && link.kind != "lognormal") {
    errs.push_back(path + ".kind: must be fixed, uniform or lognormal (got '" + link.kind +
                   "')");
  }
  if (link.base_ms < 0) errs.push_back(path + ".base_ms: must be >= 0");
  if (!(link.loss_rate >= 0.0 && link.loss_rate < 1.0)) {
    errs.push_back(path + ".loss_rate: must lie in [0, 1)");
  }
  if (link.kind == "uniform" && link.lo_ms > link.hi_ms) {
    errs.push_back(path + ": lo_ms must be <= hi_ms");
  }
  if (link.kind == "lognormal") {
    if (!(link.median_ms > 0)) errs.push_back(path + ".median_ms: must be > 0");
    if (link.sigma < 0) errs.push_back(path + ".sigma: must be >= 0");
  }
}

void check_bounds(const ScenarioConfig& c, std::vector<std::string>& errs) {
  if (c.tree.depth > 6) errs.push_back("tree.depth: must be <= 6 at desk scale");
  if (c.tree.fanout < 1 || c.tree.fanout > 64) errs.push_back("tree.fanout: must lie in [1, 64]");
  if (c.tree.processing_ms < 0) errs.push_back("tree.processing_ms: must be >= 0");
  if (c.tree.ttl_ms > kMaxTtlMs) errs.push_back("tree.ttl_ms: exceeds the 24 h ceiling");
  check_link(c.tree.link, "tree.link", errs);

  if (c.dht.nodes < 1 || c.dht.nodes > 100'000) {
    errs.push_back("dht.nodes: must lie in [1, 100000]");
  }
  if (c.dht.k < 1 || c.dht.k > 256) errs.push_back("dht.k: must lie in [1, 256]");
  if (c.dht.alpha < 1 || c.dht.alpha > c.dht.k) errs.push_back("dht.alpha: must lie in [1, k]");
  if (c.dht.query_replicas < 1 || c.dht.query_replicas > c.dht.k) {
    errs.push_back("dht.query_replicas: must lie in [1, k]");
  }
  if (c.dht.rpc_timeout_ms <= 0) errs.push_back("dht.rpc_timeout_ms: must be > 0");
  if (c.dht.gossip_fanout < 1) errs.push_back("dht.gossip_fanout: must be >= 1");
  if (c.dht.gossip_period_ms < 0) errs.push_back("dht.gossip_period_ms: must be >= 0");
  check_link(c.dht.link, "dht.link", errs);

  if (c.churn.join_per_s < 0) errs.push_back("churn.join_per_s: must be >= 0");
  if (c.churn.leave_per_s < 0) errs.push_back("churn.leave_per_s: must be >= 0");

  const WorkloadConfig& w = c.workload;
  if (w.mode != "ttl" && w.mode != "push" && w.mode != "gossip" && w.mode != "all") {
    errs.push_back("workload.mode: must be ttl, push, gossip or all (got '" + w.mode + "')");
  }
  if (w.ttl_values_ms.empty()) errs.push_back("workload.ttl_values_ms: must not be empty");
  for (uint64_t ttl : w.ttl_values_ms) {
    if (ttl == 0 || ttl > kMaxTtlMs) {
      errs.push_back("workload.ttl_values_ms: every TTL must lie in (0, 24 h]");
    }
  }
  if (w.queries < 1) errs.push_back("workload.queries: must be >= 1");
  if (w.providers < 1) errs.push_back("workload.providers: must be >= 1");
  if (!(w.min_trust >= 0.0 && w.min_trust <= 1.0)) {
    errs.push_back("workload.min_trust: must lie in [0, 1]");
  }
  if (w.duration_ms <= 0) errs.push_back("workload.duration_ms: must be > 0");
  if (w.revoke_at_ms < 0 || w.revoke_at_ms >= w.duration_ms) {
    errs.push_back("workload.revoke_at_ms: must lie in [0, duration_ms)");
  }
  if (w.staple_valid_for_ms <= 0) errs.push_back("workload.staple_valid_for_ms: must be > 0");
  if (w.staple_refresh_ms <= 0 || w.staple_refresh_ms > w.staple_valid_for_ms) {
    errs.push_back("workload.staple_refresh_ms: must lie in (0, staple_valid_for_ms]");
  }
  if (w.verifiers < 1) errs.push_back("workload.verifiers: must be >= 1");
  if (w.verifier_check_interval_ms <= 0) {
    errs.push_back("workload.verifier_check_interval_ms: must be > 0");
  }

  if (c.bridge.cache_ttl_ms <= 0) errs.push_back("bridge.cache_ttl_ms: must be > 0");
  if (c.bridge.max_providers < 1) errs.push_back("bridge.max_providers: must be >= 1");
  check_link(c.bridge.link, "bridge.link", errs);

  std::set<std::string> labels;
  for (size_t i = 0; i < c.search_path.size(); ++i) {
    const SearchPathEntry& e = c.search_path[i];
    std::string path = "search_path[" + std::to_string(i) + "]";
    if (e.label.empty() || e.label.find('|') != std::string::npos ||
        e.label.find(',') != std::string::npos) {
      errs.push_back(path + ".label: must be non-empty and free of '|' and ','");
    }
    if (e.kind != "private_shard" && e.kind != "upgrade_fabric" && e.kind != "switch_fabric") {
      errs.push_back(path + ".kind: must be private_shard, upgrade_fabric or switch_fabric");
    }
    if (!labels.insert(e.label).second) errs.push_back(path + ".label: duplicate label");
  }

  for (size_t i = 0; i < c.budgets.size(); ++i) {
    const Budget& b = c.budgets[i];
    if (b.name.empty()) errs.push_back("budgets[" + std::to_string(i) + "].name: must be set");
    if (b.metric.empty()) {
      errs.push_back("budgets[" + std::to_string(i) + "].metric: must be set");
    }
  }
}

}  // namespace

ScenarioConfig config_from_json(const Json& j) {
  std::vector<std::string> errs;
  if (!j.is_object()) throw ConfigError("config root: expected a JSON object");
  if (!j.contains("scenario") || !j["scenario"].is_string()) {
    throw ConfigError("config root: a string 'scenario' field is required");
  }
  ScenarioConfig c = default_config(j["scenario"].get<std::string>());
  {
    Fields f(j, "config", errs);
    f.sub("scenario");
    f.get("seed", c.seed);
    f.get("record_trace", c.record_trace);
    if (const Json* s = f.sub("tree")) parse_tree(*s, c, errs);
    if (const Json* s = f.sub("dht")) parse_dht(*s, c, errs);
    if (const Json* s = f.sub("churn")) parse_churn(*s, c, errs);
    if (const Json* s = f.sub("workload")) parse_workload(*s, c, errs);
    if (const Json* s = f.sub("bridge")) parse_bridge(*s, c, errs);
    if (const Json* s = f.sub("search_path")) parse_search_path(*s, c, errs);
    if (const Json* s = f.sub("budgets")) parse_budgets(*s, c, errs);
  }
  check_bounds(c, errs);
  if (!errs.empty()) {
    std::string msg = "invalid scenario config (" + std::to_string(errs.size()) + " violation" +
                      (errs.size() == 1 ? "" : "s") + "):";
    for (const std::string& e : errs) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return c;
}

namespace {

Json to_json(const LinkConfig& link) {
  Json j{{"kind", link.kind}, {"base_ms", link.base_ms}, {"loss_rate", link.loss_rate}};
  if (link.kind == "uniform") {
    j["lo_ms"] = link.lo_ms;
    j["hi_ms"] = link.hi_ms;
  }
  if (link.kind == "lognormal") {
    j["median_ms"] = link.median_ms;
    j["sigma"] = link.sigma;
  }
  return j;
}

}  // namespace

Json to_json(const ScenarioConfig& c) {
  Json budgets = Json::array();
  for (const Budget& b : c.budgets) {
    budgets.push_back({{"name", b.name},
                       {"metric", b.metric},
                       {"stat", to_string(b.stat)},
                       {"cmp", to_string(b.cmp)},
                       {"threshold", b.threshold}});
  }
  Json path = Json::array();
  for (const SearchPathEntry& e : c.search_path) {
    path.push_back({{"label", e.label}, {"kind", e.kind}});
  }
  return Json{
      {"scenario", c.scenario},
      {"seed", c.seed},
      {"record_trace", c.record_trace},
      {"tree",
       {{"depth", c.tree.depth},
        {"fanout", c.tree.fanout},
        {"push_enabled", c.tree.push_enabled},
        {"ttl_ms", c.tree.ttl_ms},
        {"processing_ms", c.tree.processing_ms},
        {"link", to_json(c.tree.link)}}},
      {"dht",
       {{"nodes", c.dht.nodes},
        {"k", c.dht.k},
        {"alpha", c.dht.alpha},
        {"query_replicas", c.dht.query_replicas},
        {"rpc_timeout_ms", c.dht.rpc_timeout_ms},
        {"gossip_fanout", c.dht.gossip_fanout},
        {"gossip_period_ms", c.dht.gossip_period_ms},
        {"link", to_json(c.dht.link)}}},
      {"churn", {{"join_per_s", c.churn.join_per_s}, {"leave_per_s", c.churn.leave_per_s}}},
      {"workload",
       {{"mode", c.workload.mode},
        {"ttl_values_ms", c.workload.ttl_values_ms},
        {"queries", c.workload.queries},
        {"providers", c.workload.providers},
        {"min_trust", c.workload.min_trust},
        {"duration_ms", c.workload.duration_ms},
        {"revoke_at_ms", c.workload.revoke_at_ms},
        {"staple_valid_for_ms", c.workload.staple_valid_for_ms},
        {"staple_refresh_ms", c.workload.staple_refresh_ms},
        {"verifiers", c.workload.verifiers},
        {"verifier_check_interval_ms", c.workload.verifier_check_interval_ms}}},
      {"bridge",
       {{"cache_ttl_ms", c.bridge.cache_ttl_ms},
        {"max_providers", c.bridge.max_providers},
        {"link", to_json(c.bridge.link)}}},
      {"search_path", std::move(path)},
      {"budgets", std::move(budgets)},
  };
}

}  // namespace agentnet
