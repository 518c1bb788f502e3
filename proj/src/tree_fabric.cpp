#include "agentnet/tree_fabric.hpp"

#include <algorithm>
#include <memory>

#include "agentnet/errors.hpp"

namespace agentnet {

namespace {
constexpr uint64_t kQuerySize = 64;
constexpr uint64_t kRecordSize = 512;
}  // namespace

TreeFabric::TreeFabric(sim::SimEngine& sim, TreeParams params)
    : sim_(sim), params_(std::move(params)) {
  if (params_.fanout < 1) throw ConfigError("tree fanout must be >= 1");
  if (params_.processing_ms < 0) throw ConfigError("tree processing_ms must be >= 0");

  Node root;
  root.sim_node = sim_.alloc_node();
  nodes_.push_back(root);
  size_t level_begin = 0, level_end = 1;
  for (uint32_t level = 1; level <= params_.depth; ++level) {
    for (size_t p = level_begin; p < level_end; ++p) {
      for (uint32_t c = 0; c < params_.fanout; ++c) {
        Node n;
        n.parent = p;
        n.level = level;
        n.sim_node = sim_.alloc_node();
        nodes_[p].children.push_back(nodes_.size());
        nodes_.push_back(n);
      }
    }
    level_begin = level_end;
    level_end = nodes_.size();
  }
  for (size_t i = level_begin; i < level_end; ++i) leaves_.push_back(i);
}

int64_t TreeFabric::ttl_of(const AgentFacts& record) const {
  return params_.ttl_override_ms.value_or(static_cast<int64_t>(record.ttl_ms));
}

const TreeFabric::CacheEntry* TreeFabric::fresh_entry(size_t node, const AgentId& agent) const {
  auto it = nodes_[node].cache.find(agent);
  if (it == nodes_[node].cache.end()) return nullptr;
  if (sim_.now() >= it->second.expires_at_ms) return nullptr;
  return &it->second;
}

void TreeFabric::fill_cache(size_t node, const AgentFacts& record, int64_t expires_at_ms) {
  auto& cache = nodes_[node].cache;
  auto it = cache.find(record.agent_id);
  if (it == cache.end()) {
    cache.emplace(record.agent_id, CacheEntry{record, sim_.now(), expires_at_ms});
    return;
  }
  // A cache never replaces its record with an older version; an equal version
  // only ever extends the freshness window.
  if (it->second.record.version < record.version) {
    it->second = CacheEntry{record, sim_.now(), expires_at_ms};
  } else if (it->second.record.version == record.version) {
    it->second.expires_at_ms = std::max(it->second.expires_at_ms, expires_at_ms);
  }
}

void TreeFabric::record_serve(size_t node, const AgentId& agent, const HlcStamp& version,
                              uint32_t depth_hit) {
  serves_.push_back(ServeEvent{node, sim_.now(), agent, version, depth_hit});
}

void TreeFabric::record_push_arrival(const AgentId& agent, const HlcStamp& version, size_t node) {
  auto& seen = push_arrivals_[{agent, version}];
  seen.emplace(node, sim_.now());  // keeps the first arrival
}

TreeFabric::PublishReceipt TreeFabric::publish(const AgentFacts& record) {
  auto report = validate_record(record);
  if (!report.ok()) throw RecordInvalid("publish rejected: " + report.describe());
  auto it = root_store_.find(record.agent_id);
  if (it != root_store_.end() && !(it->second.version < record.version)) {
    throw StaleVersion("published version does not exceed the stored one");
  }
  root_store_[record.agent_id] = record;
  record_push_arrival(record.agent_id, record.version, 0);

  PublishReceipt receipt;
  receipt.agent_id = record.agent_id;
  receipt.version = record.version;
  receipt.published_at_ms = sim_.now();
  if (params_.push_enabled) {
    int64_t expires = sim_.now() + ttl_of(record);
    auto routes = nodes_[0].push_routes.find(record.agent_id);
    if (routes != nodes_[0].push_routes.end()) {
      receipt.push_targets = routes->second.size();
      forward_push(0, record, expires);
    }
  }
  return receipt;
}

void TreeFabric::forward_push(size_t node, const AgentFacts& record, int64_t expires_at_ms) {
  auto routes = nodes_[node].push_routes.find(record.agent_id);
  if (routes == nodes_[node].push_routes.end()) return;
  for (size_t child : routes->second) {
    sim_.send(nodes_[node].sim_node, nodes_[child].sim_node, params_.link, "tree.push",
              kRecordSize, [this, child, record, expires_at_ms] {
                sim_.schedule(params_.processing_ms, [this, child, record, expires_at_ms] {
                  fill_cache(child, record, expires_at_ms);
                  record_push_arrival(record.agent_id, record.version, child);
                  forward_push(child, record, expires_at_ms);
                });
              });
  }
}

uint64_t TreeFabric::subscribe_push(size_t leaf, const AgentId& agent) {
  if (!params_.push_enabled) throw PushUnavailable("push channel disabled for this fabric");
  nodes_[leaf].subscriptions.insert(agent);
  size_t cur = leaf;
  while (nodes_[cur].level != 0) {
    size_t parent = nodes_[cur].parent;
    nodes_[parent].push_routes[agent].insert(cur);
    cur = parent;
  }
  return next_subscription_++;
}

std::map<size_t, int64_t> TreeFabric::push_convergence(const AgentFacts& record) {
  publish(record);
  sim_.run_to_quiescence();
  auto* seen = push_arrivals(record.agent_id, record.version);
  return seen ? *seen : std::map<size_t, int64_t>{};
}

const std::map<size_t, int64_t>* TreeFabric::push_arrivals(const AgentId& agent,
                                                           const HlcStamp& version) const {
  auto it = push_arrivals_.find({agent, version});
  if (it == push_arrivals_.end()) return nullptr;
  return &it->second;
}

const std::optional<TreeFabric::CacheEntry> TreeFabric::cache_entry(size_t node,
                                                                    const AgentId& agent) const {
  auto it = nodes_[node].cache.find(agent);
  if (it == nodes_[node].cache.end()) return std::nullopt;
  return it->second;
}

void TreeFabric::resolve_ttl(size_t entry, const AgentId& agent, ResolveCallback done) {
  if (entry >= nodes_.size()) throw NotFound("entry node outside fabric");
  auto q = std::make_shared<QueryCtx>();
  q->agent = agent;
  q->t0 = sim_.now();
  q->path.push_back(entry);
  q->done = std::move(done);
  step_up(q);
}

void TreeFabric::step_up(std::shared_ptr<QueryCtx> q) {
  size_t cur = q->path.back();
  if (const CacheEntry* hit = fresh_entry(cur, q->agent)) {
    record_serve(cur, q->agent, hit->record.version,
                 static_cast<uint32_t>(q->path.size() - 1));
    answer_found(q, Answer{hit->record, hit->expires_at_ms});
    return;
  }
  if (nodes_[cur].level == 0) {
    auto it = root_store_.find(q->agent);
    if (it == root_store_.end()) {
      answer_found(q, std::nullopt);
      return;
    }
    record_serve(cur, q->agent, it->second.version,
                 static_cast<uint32_t>(q->path.size() - 1));
    answer_found(q, Answer{it->second, sim_.now() + ttl_of(it->second)});
    return;
  }
  size_t parent = nodes_[cur].parent;
  sim_.send(nodes_[cur].sim_node, nodes_[parent].sim_node, params_.link, "tree.query", kQuerySize,
            [this, q, parent] {
              sim_.schedule(params_.processing_ms, [this, q, parent] {
                q->path.push_back(parent);
                step_up(q);
              });
            });
}

void TreeFabric::answer_found(std::shared_ptr<QueryCtx> q, std::optional<Answer> answer) {
  if (q->path.size() == 1) {
    deliver(q, std::move(answer));
    return;
  }
  step_down(q, q->path.size() - 1, std::move(answer));
}

void TreeFabric::step_down(std::shared_ptr<QueryCtx> q, size_t path_pos,
                           std::optional<Answer> answer) {
  if (path_pos == 0) {
    deliver(q, std::move(answer));
    return;
  }
  size_t from = q->path[path_pos];
  size_t to = q->path[path_pos - 1];
  uint64_t size = kQuerySize + (answer ? kRecordSize : 0);
  sim_.send(nodes_[from].sim_node, nodes_[to].sim_node, params_.link, "tree.response", size,
            [this, q, path_pos, to, answer = std::move(answer)] {
              sim_.schedule(params_.processing_ms, [this, q, path_pos, to, answer] {
                if (answer) fill_cache(to, answer->record, answer->expires_at_ms);
                step_down(q, path_pos - 1, answer);
              });
            });
}

void TreeFabric::deliver(std::shared_ptr<QueryCtx> q, std::optional<Answer> answer) {
  ResolveOutcome out;
  out.latency_ms = sim_.now() - q->t0;
  out.depth_hit = static_cast<uint32_t>(q->path.size() - 1);
  if (answer) {
    out.found = true;
    out.record = std::move(answer->record);
  }
  q->done(out);
}

TreeFabric::ResolveOutcome TreeFabric::resolve_now(size_t entry, const AgentId& agent) {
  std::optional<ResolveOutcome> result;
  resolve_ttl(entry, agent, [&result](const ResolveOutcome& out) { result = out; });
  sim_.run_to_quiescence();
  if (!result.has_value() || !result->found) {
    throw NotFound("agent " + agent.hex() + " not resolvable");
  }
  return *result;
}

}  // namespace agentnet
