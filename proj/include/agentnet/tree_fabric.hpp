#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "agentnet/agent_facts.hpp"
#include "agentnet/sim.hpp"

namespace agentnet {

/// Hierarchical caching-resolver fabric: a complete tree of caching resolvers
/// with the authoritative store at the root, TTL expiry at every cache, and an
/// optional push channel that invalidates-and-refreshes subscribed caches on
/// publish. Leaves are the query entry points.
struct TreeParams {
  uint32_t depth = 3;    // edges from a leaf to the root; 0 = root-only
  uint32_t fanout = 5;
  bool push_enabled = true;
  std::optional<int64_t> ttl_override_ms;  // compresses record TTLs for experiments
  int64_t processing_ms = 1;               // per-message resolver cost
  sim::LinkModel link = sim::LinkModel::fixed(10.0);
};

class TreeFabric {
 public:
  /// Cached entries inherit the authoritative expiry instant from the answer
  /// they were filled from (TTL counts down across hops), so a record version
  /// is never served more than ttl past the moment the root last vouched for
  /// it, no matter how many cache layers relayed it.
  struct CacheEntry {
    AgentFacts record;
    int64_t inserted_ms = 0;
    int64_t expires_at_ms = 0;  // always <= inserted_ms + ttl
  };

  struct ResolveOutcome {
    bool found = false;
    std::optional<AgentFacts> record;
    int64_t latency_ms = 0;
    uint32_t depth_hit = 0;  // hops from the entry leaf to the answering resolver
  };
  using ResolveCallback = std::function<void(const ResolveOutcome&)>;

  struct PublishReceipt {
    AgentId agent_id{};
    HlcStamp version;
    int64_t published_at_ms = 0;
    size_t push_targets = 0;  // children the root pushed toward
  };

  /// One record handed out by a resolver (the answering node, at answer time).
  struct ServeEvent {
    size_t node = 0;
    int64_t t_ms = 0;
    AgentId agent_id{};
    HlcStamp version;
    uint32_t depth_hit = 0;
  };

  TreeFabric(sim::SimEngine& sim, TreeParams params);

  size_t node_count() const { return nodes_.size(); }
  const std::vector<size_t>& leaves() const { return leaves_; }
  uint32_t level_of(size_t node) const { return nodes_[node].level; }
  size_t parent_of(size_t node) const { return nodes_[node].parent; }
  const std::vector<size_t>& children_of(size_t node) const { return nodes_[node].children; }
  uint32_t sim_node(size_t node) const { return nodes_[node].sim_node; }
  const TreeParams& params() const { return params_; }
  sim::SimEngine& engine() { return sim_; }

  /// Update the authoritative store. The record must validate and carry a
  /// version strictly greater than the one already published. With push
  /// enabled, invalidate-and-refresh messages fan out along subscription
  /// routes. Throws RecordInvalid / StaleVersion.
  PublishReceipt publish(const AgentFacts& record);

  /// Walk from `entry` toward the root until a fresh cache entry (or the
  /// authoritative store) answers; fill caches on the way back down. The
  /// callback fires at the entry node once the answer (or a miss) returns.
  void resolve_ttl(size_t entry, const AgentId& agent, ResolveCallback done);

  /// Blocking convenience for tests: drains the engine. Throws NotFound.
  ResolveOutcome resolve_now(size_t entry, const AgentId& agent);

  /// Register interest: subsequent publishes for `agent` are pushed to this
  /// leaf (and every resolver on its root path). Throws PushUnavailable.
  uint64_t subscribe_push(size_t leaf, const AgentId& agent);

  /// Publish + drain, returning for every reached resolver the time it first
  /// held the new version (root at publish time). Convenience for tests.
  std::map<size_t, int64_t> push_convergence(const AgentFacts& record);

  /// Times each resolver first held (agent, version), keyed by node index.
  const std::map<size_t, int64_t>* push_arrivals(const AgentId& agent,
                                                 const HlcStamp& version) const;

  const std::optional<CacheEntry> cache_entry(size_t node, const AgentId& agent) const;
  const std::map<AgentId, AgentFacts>& root_store() const { return root_store_; }

  const std::vector<ServeEvent>& serves() const { return serves_; }
  void clear_serves() { serves_.clear(); }

 private:
  struct Node {
    size_t parent = 0;
    std::vector<size_t> children;
    uint32_t level = 0;
    uint32_t sim_node = 0;
    std::map<AgentId, CacheEntry> cache;
    std::map<AgentId, std::set<size_t>> push_routes;  // child node index fan-out
    std::set<AgentId> subscriptions;                  // leaf-level interest
  };

  struct Answer {
    AgentFacts record;
    int64_t expires_at_ms = 0;
  };

  struct QueryCtx {
    AgentId agent{};
    int64_t t0 = 0;
    std::vector<size_t> path;  // nodes visited, entry first
    ResolveCallback done;
  };

  int64_t ttl_of(const AgentFacts& record) const;
  const CacheEntry* fresh_entry(size_t node, const AgentId& agent) const;
  void fill_cache(size_t node, const AgentFacts& record, int64_t expires_at_ms);
  void record_serve(size_t node, const AgentId& agent, const HlcStamp& version,
                    uint32_t depth_hit);
  void record_push_arrival(const AgentId& agent, const HlcStamp& version, size_t node);

  void step_up(std::shared_ptr<QueryCtx> q);
  void answer_found(std::shared_ptr<QueryCtx> q, std::optional<Answer> answer);
  void step_down(std::shared_ptr<QueryCtx> q, size_t path_pos, std::optional<Answer> answer);
  void deliver(std::shared_ptr<QueryCtx> q, std::optional<Answer> answer);
  void forward_push(size_t node, const AgentFacts& record, int64_t expires_at_ms);

  sim::SimEngine& sim_;
  TreeParams params_;
  std::vector<Node> nodes_;
  std::vector<size_t> leaves_;
  std::map<AgentId, AgentFacts> root_store_;
  std::map<std::pair<AgentId, HlcStamp>, std::map<size_t, int64_t>> push_arrivals_;
  std::vector<ServeEvent> serves_;
  uint64_t next_subscription_ = 1;
};

}  // namespace agentnet
