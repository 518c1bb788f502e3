#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentnet/audit.hpp"
#include "agentnet/dht_fabric.hpp"
#include "agentnet/tree_fabric.hpp"

namespace agentnet {

/// A resolution request: either a direct agent-id fetch or a capability-first
/// discovery. text() is the canonical key used for audit events, bridge proof
/// caches and trace matching.
struct Query {
  enum class Kind { ById, ByCapability };
  Kind kind = Kind::ById;
  AgentId agent_id{};
  std::string capability_path;
  double min_trust = 0.0;

  static Query by_id(const AgentId& id);
  static Query by_capability(std::string canonical_path, double min_trust = 0.0);
  std::string text() const;
};

/// What a registry hands back: a record, or a ranked provider list.
struct RegistryAnswer {
  std::optional<AgentFacts> record;
  std::vector<CapabilityHit> providers;
  bool found() const { return record.has_value() || !providers.empty(); }
};

/// Signature by a bridge over (query, digest of canonical answer, timestamp).
struct ResolutionProof {
  std::string query;
  Digest32 result_digest{};
  int64_t timestamp_ms = 0;
  Signature signature{};

  Bytes signing_body() const;
};

bool verify_resolution_proof(const ResolutionProof& proof, const PublicKey& bridge_key);

/// Digest of the canonical JSON encoding of an answer (what proofs sign).
Digest32 answer_digest(const RegistryAnswer& answer);

/// Enterprise-local registry slice: records plus a capability index, living
/// on its own simulated node.
class PrivateShard {
 public:
  explicit PrivateShard(sim::SimEngine& sim) : sim_node_(sim.alloc_node()) {}

  void put(const AgentFacts& record);
  void revoke(const Tombstone& tomb);
  void put_capability(const CapabilityToken& token);

  RegistryAnswer answer(const Query& q, int64_t now_ms) const;
  uint32_t sim_node() const { return sim_node_; }
  const std::map<AgentId, CrdtRecord>& store() const { return store_; }

 private:
  uint32_t sim_node_;
  std::map<AgentId, CrdtRecord> store_;
  std::map<std::string, std::map<AgentId, CapabilityToken>> caps_;
};

/// Signing, caching intermediary between a private label and another tier.
/// Warm hits cost exactly one bridge-link sample; entries age out after
/// cache_ttl_ms and every served answer carries a verifiable proof.
struct BridgeParams {
  std::string from_label;
  std::string to_label;
  int64_t cache_ttl_ms = 1'000;
  sim::LinkModel link = sim::LinkModel::fixed(5.0);
  /// Capability answers crossing the bridge carry at most this many providers.
  size_t max_providers = 16;
};

class BridgeGateway {
 public:
  BridgeGateway(sim::SimEngine& sim, BridgeParams params);

  const BridgeParams& params() const { return params_; }
  uint32_t sim_node() const { return sim_node_; }
  const PublicKey& public_key() const { return keys_.public_key; }

  /// Fresh cached answer for the query key, if any.
  const std::pair<RegistryAnswer, ResolutionProof>* cached(const std::string& key,
                                                           int64_t now_ms) const;
  /// Cache an answer (trimmed to max_providers) and sign its proof.
  ResolutionProof admit(const std::string& key, RegistryAnswer& answer, int64_t now_ms);

  size_t cache_size() const { return cache_.size(); }

 private:
  struct CacheEntry {
    std::pair<RegistryAnswer, ResolutionProof> payload;
    int64_t cached_at_ms = 0;
  };

  BridgeParams params_;
  uint32_t sim_node_;
  KeyPair keys_;
  std::map<std::string, CacheEntry> cache_;
};

/// One rung of a SearchPath. Exactly one backing registry is set per kind.
struct RegistryHandle {
  std::string label;
  enum class Kind { PrivateShard, UpgradeFabric, SwitchFabric } kind = Kind::PrivateShard;

  PrivateShard* shard = nullptr;
  TreeFabric* tree = nullptr;
  size_t tree_entry = 0;
  DhtFabric* dht = nullptr;
  size_t dht_origin = 0;

  sim::LinkModel access_link = sim::LinkModel::fixed(1.0);

  bool is_private() const { return label.rfind("private:", 0) == 0; }
  uint32_t entry_sim_node() const;
};

struct ResolveResult {
  enum class Status { Found, NotFound, PolicyDenied };
  Status status = Status::NotFound;
  RegistryAnswer answer;
  int64_t latency_ms = 0;
  int position = -1;  // search-path index that answered
  size_t audit_events = 0;
  std::optional<ResolutionProof> proof;  // set when a bridge served the answer
  bool found() const { return status == Status::Found; }
};

/// Walks an ordered search path (private shards first, public fabrics last),
/// enforces the caller's policy, routes tier crossings through bridges when
/// one is configured, and appends a signed audit event on every transition
/// out of a private-labeled registry.
class ResolutionEngine {
 public:
  ResolutionEngine(sim::SimEngine& sim, std::vector<RegistryHandle> path);

  BridgeGateway& add_bridge(BridgeParams params);
  const std::vector<RegistryHandle>& path() const { return path_; }
  const AuditChain& chain() const { return chain_; }
  uint32_t client_node() const { return client_node_; }

  void resolve(const AgentId& actor, const Query& q, const PolicyConstraints& policy,
               std::function<void(const ResolveResult&)> done);

  /// Blocking convenience for tests: drains the engine. Throws NotFound /
  /// PolicyDenied on the corresponding outcomes.
  ResolveResult resolve_now(const AgentId& actor, const Query& q,
                            const PolicyConstraints& policy);

 private:
  struct Ctx {
    AgentId actor{};
    Query query;
    PolicyConstraints policy;
    int64_t t0 = 0;
    size_t audit_events = 0;
    std::optional<std::string> prev_label;  // last registry actually queried
    std::function<void(const ResolveResult&)> done;
  };

  void step(std::shared_ptr<Ctx> c, size_t pos);
  void query_registry(std::shared_ptr<Ctx> c, size_t pos);
  void answer_from(std::shared_ptr<Ctx> c, size_t pos, const RegistryHandle& h,
                   std::function<void(RegistryAnswer)> done);
  void finish(std::shared_ptr<Ctx> c, size_t pos, RegistryAnswer answer,
              std::optional<ResolutionProof> proof);

  sim::SimEngine& sim_;
  std::vector<RegistryHandle> path_;
  std::map<std::pair<std::string, std::string>, std::unique_ptr<BridgeGateway>> bridges_;
  KeyPair resolver_keys_;
  AuditChain chain_;
  uint32_t client_node_;
};

/// One-to-one reconciliation of boundary-crossing messages (trace entries
/// whose kind starts with "xb|") against the audit chain.
struct AuditCompleteness {
  std::vector<std::string> unmatched_messages;  // crossings with no audit event
  std::vector<std::string> unmatched_events;    // audit events with no crossing
  bool ok() const { return unmatched_messages.empty() && unmatched_events.empty(); }
};

AuditCompleteness audit_completeness(const AuditChain& chain,
                                     const std::vector<sim::TraceEntry>& trace);

/// Labels of the registries a given query actually contacted, in trace order.
std::vector<std::string> contacted_labels(const std::vector<sim::TraceEntry>& trace,
                                          const std::string& query_text);

}  // namespace agentnet
