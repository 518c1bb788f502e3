#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "agentnet/attestation.hpp"
#include "agentnet/crdt.hpp"
#include "agentnet/sim.hpp"

namespace agentnet {

/// XOR metric over the 256-bit id space, compared as a big-endian integer.
Digest32 xor_distance(const AgentId& a, const AgentId& b);
bool distance_less(const Digest32& a, const Digest32& b);

/// Number of shared leading bits between two distinct ids = the routing
/// bucket the other id falls into (0..255).
int bucket_index(const AgentId& a, const AgentId& b);

/// AgentId-space key a capability path is indexed under.
AgentId capability_key(const std::string& canonical_path);

struct GossipParams {
  uint32_t fanout = 3;
  int64_t period_ms = 10;  // 0 disables the anti-entropy channel
};

struct DhtParams {
  uint32_t k = 20;
  uint32_t alpha = 3;
  uint32_t query_replicas = 3;  // nodes asked per GET / capability query
  int64_t rpc_timeout_ms = 100;
  sim::LinkModel link = sim::LinkModel::fixed(5.0);
  GossipParams gossip;
};

struct Contact {
  AgentId id{};
  uint32_t node = 0;  // fabric node index

  friend bool operator==(const Contact&, const Contact&) = default;
};

struct StoredEntry {
  CrdtRecord record;
  std::optional<RevocationStaple> staple;
  PublicKey owner_key{};  // from the first validated record; all zero = unknown
  bool owner_known = false;
};

struct LookupResult {
  std::vector<Contact> closest;  // nearest-first, at most k
  uint32_t hop_count = 0;        // sequential query rounds
  int64_t latency_ms = 0;
  bool complete = false;  // false when the origin died mid-lookup
};

struct StoreReceipt {
  size_t stored_on = 0;
  uint32_t hop_count = 0;
  int64_t latency_ms = 0;
};

struct GetResult {
  bool found = false;
  std::optional<CrdtRecord> record;
  int64_t latency_ms = 0;
};

struct CapabilityHit {
  AgentId agent_id{};
  double trust_score = 0.0;
  CapabilityToken token;
};

struct CapabilityQueryResult {
  std::vector<CapabilityHit> hits;  // trust descending, id ascending on ties
  int64_t latency_ms = 0;
};

/// Kademlia-style DHT over the AgentId space with a replicated CRDT record
/// store, a capability index placed at hash-derived keys, and a push-pull
/// gossip channel that reconciles records and revocation staples.
class DhtFabric : public sim::ChurnTarget {
 public:
  DhtFabric(sim::SimEngine& sim, DhtParams params);

  /// Allocate a node with a seed-derived identity. No join traffic.
  size_t spawn_node();
  /// Kademlia join: learn the bootstrap contact, then run a self-lookup.
  void join(size_t node, size_t bootstrap, std::function<void()> done = {});
  /// Spawn n nodes and join them one after another, draining the engine.
  void build_network(size_t n);

  size_t node_count() const { return nodes_.size(); }
  size_t live_count() const;
  bool alive(size_t node) const { return nodes_[node].alive; }
  const AgentId& id_of(size_t node) const { return nodes_[node].id; }
  uint32_t sim_node(size_t node) const { return nodes_[node].sim_node; }
  const DhtParams& params() const { return params_; }
  sim::SimEngine& engine() { return sim_; }
  std::vector<size_t> live_nodes() const;
  size_t bucket_contacts(size_t node) const;  // total routing table entries
  bool knows(size_t node, const AgentId& id) const;

  /// Iterative lookup with concurrency alpha, synchronized in rounds; stops
  /// once the k-closest candidate set survives a round unchanged and every
  /// member has answered a query, so results never carry hearsay contacts.
  /// Throws EmptyNetwork when the fabric holds no live node or origin is dead.
  void lookup(size_t origin, const AgentId& target,
              std::function<void(const LookupResult&)> done);

  /// Place a record (validated when it carries AgentFacts) on the k closest
  /// nodes. Throws RecordInvalid / EmptyNetwork.
  void store(size_t origin, const CrdtRecord& record,
             const std::optional<RevocationStaple>& staple,
             std::function<void(const StoreReceipt&)> done);

  /// Fetch an agent's record from the closest replicas and merge the replies.
  void get(size_t origin, const AgentId& agent, std::function<void(const GetResult&)> done);

  /// Register a provider under its capability path: the token, plus a copy of
  /// the provider record, lands on the k nodes closest to capability_key.
  void store_capability(size_t origin, const CapabilityToken& token, const CrdtRecord& provider,
                        std::function<void(const StoreReceipt&)> done);

  /// Ranked provider discovery; only entries whose token verifies now, whose
  /// record is present and untombstoned, and whose trust clears min_trust.
  void capability_query(size_t origin, const std::string& canonical_path, double min_trust,
                        std::function<void(const CapabilityQueryResult&)> done);

  /// Apply a write at one node's replica directly (the owner's own copy).
  bool apply_local(size_t node, const CrdtRecord& record,
                   const std::optional<RevocationStaple>& staple);

  /// Anti-entropy ticks for every node until the given simulated time.
  void start_gossip(int64_t until_ms);
  int64_t gossip_until() const { return gossip_until_; }

  /// First-seen instrumentation for one (agent, stamp) write.
  void watch_stamp(const AgentId& agent, const HlcStamp& stamp);
  const std::map<size_t, int64_t>& watch_first_seen() const { return watch_first_seen_; }

  /// Global-knowledge oracle: the k live node ids nearest to target.
  std::vector<Contact> brute_force_closest(const AgentId& target, uint32_t k) const;

  const std::map<AgentId, StoredEntry>& store_of(size_t node) const {
    return nodes_[node].store;
  }
  const std::map<std::string, std::map<AgentId, CapabilityToken>>& cap_index_of(
      size_t node) const {
    return nodes_[node].cap_index;
  }

  void protect(size_t node) { protected_.insert(node); }

  // sim::ChurnTarget: joins bootstrap off a random live node; leaves are
  // crash-stop (no goodbye traffic).
  void churn_join(int64_t t) override;
  void churn_leave(int64_t t) override;
  size_t churn_joins() const { return churn_joins_; }
  size_t churn_leaves() const { return churn_leaves_; }

 private:
  struct NodeState {
    AgentId id{};
    uint32_t sim_node = 0;
    bool alive = true;
    std::array<std::vector<Contact>, 256> buckets;  // most recently seen last
    std::map<AgentId, StoredEntry> store;
    std::map<std::string, std::map<AgentId, CapabilityToken>> cap_index;
    uint64_t gossip_ticks = 0;
  };

  struct Cand {
    Contact contact;
    Digest32 distance{};
    bool queried = false;
    bool responded = false;
    bool failed = false;
  };

  struct LookupOp {
    uint64_t id = 0;
    size_t origin = 0;
    AgentId target{};
    int64_t t0 = 0;
    uint32_t rounds = 0;
    uint32_t outstanding = 0;
    bool finished = false;
    std::vector<Cand> cands;  // sorted nearest-first
    std::vector<AgentId> prev_best;
    std::function<void(const LookupResult&)> done;
  };

  struct DigestEntry {
    AgentId agent{};
    HlcStamp stamp;
    int64_t staple_issued = -1;
  };

  struct FullEntry {
    CrdtRecord record;
    std::optional<RevocationStaple> staple;
  };

  void observe_contact(size_t node, const Contact& c);
  void drop_contact(size_t node, const AgentId& id);
  std::vector<Contact> closest_from_table(size_t node, const AgentId& target, uint32_t k) const;

  void lookup_insert(LookupOp& op, const Contact& c);
  std::vector<AgentId> best_ids(const LookupOp& op) const;
  void lookup_advance(uint64_t op_id);
  void lookup_finish(uint64_t op_id, bool complete);
  void send_find(uint64_t op_id, const Contact& target);

  bool store_merge(size_t node, const CrdtRecord& incoming,
                   const std::optional<RevocationStaple>& staple);
  void merge_staple(size_t node, StoredEntry& entry, const RevocationStaple& staple);

  std::vector<FullEntry> collect_full(size_t node, const std::vector<AgentId>& agents) const;
  void schedule_gossip_tick(size_t node, int64_t delay);
  void gossip_tick(size_t node);
  void handle_digest(size_t from, size_t at, const std::vector<DigestEntry>& digest);

  void ensure_usable(size_t origin) const;
  AgentId derive_node_id(uint64_t salt);

  sim::SimEngine& sim_;
  DhtParams params_;
  std::vector<NodeState> nodes_;
  std::set<size_t> protected_;
  uint64_t next_op_ = 1;
  std::map<uint64_t, LookupOp> lookups_;
  std::set<uint64_t> open_rpcs_;
  uint64_t next_rpc_ = 1;
  int64_t gossip_until_ = -1;
  std::optional<std::pair<AgentId, HlcStamp>> watch_;
  std::map<size_t, int64_t> watch_first_seen_;
  size_t churn_joins_ = 0;
  size_t churn_leaves_ = 0;
  uint64_t spawn_counter_ = 0;
};

}  // namespace agentnet
