#include "agentnet/dht_fabric.hpp"

#include <algorithm>
#include <bit>
#include <memory>

#include "agentnet/errors.hpp"

namespace agentnet {

namespace {
constexpr uint64_t kFindSize = 96;
constexpr uint64_t kContactSize = 40;
constexpr uint64_t kRecordSize = 700;
constexpr uint64_t kDigestEntrySize = 48;
}  // namespace

Digest32 xor_distance(const AgentId& a, const AgentId& b) {
  Digest32 d{};
  for (size_t i = 0; i < d.size(); ++i) d[i] = a.bytes[i] ^ b.bytes[i];
  return d;
}

bool distance_less(const Digest32& a, const Digest32& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

int bucket_index(const AgentId& a, const AgentId& b) {
  for (size_t i = 0; i < a.bytes.size(); ++i) {
    uint8_t x = a.bytes[i] ^ b.bytes[i];
    if (x != 0) return static_cast<int>(i * 8) + std::countl_zero(x);
  }
  return 255;  // identical ids never reach a bucket; callers filter them out
}

AgentId capability_key(const std::string& canonical_path) {
  Bytes raw(canonical_path.begin(), canonical_path.end());
  return AgentId{sha256(raw)};
}

DhtFabric::DhtFabric(sim::SimEngine& sim, DhtParams params) : sim_(sim), params_(params) {
  if (params_.k < 1) throw ConfigError("dht k must be >= 1");
  if (params_.alpha < 1) throw ConfigError("dht alpha must be >= 1");
  if (params_.gossip.fanout < 1) throw ConfigError("gossip fanout must be >= 1");
  if (params_.gossip.period_ms < 0) throw ConfigError("gossip period_ms must be >= 0");
}

AgentId DhtFabric::derive_node_id(uint64_t salt) {
  sim::Rng rng = sim_.stream("dht.node.id", salt);
  AgentId id{};
  for (size_t i = 0; i < id.bytes.size(); i += 8) {
    uint64_t w = rng.next_u64();
    for (size_t j = 0; j < 8; ++j) id.bytes[i + j] = static_cast<uint8_t>(w >> (8 * j));
  }
  return id;
}

size_t DhtFabric::spawn_node() {
  NodeState n;
  n.id = derive_node_id(spawn_counter_++);
  n.sim_node = sim_.alloc_node();
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

size_t DhtFabric::live_count() const {
  size_t n = 0;
  for (const auto& node : nodes_) n += node.alive ? 1 : 0;
  return n;
}

std::vector<size_t> DhtFabric::live_nodes() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].alive) out.push_back(i);
  }
  return out;
}

size_t DhtFabric::bucket_contacts(size_t node) const {
  size_t n = 0;
  for (const auto& b : nodes_[node].buckets) n += b.size();
  return n;
}

bool DhtFabric::knows(size_t node, const AgentId& id) const {
  if (nodes_[node].id == id) return false;
  const auto& bucket = nodes_[node].buckets[bucket_index(nodes_[node].id, id)];
  return std::any_of(bucket.begin(), bucket.end(),
                     [&](const Contact& c) { return c.id == id; });
}

void DhtFabric::observe_contact(size_t node, const Contact& c) {
  NodeState& me = nodes_[node];
  if (c.id == me.id) return;
  auto& bucket = me.buckets[bucket_index(me.id, c.id)];
  auto it = std::find_if(bucket.begin(), bucket.end(),
                         [&](const Contact& e) { return e.id == c.id; });
  if (it != bucket.end()) {
    Contact keep = *it;
    bucket.erase(it);
    bucket.push_back(keep);
    return;
  }
  if (bucket.size() < params_.k) bucket.push_back(c);
  // Full bucket: keep the long-lived contacts, drop the newcomer.
}

void DhtFabric::drop_contact(size_t node, const AgentId& id) {
  NodeState& me = nodes_[node];
  if (id == me.id) return;
  auto& bucket = me.buckets[bucket_index(me.id, id)];
  std::erase_if(bucket, [&](const Contact& e) { return e.id == id; });
}

std::vector<Contact> DhtFabric::closest_from_table(size_t node, const AgentId& target,
                                                   uint32_t k) const {
  std::vector<Contact> all;
  for (const auto& bucket : nodes_[node].buckets) {
    all.insert(all.end(), bucket.begin(), bucket.end());
  }
  std::sort(all.begin(), all.end(), [&](const Contact& a, const Contact& b) {
    return distance_less(xor_distance(a.id, target), xor_distance(b.id, target));
  });
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<Contact> DhtFabric::brute_force_closest(const AgentId& target, uint32_t k) const {
  std::vector<Contact> all;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].alive) all.push_back(Contact{nodes_[i].id, static_cast<uint32_t>(i)});
  }
  std::sort(all.begin(), all.end(), [&](const Contact& a, const Contact& b) {
    return distance_less(xor_distance(a.id, target), xor_distance(b.id, target));
  });
  if (all.size() > k) all.resize(k);
  return all;
}

void DhtFabric::ensure_usable(size_t origin) const {
  if (origin >= nodes_.size() || !nodes_[origin].alive) {
    throw EmptyNetwork("origin node is not a live fabric member");
  }
}

// ---------------------------------------------------------------------------
// Iterative lookup

void DhtFabric::lookup_insert(LookupOp& op, const Contact& c) {
  Digest32 dist = xor_distance(c.id, op.target);
  auto pos = std::lower_bound(op.cands.begin(), op.cands.end(), dist,
                              [](const Cand& a, const Digest32& d) {
                                return distance_less(a.distance, d);
                              });
  if (pos != op.cands.end() && pos->contact.id == c.id) return;
  Cand cand;
  cand.contact = c;
  cand.distance = dist;
  op.cands.insert(pos, cand);
}

std::vector<AgentId> DhtFabric::best_ids(const LookupOp& op) const {
  std::vector<AgentId> ids;
  for (const Cand& c : op.cands) {
    if (c.failed) continue;
    ids.push_back(c.contact.id);
    if (ids.size() == params_.k) break;
  }
  return ids;
}

void DhtFabric::lookup(size_t origin, const AgentId& target,
                       std::function<void(const LookupResult&)> done) {
  ensure_usable(origin);
  uint64_t id = next_op_++;
  LookupOp& op = lookups_[id];
  op.id = id;
  op.origin = origin;
  op.target = target;
  op.t0 = sim_.now();
  op.done = std::move(done);

  Cand self;
  self.contact = Contact{nodes_[origin].id, static_cast<uint32_t>(origin)};
  self.distance = xor_distance(self.contact.id, target);
  self.queried = self.responded = true;
  op.cands.push_back(std::move(self));
  for (const Contact& c : closest_from_table(origin, target, params_.k)) {
    lookup_insert(op, c);
  }
  lookup_advance(id);
}

void DhtFabric::lookup_advance(uint64_t op_id) {
  auto it = lookups_.find(op_id);
  if (it == lookups_.end()) return;
  LookupOp& op = it->second;
  if (op.finished) return;
  if (!nodes_[op.origin].alive) {
    lookup_finish(op_id, false);
    return;
  }
  // Converged only when the k-closest set survived a round unchanged AND
  // every member has answered a query; otherwise an unqueried tail entry
  // could be a dead contact copied out of someone's routing table.
  std::vector<AgentId> best = best_ids(op);
  bool all_heard = true;
  size_t rank = 0;
  for (const Cand& c : op.cands) {
    if (c.failed) continue;
    if (!c.responded) {
      all_heard = false;
      break;
    }
    if (++rank == params_.k) break;
  }
  if (!op.prev_best.empty() && best == op.prev_best && all_heard) {
    lookup_finish(op_id, true);
    return;
  }
  op.prev_best = best;

  std::vector<Contact> targets;
  for (const Cand& c : op.cands) {
    if (c.failed || c.queried) continue;
    targets.push_back(c.contact);
    if (targets.size() == params_.alpha) break;
  }
  if (targets.empty()) {
    lookup_finish(op_id, true);
    return;
  }
  op.rounds += 1;
  for (const Contact& t : targets) {
    for (Cand& c : op.cands) {
      if (c.contact.id == t.id) {
        c.queried = true;
        break;
      }
    }
    op.outstanding += 1;
    send_find(op_id, t);
  }
}

void DhtFabric::send_find(uint64_t op_id, const Contact& target) {
  LookupOp& op = lookups_.at(op_id);
  size_t origin = op.origin;
  AgentId key = op.target;
  uint64_t rpc = next_rpc_++;
  open_rpcs_.insert(rpc);

  uint32_t dst = target.node;
  AgentId dst_id = target.id;
  sim_.send(nodes_[origin].sim_node, nodes_[dst].sim_node, params_.link, "dht.find", kFindSize,
            [this, op_id, rpc, origin, dst, key] {
              if (!nodes_[dst].alive) return;  // crash-stop: the rpc times out
              observe_contact(dst, Contact{nodes_[origin].id, static_cast<uint32_t>(origin)});
              std::vector<Contact> found = closest_from_table(dst, key, params_.k);
              sim_.send(nodes_[dst].sim_node, nodes_[origin].sim_node, params_.link,
                        "dht.find_reply", kFindSize + kContactSize * found.size(),
                        [this, op_id, rpc, origin, dst, found] {
                          if (open_rpcs_.erase(rpc) == 0) return;  // already timed out
                          auto it = lookups_.find(op_id);
                          if (it == lookups_.end() || it->second.finished) return;
                          observe_contact(origin,
                                          Contact{nodes_[dst].id, static_cast<uint32_t>(dst)});
                          LookupOp& op = it->second;
                          for (Cand& c : op.cands) {
                            if (c.contact.node == dst) {
                              c.responded = true;
                              break;
                            }
                          }
                          for (const Contact& c : found) lookup_insert(op, c);
                          op.outstanding -= 1;
                          if (op.outstanding == 0) lookup_advance(op_id);
                        });
            });
  sim_.schedule(params_.rpc_timeout_ms, [this, op_id, rpc, origin, dst_id] {
    if (open_rpcs_.erase(rpc) == 0) return;  // answered in time
    drop_contact(origin, dst_id);
    auto it = lookups_.find(op_id);
    if (it == lookups_.end() || it->second.finished) return;
    LookupOp& op = it->second;
    for (Cand& c : op.cands) {
      if (c.contact.id == dst_id) {
        c.failed = true;
        break;
      }
    }
    op.outstanding -= 1;
    if (op.outstanding == 0) lookup_advance(op_id);
  });
}

void DhtFabric::lookup_finish(uint64_t op_id, bool complete) {
  auto it = lookups_.find(op_id);
  if (it == lookups_.end()) return;
  LookupOp op = std::move(it->second);
  it->second.finished = true;
  lookups_.erase(it);

  LookupResult result;
  result.complete = complete;
  result.hop_count = op.rounds;
  result.latency_ms = sim_.now() - op.t0;
  for (const Cand& c : op.cands) {
    if (!c.responded) continue;  // only nodes actually heard from
    result.closest.push_back(c.contact);
    if (result.closest.size() == params_.k) break;
  }
  if (op.done) op.done(result);
}

// ---------------------------------------------------------------------------
// Join / build

void DhtFabric::join(size_t node, size_t bootstrap, std::function<void()> done) {
  if (node == bootstrap) throw ConfigError("a node cannot bootstrap off itself");
  observe_contact(node, Contact{nodes_[bootstrap].id, static_cast<uint32_t>(bootstrap)});
  lookup(node, nodes_[node].id, [done = std::move(done)](const LookupResult&) {
    if (done) done();
  });
}

void DhtFabric::build_network(size_t n) {
  if (n == 0) return;
  size_t base = nodes_.size();
  for (size_t i = 0; i < n; ++i) spawn_node();
  if (n == 1) return;

  auto boot_rng = std::make_shared<sim::Rng>(sim_.stream("dht.build.boot"));
  auto step = std::make_shared<std::function<void(size_t)>>();
  *step = [this, base, n, boot_rng, step](size_t i) {
    if (i >= n) return;
    size_t bootstrap = base + boot_rng->below(i);
    join(base + i, bootstrap, [step, i] { (*step)(i + 1); });
  };
  (*step)(1);
  sim_.run_to_quiescence();
}

// ---------------------------------------------------------------------------
// Record store

bool DhtFabric::store_merge(size_t node, const CrdtRecord& incoming,
                            const std::optional<RevocationStaple>& staple) {
  auto& st = nodes_[node].store;
  const AgentId& agent = incoming.agent_id();
  bool changed = false;
  auto it = st.find(agent);
  if (it == st.end()) {
    StoredEntry e;
    if (const AgentFacts* rec = incoming.record()) {
      if (!validate_record(*rec).ok()) return false;
      e.owner_key = rec->public_key;
      e.owner_known = true;
    }
    e.record = incoming;
    it = st.emplace(agent, std::move(e)).first;
    changed = true;
  } else {
    StoredEntry& e = it->second;
    CrdtRecord merged = crdt_merge(e.record, incoming);
    if (!(merged == e.record)) {
      if (const AgentFacts* rec = incoming.record()) {
        if (!validate_record(*rec).ok()) return false;
        e.owner_key = rec->public_key;
        e.owner_known = true;
      } else if (e.owner_known) {
        const Tombstone& tomb = std::get<Tombstone>(incoming.value);
        if (!verify_tombstone(tomb, e.owner_key)) return false;
      }
      e.record = merged;
      changed = true;
    }
  }
  if (staple.has_value()) merge_staple(node, it->second, *staple);
  if (watch_.has_value() && agent == watch_->first &&
      it->second.record.stamp() == watch_->second) {
    watch_first_seen_.emplace(node, sim_.now());
  }
  return changed;
}

void DhtFabric::merge_staple(size_t /*node*/, StoredEntry& entry,
                             const RevocationStaple& staple) {
  if (entry.record.is_tombstone()) return;
  if (staple.agent_id != entry.record.agent_id()) return;
  if (entry.staple.has_value() && entry.staple->issued_ms >= staple.issued_ms) return;
  if (!entry.owner_known) return;
  if (verify_staple(staple, entry.owner_key, staple.issued_ms) == StapleStatus::SignatureInvalid)
    return;
  entry.staple = staple;
}

bool DhtFabric::apply_local(size_t node, const CrdtRecord& record,
                            const std::optional<RevocationStaple>& staple) {
  return store_merge(node, record, staple);
}

void DhtFabric::store(size_t origin, const CrdtRecord& record,
                      const std::optional<RevocationStaple>& staple,
                      std::function<void(const StoreReceipt&)> done) {
  ensure_usable(origin);
  if (const AgentFacts* rec = record.record()) {
    auto report = validate_record(*rec);
    if (!report.ok()) throw RecordInvalid("store rejected: " + report.describe());
  }
  lookup(origin, record.agent_id(),
         [this, origin, record, staple, done = std::move(done)](const LookupResult& found) {
           for (const Contact& c : found.closest) {
             if (c.node == origin) {
               store_merge(origin, record, staple);
               continue;
             }
             sim_.send(nodes_[origin].sim_node, nodes_[c.node].sim_node, params_.link,
                       "dht.store", kRecordSize, [this, node = c.node, record, staple] {
                         if (!nodes_[node].alive) return;
                         store_merge(node, record, staple);
                       });
           }
           if (done) {
             StoreReceipt receipt;
             receipt.stored_on = found.closest.size();
             receipt.hop_count = found.hop_count;
             receipt.latency_ms = found.latency_ms;
             done(receipt);
           }
         });
}

void DhtFabric::get(size_t origin, const AgentId& agent,
                    std::function<void(const GetResult&)> done) {
  ensure_usable(origin);
  int64_t t0 = sim_.now();
  lookup(origin, agent,
         [this, origin, agent, t0, done = std::move(done)](const LookupResult& found) {
           struct GetOp {
             size_t outstanding = 0;
             std::optional<CrdtRecord> best;
             std::optional<RevocationStaple> staple;
           };
           auto op = std::make_shared<GetOp>();
           auto absorb = [op](const CrdtRecord& rec) {
             op->best = op->best.has_value() ? crdt_merge(*op->best, rec) : rec;
           };
           auto complete = [this, op, t0, done] {
             if (op->outstanding != 0) return;
             GetResult result;
             result.found = op->best.has_value();
             result.record = op->best;
             result.latency_ms = sim_.now() - t0;
             done(result);
           };
           size_t targets = std::min<size_t>(params_.query_replicas, found.closest.size());
           op->outstanding = targets;
           if (targets == 0) {
             complete();
             return;
           }
           for (size_t i = 0; i < targets; ++i) {
             const Contact c = found.closest[i];
             if (c.node == origin) {
               sim_.schedule(0, [this, origin, agent, op, absorb, complete] {
                 auto it = nodes_[origin].store.find(agent);
                 if (it != nodes_[origin].store.end()) absorb(it->second.record);
                 op->outstanding -= 1;
                 complete();
               });
               continue;
             }
             uint64_t rpc = next_rpc_++;
             open_rpcs_.insert(rpc);
             sim_.send(nodes_[origin].sim_node, nodes_[c.node].sim_node, params_.link, "dht.get",
                       kFindSize, [this, origin, agent, op, absorb, complete, rpc,
                                   node = c.node] {
                         if (!nodes_[node].alive) return;
                         std::optional<CrdtRecord> held;
                         auto it = nodes_[node].store.find(agent);
                         if (it != nodes_[node].store.end()) held = it->second.record;
                         sim_.send(nodes_[node].sim_node, nodes_[origin].sim_node, params_.link,
                                   "dht.get_reply", held ? kRecordSize : kFindSize,
                                   [this, op, absorb, complete, rpc, held] {
                                     if (open_rpcs_.erase(rpc) == 0) return;
                                     if (held.has_value()) absorb(*held);
                                     op->outstanding -= 1;
                                     complete();
                                   });
                       });
             sim_.schedule(params_.rpc_timeout_ms, [this, op, complete, rpc] {
               if (open_rpcs_.erase(rpc) == 0) return;
               op->outstanding -= 1;
               complete();
             });
           }
         });
}

// ---------------------------------------------------------------------------
// Capability index

void DhtFabric::store_capability(size_t origin, const CapabilityToken& token,
                                 const CrdtRecord& provider,
                                 std::function<void(const StoreReceipt&)> done) {
  ensure_usable(origin);
  if (normalize_capability(token.capability_path) != token.capability_path) {
    throw InvalidCapabilityPath("token path is not canonical: " + token.capability_path);
  }
  if (const AgentFacts* rec = provider.record()) {
    auto report = validate_record(*rec);
    if (!report.ok()) throw RecordInvalid("capability store rejected: " + report.describe());
  }
  AgentId key = capability_key(token.capability_path);
  lookup(origin, key,
         [this, origin, token, provider, done = std::move(done)](const LookupResult& found) {
           for (const Contact& c : found.closest) {
             auto place = [this, token, provider](size_t node) {
               if (!nodes_[node].alive) return;
               store_merge(node, provider, std::nullopt);
               nodes_[node].cap_index[token.capability_path][token.agent_id] = token;
             };
             if (c.node == origin) {
               place(origin);
               continue;
             }
             sim_.send(nodes_[origin].sim_node, nodes_[c.node].sim_node, params_.link,
                       "dht.cap_store", kRecordSize + 200,
                       [place, node = c.node] { place(node); });
           }
           if (done) {
             StoreReceipt receipt;
             receipt.stored_on = found.closest.size();
             receipt.hop_count = found.hop_count;
             receipt.latency_ms = found.latency_ms;
             done(receipt);
           }
         });
}

void DhtFabric::capability_query(size_t origin, const std::string& canonical_path,
                                 double min_trust,
                                 std::function<void(const CapabilityQueryResult&)> done) {
  ensure_usable(origin);
  if (normalize_capability(canonical_path) != canonical_path) {
    throw InvalidCapabilityPath("query path is not canonical: " + canonical_path);
  }
  int64_t t0 = sim_.now();
  AgentId key = capability_key(canonical_path);

  auto eval = [this, canonical_path, min_trust](size_t node) {
    std::vector<CapabilityHit> hits;
    const NodeState& st = nodes_[node];
    auto idx = st.cap_index.find(canonical_path);
    if (idx == st.cap_index.end()) return hits;
    for (const auto& [agent, token] : idx->second) {
      auto rec_it = st.store.find(agent);
      if (rec_it == st.store.end() || rec_it->second.record.is_tombstone()) continue;
      const AgentFacts& rec = *rec_it->second.record.record();
      if (rec.trust_score < min_trust) continue;
      if (verify_capability_token(token, rec.public_key, sim_.now()) != TokenStatus::Valid)
        continue;
      hits.push_back(CapabilityHit{agent, rec.trust_score, token});
    }
    return hits;
  };

  lookup(origin, key,
         [this, origin, t0, eval, done = std::move(done)](const LookupResult& found) {
           struct CapOp {
             size_t outstanding = 0;
             std::map<AgentId, CapabilityHit> hits;
           };
           auto op = std::make_shared<CapOp>();
           auto complete = [this, op, t0, done] {
             if (op->outstanding != 0) return;
             CapabilityQueryResult result;
             result.latency_ms = sim_.now() - t0;
             for (const auto& [agent, hit] : op->hits) result.hits.push_back(hit);
             std::sort(result.hits.begin(), result.hits.end(),
                       [](const CapabilityHit& a, const CapabilityHit& b) {
                         if (a.trust_score != b.trust_score) return a.trust_score > b.trust_score;
                         return a.agent_id < b.agent_id;
                       });
             done(result);
           };
           size_t targets = std::min<size_t>(params_.query_replicas, found.closest.size());
           op->outstanding = targets;
           if (targets == 0) {
             complete();
             return;
           }
           for (size_t i = 0; i < targets; ++i) {
             const Contact c = found.closest[i];
             if (c.node == origin) {
               sim_.schedule(0, [op, eval, complete, origin] {
                 for (const CapabilityHit& h : eval(origin)) op->hits.emplace(h.agent_id, h);
                 op->outstanding -= 1;
                 complete();
               });
               continue;
             }
             uint64_t rpc = next_rpc_++;
             open_rpcs_.insert(rpc);
             sim_.send(nodes_[origin].sim_node, nodes_[c.node].sim_node, params_.link,
                       "dht.cap_query", kFindSize, [this, op, eval, complete, rpc, origin,
                                                    node = c.node] {
                         if (!nodes_[node].alive) return;
                         std::vector<CapabilityHit> hits = eval(node);
                         sim_.send(nodes_[node].sim_node, nodes_[origin].sim_node, params_.link,
                                   "dht.cap_reply", kFindSize + 300 * hits.size(),
                                   [op, complete, rpc, hits, this] {
                                     if (open_rpcs_.erase(rpc) == 0) return;
                                     for (const CapabilityHit& h : hits)
                                       op->hits.emplace(h.agent_id, h);
                                     op->outstanding -= 1;
                                     complete();
                                   });
                       });
             sim_.schedule(params_.rpc_timeout_ms, [this, op, complete, rpc] {
               if (open_rpcs_.erase(rpc) == 0) return;
               op->outstanding -= 1;
               complete();
             });
           }
         });
}

// ---------------------------------------------------------------------------
// Gossip

void DhtFabric::watch_stamp(const AgentId& agent, const HlcStamp& stamp) {
  watch_ = {agent, stamp};
  watch_first_seen_.clear();
}

std::vector<DhtFabric::FullEntry> DhtFabric::collect_full(
    size_t node, const std::vector<AgentId>& agents) const {
  std::vector<FullEntry> out;
  const auto& st = nodes_[node].store;
  for (const AgentId& agent : agents) {
    auto it = st.find(agent);
    if (it == st.end()) continue;
    out.push_back(FullEntry{it->second.record, it->second.staple});
  }
  return out;
}

void DhtFabric::start_gossip(int64_t until_ms) {
  gossip_until_ = until_ms;
  if (params_.gossip.period_ms <= 0) return;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].alive) continue;
    int64_t phase = static_cast<int64_t>(
        sim_.stream("gossip.phase", i).below(static_cast<uint64_t>(params_.gossip.period_ms)));
    schedule_gossip_tick(i, phase);
  }
}

void DhtFabric::schedule_gossip_tick(size_t node, int64_t delay) {
  sim_.schedule(delay, [this, node] {
    if (!nodes_[node].alive || gossip_until_ < 0 || sim_.now() > gossip_until_) return;
    gossip_tick(node);
    if (sim_.now() + params_.gossip.period_ms <= gossip_until_) {
      schedule_gossip_tick(node, params_.gossip.period_ms);
    }
  });
}

void DhtFabric::gossip_tick(size_t node) {
  NodeState& me = nodes_[node];
  std::vector<Contact> peers;
  for (const auto& bucket : me.buckets) {
    peers.insert(peers.end(), bucket.begin(), bucket.end());
  }
  if (peers.empty()) return;
  std::sort(peers.begin(), peers.end(),
            [](const Contact& a, const Contact& b) { return a.id < b.id; });

  uint64_t tick = me.gossip_ticks++;
  sim::Rng rng = sim_.stream("gossip.pick", node, tick);
  size_t take = std::min<size_t>(params_.gossip.fanout, peers.size());
  for (size_t j = 0; j < take; ++j) {
    size_t swap_with = j + static_cast<size_t>(rng.below(peers.size() - j));
    std::swap(peers[j], peers[swap_with]);
  }
  peers.resize(take);

  std::vector<DigestEntry> digest;
  digest.reserve(me.store.size());
  for (const auto& [agent, entry] : me.store) {
    digest.push_back(DigestEntry{agent, entry.record.stamp(),
                                 entry.staple ? entry.staple->issued_ms : -1});
  }

  for (const Contact& peer : peers) {
    sim_.send(me.sim_node, nodes_[peer.node].sim_node, params_.link, "gossip.digest",
              16 + kDigestEntrySize * digest.size(),
              [this, from = node, at = peer.node, digest] {
                handle_digest(from, at, digest);
              });
  }
}

void DhtFabric::handle_digest(size_t from, size_t at, const std::vector<DigestEntry>& digest) {
  if (!nodes_[at].alive) return;
  observe_contact(at, Contact{nodes_[from].id, static_cast<uint32_t>(from)});

  std::vector<AgentId> want;
  std::vector<FullEntry> push;
  std::set<AgentId> in_digest;
  const auto& st = nodes_[at].store;
  for (const DigestEntry& d : digest) {
    in_digest.insert(d.agent);
    auto it = st.find(d.agent);
    if (it == st.end()) {
      want.push_back(d.agent);
      continue;
    }
    const StoredEntry& mine = it->second;
    int64_t my_staple = mine.staple ? mine.staple->issued_ms : -1;
    if (mine.record.stamp() < d.stamp) {
      want.push_back(d.agent);
    } else if (d.stamp < mine.record.stamp()) {
      push.push_back(FullEntry{mine.record, mine.staple});
    } else if (d.staple_issued > my_staple) {
      want.push_back(d.agent);
    } else if (my_staple > d.staple_issued) {
      push.push_back(FullEntry{mine.record, mine.staple});
    }
  }
  for (const auto& [agent, entry] : st) {
    if (!in_digest.contains(agent)) push.push_back(FullEntry{entry.record, entry.staple});
  }
  if (want.empty() && push.empty()) return;

  sim_.send(nodes_[at].sim_node, nodes_[from].sim_node, params_.link, "gossip.reply",
            16 + 32 * want.size() + kRecordSize * push.size(),
            [this, from, at, want, push] {
              if (!nodes_[from].alive) return;
              for (const FullEntry& f : push) store_merge(from, f.record, f.staple);
              if (want.empty()) return;
              std::vector<FullEntry> fulls = collect_full(from, want);
              if (fulls.empty()) return;
              sim_.send(nodes_[from].sim_node, nodes_[at].sim_node, params_.link, "gossip.push",
                        16 + kRecordSize * fulls.size(), [this, at, fulls] {
                          if (!nodes_[at].alive) return;
                          for (const FullEntry& f : fulls) store_merge(at, f.record, f.staple);
                        });
            });
}

// ---------------------------------------------------------------------------
// Churn

void DhtFabric::churn_join(int64_t /*t*/) {
  std::vector<size_t> live = live_nodes();
  if (live.empty()) return;
  size_t idx = spawn_node();
  sim::Rng rng = sim_.stream("dht.churn.boot", churn_joins_);
  size_t bootstrap = live[rng.below(live.size())];
  churn_joins_ += 1;
  join(idx, bootstrap);
  if (gossip_until_ >= 0 && params_.gossip.period_ms > 0 && sim_.now() <= gossip_until_) {
    int64_t phase = static_cast<int64_t>(
        sim_.stream("gossip.phase", idx).below(static_cast<uint64_t>(params_.gossip.period_ms)));
    schedule_gossip_tick(idx, phase);
  }
}

void DhtFabric::churn_leave(int64_t /*t*/) {
  std::vector<size_t> candidates;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].alive && !protected_.contains(i)) candidates.push_back(i);
  }
  if (candidates.empty() || live_count() <= 1) return;  // never extinguish the fabric
  sim::Rng rng = sim_.stream("dht.churn.leave", churn_leaves_);
  churn_leaves_ += 1;
  nodes_[candidates[rng.below(candidates.size())]].alive = false;
}

}  // namespace agentnet
