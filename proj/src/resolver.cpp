#include "agentnet/resolver.hpp"

#include <algorithm>

#include "agentnet/errors.hpp"

namespace agentnet {

namespace {

constexpr uint64_t kQuerySize = 128;

KeyPair keypair_from_rng(sim::Rng rng) {
  Bytes seed(kSeedLen);
  for (size_t i = 0; i < seed.size(); i += 8) {
    uint64_t w = rng.next_u64();
    for (size_t j = 0; j < 8; ++j) seed[i + j] = static_cast<uint8_t>(w >> (8 * j));
  }
  return generate_keypair(seed);
}

std::string format_trust(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", t);
  return buf;
}

bool is_private_label(const std::string& label) { return label.rfind("private:", 0) == 0; }

}  // namespace

Query Query::by_id(const AgentId& id) {
  Query q;
  q.kind = Kind::ById;
  q.agent_id = id;
  return q;
}

Query Query::by_capability(std::string canonical_path, double min_trust) {
  Query q;
  q.kind = Kind::ByCapability;
  q.capability_path = std::move(canonical_path);
  q.min_trust = min_trust;
  return q;
}

std::string Query::text() const {
  if (kind == Kind::ById) return "id:" + agent_id.hex();
  return "cap:" + capability_path + "?mt=" + format_trust(min_trust);
}

Bytes ResolutionProof::signing_body() const {
  BodyWriter w;
  w.str(query);
  w.raw(result_digest);
  w.i64(timestamp_ms);
  return w.take();
}

bool verify_resolution_proof(const ResolutionProof& proof, const PublicKey& bridge_key) {
  return verify(bridge_key, proof.signing_body(), proof.signature);
}

Digest32 answer_digest(const RegistryAnswer& answer) {
  BodyWriter w;
  w.u8(answer.record.has_value() ? 1 : 0);
  if (answer.record.has_value()) {
    w.bytes(answer.record->signing_body());
    w.raw(answer.record->signature);
  }
  w.u32(static_cast<uint32_t>(answer.providers.size()));
  for (const CapabilityHit& h : answer.providers) {
    w.raw(h.agent_id.bytes);
    w.f64(h.trust_score);
    w.bytes(h.token.signing_body());
    w.raw(h.token.signature);
  }
  return sha256(w.data());
}

// ---------------------------------------------------------------------------
// PrivateShard

void PrivateShard::put(const AgentFacts& record) {
  auto report = validate_record(record);
  if (!report.ok()) throw RecordInvalid("shard rejected record: " + report.describe());
  CrdtRecord incoming = CrdtRecord::of(record);
  auto it = store_.find(record.agent_id);
  if (it == store_.end()) {
    store_.emplace(record.agent_id, incoming);
  } else {
    it->second = crdt_merge(it->second, incoming);
  }
}

void PrivateShard::revoke(const Tombstone& tomb) {
  CrdtRecord incoming = CrdtRecord::of(tomb);
  auto it = store_.find(tomb.agent_id);
  if (it == store_.end()) {
    store_.emplace(tomb.agent_id, incoming);
    return;
  }
  if (const AgentFacts* rec = it->second.record()) {
    if (!verify_tombstone(tomb, rec->public_key)) {
      throw RecordInvalid("tombstone signature does not verify against the stored owner key");
    }
  }
  it->second = crdt_merge(it->second, incoming);
}

void PrivateShard::put_capability(const CapabilityToken& token) {
  caps_[token.capability_path][token.agent_id] = token;
}

RegistryAnswer PrivateShard::answer(const Query& q, int64_t now_ms) const {
  RegistryAnswer out;
  if (q.kind == Query::Kind::ById) {
    auto it = store_.find(q.agent_id);
    if (it != store_.end() && !it->second.is_tombstone()) out.record = *it->second.record();
    return out;
  }
  auto idx = caps_.find(q.capability_path);
  if (idx == caps_.end()) return out;
  for (const auto& [agent, token] : idx->second) {
    auto rec_it = store_.find(agent);
    if (rec_it == store_.end() || rec_it->second.is_tombstone()) continue;
    const AgentFacts& rec = *rec_it->second.record();
    if (rec.trust_score < q.min_trust) continue;
    if (verify_capability_token(token, rec.public_key, now_ms) != TokenStatus::Valid) continue;
    out.providers.push_back(CapabilityHit{agent, rec.trust_score, token});
  }
  std::sort(out.providers.begin(), out.providers.end(),
            [](const CapabilityHit& a, const CapabilityHit& b) {
              if (a.trust_score != b.trust_score) return a.trust_score > b.trust_score;
              return a.agent_id < b.agent_id;
            });
  return out;
}

// ---------------------------------------------------------------------------
// BridgeGateway

BridgeGateway::BridgeGateway(sim::SimEngine& sim, BridgeParams params)
    : params_(std::move(params)), sim_node_(sim.alloc_node()) {
  std::string tag = "bridge." + params_.from_label + "->" + params_.to_label;
  keys_ = keypair_from_rng(sim.stream(tag));
}

const std::pair<RegistryAnswer, ResolutionProof>* BridgeGateway::cached(const std::string& key,
                                                                        int64_t now_ms) const {
  auto it = cache_.find(key);
  if (it == cache_.end()) return nullptr;
  if (now_ms - it->second.cached_at_ms >= params_.cache_ttl_ms) return nullptr;
  return &it->second.payload;
}

ResolutionProof BridgeGateway::admit(const std::string& key, RegistryAnswer& answer,
                                     int64_t now_ms) {
  if (answer.providers.size() > params_.max_providers) {
    answer.providers.resize(params_.max_providers);
  }
  ResolutionProof proof;
  proof.query = key;
  proof.result_digest = answer_digest(answer);
  proof.timestamp_ms = now_ms;
  proof.signature = sign(keys_.secret_key, proof.signing_body());
  cache_[key] = CacheEntry{{answer, proof}, now_ms};
  return proof;
}

// ---------------------------------------------------------------------------
// ResolutionEngine

uint32_t RegistryHandle::entry_sim_node() const {
  switch (kind) {
    case Kind::PrivateShard:
      return shard->sim_node();
    case Kind::UpgradeFabric:
      return tree->sim_node(tree_entry);
    case Kind::SwitchFabric:
      return dht->sim_node(dht_origin);
  }
  return 0;
}

ResolutionEngine::ResolutionEngine(sim::SimEngine& sim, std::vector<RegistryHandle> path)
    : sim_(sim), path_(std::move(path)), client_node_(sim.alloc_node()) {
  if (path_.empty()) throw ConfigError("search path must not be empty");
  std::set<std::string> labels;
  for (const RegistryHandle& h : path_) {
    if (h.label.empty() || h.label.find('|') != std::string::npos) {
      throw ConfigError("registry label must be non-empty and free of '|': " + h.label);
    }
    if (!labels.insert(h.label).second) {
      throw ConfigError("duplicate registry label in search path: " + h.label);
    }
    bool backed = (h.kind == RegistryHandle::Kind::PrivateShard && h.shard != nullptr) ||
                  (h.kind == RegistryHandle::Kind::UpgradeFabric && h.tree != nullptr) ||
                  (h.kind == RegistryHandle::Kind::SwitchFabric && h.dht != nullptr);
    if (!backed) throw ConfigError("registry handle lacks its backing fabric: " + h.label);
  }
  resolver_keys_ = keypair_from_rng(sim_.stream("resolver.keys"));
  chain_ = AuditChain(resolver_keys_.public_key);
}

BridgeGateway& ResolutionEngine::add_bridge(BridgeParams params) {
  auto key = std::make_pair(params.from_label, params.to_label);
  auto bridge = std::make_unique<BridgeGateway>(sim_, std::move(params));
  auto [it, fresh] = bridges_.emplace(key, std::move(bridge));
  if (!fresh) throw ConfigError("duplicate bridge: " + key.first + " -> " + key.second);
  return *it->second;
}

void ResolutionEngine::resolve(const AgentId& actor, const Query& q,
                               const PolicyConstraints& policy,
                               std::function<void(const ResolveResult&)> done) {
  auto c = std::make_shared<Ctx>();
  c->actor = actor;
  c->query = q;
  c->policy = policy;
  c->t0 = sim_.now();
  c->done = std::move(done);
  step(c, 0);
}

void ResolutionEngine::step(std::shared_ptr<Ctx> c, size_t pos) {
  if (pos >= path_.size()) {
    ResolveResult r;
    r.status = ResolveResult::Status::NotFound;
    r.latency_ms = sim_.now() - c->t0;
    r.audit_events = c->audit_events;
    c->done(r);
    return;
  }
  const RegistryHandle& h = path_[pos];
  if (!h.is_private()) {
    if (!c->policy.allow_external_resolution) {
      // Denied before anything leaves the private tier: no message was sent.
      ResolveResult r;
      r.status = ResolveResult::Status::PolicyDenied;
      r.latency_ms = sim_.now() - c->t0;
      r.audit_events = c->audit_events;
      c->done(r);
      return;
    }
    if (!c->policy.allowed_boundaries.empty() &&
        !c->policy.allowed_boundaries.contains(h.label)) {
      step(c, pos + 1);
      return;
    }
  }
  query_registry(c, pos);
}

void ResolutionEngine::query_registry(std::shared_ptr<Ctx> c, size_t pos) {
  const RegistryHandle& h = path_[pos];
  std::string from = c->prev_label.value_or("");
  bool crossing = !from.empty() && is_private_label(from) && from != h.label;
  c->prev_label = h.label;

  std::string kind;
  if (crossing) {
    chain_.append(resolver_keys_, sim_.now(), c->actor, c->query.text(), from, h.label);
    c->audit_events += 1;
    kind = "xb|" + from + "|" + h.label + "|" + c->query.text();
  } else {
    kind = "rq|" + h.label + "|" + c->query.text();
  }

  BridgeGateway* bridge = nullptr;
  if (crossing) {
    auto it = bridges_.find({from, h.label});
    if (it != bridges_.end()) bridge = it->second.get();
  }

  if (bridge != nullptr) {
    sim_.send(client_node_, bridge->sim_node(), bridge->params().link, std::move(kind),
              kQuerySize, [this, c, pos, bridge] {
                const auto* hit = bridge->cached(c->query.text(), sim_.now());
                if (hit != nullptr) {
                  finish(c, pos, hit->first, hit->second);
                  return;
                }
                answer_from(c, pos, path_[pos], [this, c, pos, bridge](RegistryAnswer ans) {
                  if (!ans.found()) {
                    step(c, pos + 1);
                    return;
                  }
                  ResolutionProof proof = bridge->admit(c->query.text(), ans, sim_.now());
                  finish(c, pos, std::move(ans), proof);
                });
              });
    return;
  }

  sim_.send(client_node_, h.entry_sim_node(), h.access_link, std::move(kind), kQuerySize,
            [this, c, pos] {
              answer_from(c, pos, path_[pos], [this, c, pos](RegistryAnswer ans) {
                if (!ans.found()) {
                  step(c, pos + 1);
                  return;
                }
                finish(c, pos, std::move(ans), std::nullopt);
              });
            });
}

void ResolutionEngine::answer_from(std::shared_ptr<Ctx> c, size_t /*pos*/,
                                   const RegistryHandle& h,
                                   std::function<void(RegistryAnswer)> done) {
  switch (h.kind) {
    case RegistryHandle::Kind::PrivateShard: {
      done(h.shard->answer(c->query, sim_.now()));
      return;
    }
    case RegistryHandle::Kind::UpgradeFabric: {
      if (c->query.kind != Query::Kind::ById) {
        done(RegistryAnswer{});  // the hierarchical fabric resolves ids only
        return;
      }
      h.tree->resolve_ttl(h.tree_entry, c->query.agent_id,
                          [done = std::move(done)](const TreeFabric::ResolveOutcome& out) {
                            RegistryAnswer ans;
                            if (out.found) ans.record = out.record;
                            done(std::move(ans));
                          });
      return;
    }
    case RegistryHandle::Kind::SwitchFabric: {
      if (c->query.kind == Query::Kind::ById) {
        h.dht->get(h.dht_origin, c->query.agent_id,
                   [done = std::move(done)](const GetResult& r) {
                     RegistryAnswer ans;
                     if (r.found && !r.record->is_tombstone()) ans.record = *r.record->record();
                     done(std::move(ans));
                   });
      } else {
        h.dht->capability_query(h.dht_origin, c->query.capability_path, c->query.min_trust,
                                [done = std::move(done)](const CapabilityQueryResult& r) {
                                  RegistryAnswer ans;
                                  ans.providers = r.hits;
                                  done(std::move(ans));
                                });
      }
      return;
    }
  }
}

void ResolutionEngine::finish(std::shared_ptr<Ctx> c, size_t pos, RegistryAnswer answer,
                              std::optional<ResolutionProof> proof) {
  ResolveResult r;
  r.status = ResolveResult::Status::Found;
  r.answer = std::move(answer);
  r.latency_ms = sim_.now() - c->t0;
  r.position = static_cast<int>(pos);
  r.audit_events = c->audit_events;
  r.proof = std::move(proof);
  c->done(r);
}

ResolveResult ResolutionEngine::resolve_now(const AgentId& actor, const Query& q,
                                            const PolicyConstraints& policy) {
  std::optional<ResolveResult> result;
  resolve(actor, q, policy, [&result](const ResolveResult& r) { result = r; });
  sim_.run_to_quiescence();
  if (!result.has_value()) throw NotFound("resolution never completed (message lost)");
  if (result->status == ResolveResult::Status::PolicyDenied) {
    throw PolicyDenied("policy forbids external resolution for " + q.text());
  }
  if (result->status == ResolveResult::Status::NotFound) {
    throw NotFound("search path exhausted for " + q.text());
  }
  return *result;
}

// ---------------------------------------------------------------------------
// Audit reconciliation

namespace {

std::string crossing_key(const std::string& from, const std::string& to,
                         const std::string& query, int64_t t) {
  return from + "\x1f" + to + "\x1f" + query + "\x1f" + std::to_string(t);
}

std::string describe_crossing(const std::string& from, const std::string& to,
                              const std::string& query, int64_t t) {
  return from + " -> " + to + " query='" + query + "' t=" + std::to_string(t);
}

}  // namespace

AuditCompleteness audit_completeness(const AuditChain& chain,
                                     const std::vector<sim::TraceEntry>& trace) {
  struct Crossing {
    std::string from, to, query;
    int64_t t;
  };
  std::multimap<std::string, Crossing> messages;
  for (const sim::TraceEntry& e : trace) {
    if (e.kind.rfind("xb|", 0) != 0) continue;
    size_t p1 = e.kind.find('|', 3);
    size_t p2 = (p1 == std::string::npos) ? std::string::npos : e.kind.find('|', p1 + 1);
    if (p2 == std::string::npos) continue;
    Crossing c;
    c.from = e.kind.substr(3, p1 - 3);
    c.to = e.kind.substr(p1 + 1, p2 - p1 - 1);
    c.query = e.kind.substr(p2 + 1);
    c.t = e.t_send;
    messages.emplace(crossing_key(c.from, c.to, c.query, c.t), std::move(c));
  }

  AuditCompleteness out;
  for (const AuditEvent& ev : chain.events()) {
    std::string key = crossing_key(ev.from_boundary, ev.to_boundary, ev.query, ev.timestamp_ms);
    auto it = messages.find(key);
    if (it == messages.end()) {
      out.unmatched_events.push_back(
          describe_crossing(ev.from_boundary, ev.to_boundary, ev.query, ev.timestamp_ms));
      continue;
    }
    messages.erase(it);
  }
  for (const auto& [key, c] : messages) {
    out.unmatched_messages.push_back(describe_crossing(c.from, c.to, c.query, c.t));
  }
  return out;
}

std::vector<std::string> contacted_labels(const std::vector<sim::TraceEntry>& trace,
                                          const std::string& query_text) {
  std::vector<std::string> out;
  for (const sim::TraceEntry& e : trace) {
    if (e.kind.rfind("rq|", 0) == 0) {
      size_t p = e.kind.find('|', 3);
      if (p == std::string::npos) continue;
      if (e.kind.substr(p + 1) != query_text) continue;
      out.push_back(e.kind.substr(3, p - 3));
    } else if (e.kind.rfind("xb|", 0) == 0) {
      size_t p1 = e.kind.find('|', 3);
      size_t p2 = (p1 == std::string::npos) ? std::string::npos : e.kind.find('|', p1 + 1);
      if (p2 == std::string::npos) continue;
      if (e.kind.substr(p2 + 1) != query_text) continue;
      out.push_back(e.kind.substr(p1 + 1, p2 - p1 - 1));
    }
  }
  return out;
}

}  // namespace agentnet
