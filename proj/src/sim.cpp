#include "agentnet/sim.hpp"

#include <algorithm>
#include <cmath>

#include "agentnet/crypto.hpp"
#include "agentnet/errors.hpp"

namespace agentnet::sim {

Rng Rng::derive(uint64_t master_seed, std::string_view tag, uint64_t a, uint64_t b) {
  BodyWriter w;
  w.u64(master_seed);
  w.str(tag);
  w.u64(a);
  w.u64(b);
  Digest32 d = sha256(w.data());
  uint64_t state = 0;
  for (int i = 0; i < 8; ++i) state |= static_cast<uint64_t>(d[i]) << (8 * i);
  return Rng(state);
}

LinkModel LinkModel::fixed(double base_ms) {
  LinkModel m;
  m.base_ms = base_ms;
  m.jitter = Jitter::Fixed;
  return m;
}

LinkModel LinkModel::uniform(double base_ms, double lo_ms, double hi_ms) {
  LinkModel m;
  m.base_ms = base_ms;
  m.jitter = Jitter::Uniform;
  m.lo_ms = lo_ms;
  m.hi_ms = hi_ms;
  return m;
}

LinkModel LinkModel::lognormal_median(double base_ms, double median_ms, double sigma) {
  LinkModel m;
  m.base_ms = base_ms;
  m.jitter = Jitter::Lognormal;
  m.mu = std::log(median_ms);
  m.sigma = sigma;
  return m;
}

int64_t LinkModel::sample(Rng& rng) const {
  double latency = base_ms;
  switch (jitter) {
    case Jitter::Fixed: break;
    case Jitter::Uniform: latency += rng.uniform(lo_ms, hi_ms); break;
    case Jitter::Lognormal: latency += rng.lognormal(mu, sigma); break;
  }
  if (latency < 0.0) latency = 0.0;
  return static_cast<int64_t>(std::llround(latency));
}

SimEngine::SimEngine(uint64_t seed, bool record_trace) : seed_(seed), record_trace_(record_trace) {}

uint64_t SimEngine::schedule(int64_t delay_ms, std::function<void()> action) {
  if (delay_ms < 0) throw Error("cannot schedule in the past");
  uint64_t seq = next_seq_++;
  queue_.push(Pending{now_ms_ + delay_ms, seq, std::move(action)});
  return seq;
}

size_t SimEngine::run_until(int64_t t_end) {
  size_t processed = 0;
  while (!queue_.empty() && queue_.top().fire_at_ms <= t_end) {
    Pending ev = std::move(const_cast<Pending&>(queue_.top()));
    queue_.pop();
    now_ms_ = std::max(now_ms_, ev.fire_at_ms);
    ev.action();
    ++processed;
  }
  now_ms_ = std::max(now_ms_, t_end);
  return processed;
}

size_t SimEngine::run_to_quiescence() {
  size_t processed = 0;
  while (!queue_.empty()) {
    Pending ev = std::move(const_cast<Pending&>(queue_.top()));
    queue_.pop();
    now_ms_ = std::max(now_ms_, ev.fire_at_ms);
    ev.action();
    ++processed;
  }
  return processed;
}

std::optional<int64_t> SimEngine::next_event_time() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.top().fire_at_ms;
}

Rng& SimEngine::pair_stream(uint32_t src, uint32_t dst) {
  auto key = std::make_pair(src, dst);
  auto it = pair_rngs_.find(key);
  if (it == pair_rngs_.end())
    it = pair_rngs_.emplace(key, Rng::derive(seed_, "link", src, dst)).first;
  return it->second;
}

std::optional<int64_t> SimEngine::send(uint32_t src, uint32_t dst, const LinkModel& link,
                                       std::string kind, uint64_t size,
                                       std::function<void()> on_deliver) {
  Rng& rng = pair_stream(src, dst);
  bool lost = link.loss_rate > 0.0 && rng.chance(link.loss_rate);
  int64_t latency = link.sample(rng);

  totals_.sent++;
  MessageCounters& kc = by_kind_[kind];
  kc.sent++;
  if (lost) {
    totals_.lost++;
    kc.lost++;
    if (record_trace_) trace_.push_back(TraceEntry{now_ms_, -1, src, dst, std::move(kind), size});
    return std::nullopt;
  }
  totals_.delivered++;
  kc.delivered++;
  if (record_trace_)
    trace_.push_back(TraceEntry{now_ms_, now_ms_ + latency, src, dst, std::move(kind), size});
  schedule(latency, std::move(on_deliver));
  return latency;
}

size_t apply_churn(SimEngine& engine, const ChurnModel& churn, ChurnTarget& target,
                   int64_t duration_ms) {
  if (churn.join_per_s < 0.0 || churn.leave_per_s < 0.0) throw Error("churn rates must be >= 0");
  size_t scheduled = 0;
  const int64_t horizon = engine.now() + duration_ms;
  if (churn.join_per_s > 0.0) {
    Rng rng = engine.stream("churn.join");
    double t = static_cast<double>(engine.now());
    for (;;) {
      t += rng.exponential(1000.0 / churn.join_per_s);
      int64_t at = static_cast<int64_t>(std::llround(t));
      if (at >= horizon) break;
      engine.schedule(at - engine.now(), [&target, at] { target.churn_join(at); });
      ++scheduled;
    }
  }
  if (churn.leave_per_s > 0.0) {
    Rng rng = engine.stream("churn.leave");
    double t = static_cast<double>(engine.now());
    for (;;) {
      t += rng.exponential(1000.0 / churn.leave_per_s);
      int64_t at = static_cast<int64_t>(std::llround(t));
      if (at >= horizon) break;
      engine.schedule(at - engine.now(), [&target, at] { target.churn_leave(at); });
      ++scheduled;
    }
  }
  return scheduled;
}

}  // namespace agentnet::sim
