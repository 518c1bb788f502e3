#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "agentnet/rng.hpp"

namespace agentnet::sim {

/// Latency-only link: sampled latency = base + jitter, clamped to >= 0 and
/// rounded to integer milliseconds. Loss is decided per message.
struct LinkModel {
  enum class Jitter { Fixed, Uniform, Lognormal };

  double base_ms = 0.0;
  Jitter jitter = Jitter::Fixed;
  double lo_ms = 0.0, hi_ms = 0.0;   // uniform
  double mu = 0.0, sigma = 0.0;      // lognormal; median = exp(mu)
  double loss_rate = 0.0;            // in [0, 1)

  static LinkModel fixed(double base_ms);
  static LinkModel uniform(double base_ms, double lo_ms, double hi_ms);
  static LinkModel lognormal_median(double base_ms, double median_ms, double sigma);

  int64_t sample(Rng& rng) const;
};

/// Join/leave process for switch-fabric nodes, events per simulated second.
struct ChurnModel {
  double join_per_s = 0.0;
  double leave_per_s = 0.0;
};

struct TraceEntry {
  int64_t t_send = 0;
  int64_t t_deliver = -1;  // -1 = lost
  uint32_t src = 0;
  uint32_t dst = 0;
  std::string kind;
  uint64_t size = 0;
};

struct MessageCounters {
  uint64_t sent = 0;
  uint64_t delivered = 0;
  uint64_t lost = 0;
};

/// Deterministic discrete-event engine: integer-millisecond virtual clock,
/// (fire_at, seq)-ordered queue, seeded randomness and an optional full
/// message trace. Strictly single-threaded.
class SimEngine {
 public:
  explicit SimEngine(uint64_t seed, bool record_trace = true);

  int64_t now() const { return now_ms_; }
  uint64_t seed() const { return seed_; }

  uint64_t schedule(int64_t delay_ms, std::function<void()> action);

  /// Process every event with fire_at_ms <= t_end in (fire_at, seq) order.
  /// The clock never runs backwards; afterwards now() == max(now, t_end).
  size_t run_until(int64_t t_end);

  /// Drain the queue completely; the clock stops at the last event.
  size_t run_to_quiescence();

  bool idle() const { return queue_.empty(); }
  std::optional<int64_t> next_event_time() const;

  Rng stream(std::string_view tag, uint64_t a = 0, uint64_t b = 0) const {
    return Rng::derive(seed_, tag, a, b);
  }

  /// Node handles are plain indices; fabrics allocate one per participant.
  uint32_t alloc_node() { return next_node_++; }

  /// Send a message over a link: samples latency and loss from the per-pair
  /// stream, records a trace entry and schedules on_deliver. Returns the
  /// sampled latency, or nullopt when the message was lost.
  std::optional<int64_t> send(uint32_t src, uint32_t dst, const LinkModel& link, std::string kind,
                              uint64_t size, std::function<void()> on_deliver);

  const std::vector<TraceEntry>& trace() const { return trace_; }
  bool trace_enabled() const { return record_trace_; }
  const MessageCounters& totals() const { return totals_; }
  const std::map<std::string, MessageCounters>& counters_by_kind() const { return by_kind_; }

 private:
  struct Pending {
    int64_t fire_at_ms;
    uint64_t seq;
    std::function<void()> action;
  };
  struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
      if (a.fire_at_ms != b.fire_at_ms) return a.fire_at_ms > b.fire_at_ms;
      return a.seq > b.seq;
    }
  };

  Rng& pair_stream(uint32_t src, uint32_t dst);

  uint64_t seed_;
  bool record_trace_;
  int64_t now_ms_ = 0;
  uint64_t next_seq_ = 0;
  uint32_t next_node_ = 0;
  std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
  std::map<std::pair<uint32_t, uint32_t>, Rng> pair_rngs_;
  std::vector<TraceEntry> trace_;
  MessageCounters totals_;
  std::map<std::string, MessageCounters> by_kind_;
};

/// Anything that can absorb churn: the fabric decides what join/leave mean.
class ChurnTarget {
 public:
  virtual ~ChurnTarget() = default;
  virtual void churn_join(int64_t t) = 0;
  virtual void churn_leave(int64_t t) = 0;
};

/// Schedule Poisson join/leave events over [now, now + duration_ms).
/// Returns the number of scheduled events.
size_t apply_churn(SimEngine& engine, const ChurnModel& churn, ChurnTarget& target,
                   int64_t duration_ms);

}  // namespace agentnet::sim
