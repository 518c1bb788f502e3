#pragma once

#include <compare>
#include <cstdint>
#include <tuple>

#include "agentnet/crypto.hpp"

namespace agentnet {

/// Hybrid logical clock stamp. Strict total order: physical time, then
/// logical counter, then issuer id. Two distinct issuers can never produce
/// equal stamps because the tiebreak differs.
struct HlcStamp {
  int64_t physical_ms = 0;
  uint32_t logical = 0;
  AgentId node_tiebreak{};

  friend auto operator<=>(const HlcStamp& a, const HlcStamp& b) {
    return std::tie(a.physical_ms, a.logical, a.node_tiebreak) <=>
           std::tie(b.physical_ms, b.logical, b.node_tiebreak);
  }
  friend bool operator==(const HlcStamp& a, const HlcStamp& b) = default;
};

/// Per-issuer stamp source. Stamps never decrease even if the supplied
/// physical clock stalls or jumps backwards.
class HlcClock {
 public:
  explicit HlcClock(AgentId issuer) : issuer_(issuer) {}

  HlcStamp next(int64_t now_ms) {
    if (now_ms > last_physical_) {
      last_physical_ = now_ms;
      last_logical_ = 0;
    } else {
      ++last_logical_;
    }
    return HlcStamp{last_physical_, last_logical_, issuer_};
  }

  /// Fold an already-issued stamp into the clock so the next stamp is
  /// strictly greater than it (the HLC receive rule).
  void observe(const HlcStamp& stamp) {
    if (stamp.physical_ms > last_physical_) {
      last_physical_ = stamp.physical_ms;
      last_logical_ = stamp.logical;
    } else if (stamp.physical_ms == last_physical_ && stamp.logical > last_logical_) {
      last_logical_ = stamp.logical;
    }
  }

  const AgentId& issuer() const { return issuer_; }

 private:
  AgentId issuer_;
  int64_t last_physical_ = -1;
  uint32_t last_logical_ = 0;
};

}  // namespace agentnet
