#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace agentnet {

/// Nearest-rank quantile over an unsorted sample set: rank ceil(q*n), so
/// q=1.0 is the max and every result is an observed sample. Throws Error on
/// an empty set or q outside (0, 1].
double quantile(std::vector<double> values, double q);
double percentile_p99(const std::vector<double>& values);
double median(const std::vector<double>& values);

/// Canonical number rendering shared by CSV and JSON output: integral values
/// print without a decimal point, everything else as fixed 6-decimal with
/// trailing zeros trimmed. Deterministic across runs and platforms.
std::string format_value(double v);

enum class Stat { Count, Min, Median, P99, Max };
enum class Cmp { Lt, Le, Gt, Ge, Eq };

const char* to_string(Stat s);
const char* to_string(Cmp c);

/// A pass/fail threshold evaluated purely from recorded samples.
struct Budget {
  std::string name;
  std::string metric;
  Stat stat = Stat::P99;
  Cmp cmp = Cmp::Lt;
  double threshold = 0.0;
};

struct BudgetOutcome {
  Budget budget;
  double observed = 0.0;
  bool pass = false;
  bool has_samples = false;  // a budget over a missing metric always fails
  std::string describe() const;
};

/// Accumulates named samples for one scenario run and renders them as CSV
/// rows `scenario,seed,metric,unit,value` (samples in insertion order, then
/// count/min/median/p99/max summaries per metric, then budget verdicts) or as
/// the equivalent JSON document.
class MetricsReport {
 public:
  MetricsReport(std::string scenario, uint64_t seed)
      : scenario_(std::move(scenario)), seed_(seed) {}

  void add(const std::string& metric, const std::string& unit, double value);
  void add_budget(Budget b) { budgets_.push_back(std::move(b)); }

  const std::string& scenario() const { return scenario_; }
  uint64_t seed() const { return seed_; }
  size_t sample_count() const { return samples_.size(); }
  /// All recorded values for one metric, in insertion order.
  std::vector<double> values(const std::string& metric) const;
  double stat_of(const std::string& metric, Stat s) const;  // throws Error if absent

  std::vector<BudgetOutcome> evaluate_budgets() const;
  bool all_pass() const;

  std::string to_csv() const;
  nlohmann::ordered_json to_json() const;

 private:
  struct Sample {
    std::string metric;
    std::string unit;
    double value;
  };

  std::string scenario_;
  uint64_t seed_;
  std::vector<Sample> samples_;
  std::vector<std::string> metric_order_;
  std::map<std::string, std::string> units_;
  std::vector<Budget> budgets_;
};

}  // namespace agentnet
