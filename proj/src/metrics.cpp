#include "agentnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "agentnet/errors.hpp"

namespace agentnet {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of empty sample set");
  if (!(q > 0.0 && q <= 1.0)) throw Error("quantile q must lie in (0, 1]");
  std::sort(values.begin(), values.end());
  size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(values.size())));
  if (rank == 0) rank = 1;
  return values[rank - 1];
}

double percentile_p99(const std::vector<double>& values) { return quantile(values, 0.99); }
double median(const std::vector<double>& values) { return quantile(values, 0.5); }

std::string format_value(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.007199254740992e15) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s = buf;
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

const char* to_string(Stat s) {
  switch (s) {
    case Stat::Count: return "count";
    case Stat::Min: return "min";
    case Stat::Median: return "median";
    case Stat::P99: return "p99";
    case Stat::Max: return "max";
  }
  return "?";
}

const char* to_string(Cmp c) {
  switch (c) {
    case Cmp::Lt: return "<";
    case Cmp::Le: return "<=";
    case Cmp::Gt: return ">";
    case Cmp::Ge: return ">=";
    case Cmp::Eq: return "==";
  }
  return "?";
}

namespace {

bool compare(double observed, Cmp cmp, double threshold) {
  switch (cmp) {
    case Cmp::Lt: return observed < threshold;
    case Cmp::Le: return observed <= threshold;
    case Cmp::Gt: return observed > threshold;
    case Cmp::Ge: return observed >= threshold;
    case Cmp::Eq: return observed == threshold;
  }
  return false;
}

double stat_over(const std::vector<double>& values, Stat s) {
  switch (s) {
    case Stat::Count: return static_cast<double>(values.size());
    case Stat::Min: return *std::min_element(values.begin(), values.end());
    case Stat::Median: return median(values);
    case Stat::P99: return percentile_p99(values);
    case Stat::Max: return *std::max_element(values.begin(), values.end());
  }
  return 0.0;
}

}  // namespace

void MetricsReport::add(const std::string& metric, const std::string& unit, double value) {
  if (metric.empty() || metric.find(',') != std::string::npos) {
    throw Error("metric name must be non-empty and comma-free: '" + metric + "'");
  }
  auto [it, fresh] = units_.emplace(metric, unit);
  if (!fresh && it->second != unit) {
    throw Error("metric '" + metric + "' recorded with conflicting units '" + it->second +
                "' and '" + unit + "'");
  }
  if (fresh) metric_order_.push_back(metric);
  samples_.push_back(Sample{metric, unit, value});
}

std::vector<double> MetricsReport::values(const std::string& metric) const {
  std::vector<double> out;
  for (const Sample& s : samples_) {
    if (s.metric == metric) out.push_back(s.value);
  }
  return out;
}

double MetricsReport::stat_of(const std::string& metric, Stat s) const {
  std::vector<double> vals = values(metric);
  if (vals.empty()) throw Error("no samples recorded for metric '" + metric + "'");
  return stat_over(vals, s);
}

std::vector<BudgetOutcome> MetricsReport::evaluate_budgets() const {
  std::vector<BudgetOutcome> out;
  for (const Budget& b : budgets_) {
    BudgetOutcome r;
    r.budget = b;
    std::vector<double> vals = values(b.metric);
    r.has_samples = !vals.empty();
    if (r.has_samples) {
      r.observed = stat_over(vals, b.stat);
      r.pass = compare(r.observed, b.cmp, b.threshold);
    }
    out.push_back(std::move(r));
  }
  return out;
}

bool MetricsReport::all_pass() const {
  for (const BudgetOutcome& r : evaluate_budgets()) {
    if (!r.pass) return false;
  }
  return true;
}

std::string BudgetOutcome::describe() const {
  std::string s = budget.name + ": " + to_string(budget.stat) + "(" + budget.metric + ")";
  if (!has_samples) return s + " has no samples -> FAIL";
  s += " = " + format_value(observed) + " " + to_string(budget.cmp) + " " +
       format_value(budget.threshold);
  s += pass ? " -> pass" : " -> FAIL";
  return s;
}

std::string MetricsReport::to_csv() const {
  std::string out = "scenario,seed,metric,unit,value\n";
  auto row = [&](const std::string& metric, const std::string& unit, double value) {
    out += scenario_;
    out += ',';
    out += std::to_string(seed_);
    out += ',';
    out += metric;
    out += ',';
    out += unit;
    out += ',';
    out += format_value(value);
    out += '\n';
  };
  for (const Sample& s : samples_) row(s.metric, s.unit, s.value);
  for (const std::string& metric : metric_order_) {
    std::vector<double> vals = values(metric);
    const std::string& unit = units_.at(metric);
    row(metric + ".count", "samples", static_cast<double>(vals.size()));
    for (Stat s : {Stat::Min, Stat::Median, Stat::P99, Stat::Max}) {
      row(metric + "." + to_string(s), unit, stat_over(vals, s));
    }
  }
  for (const BudgetOutcome& r : evaluate_budgets()) {
    row("budget." + r.budget.name, "pass", r.pass ? 1.0 : 0.0);
  }
  return out;
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json samples = nlohmann::ordered_json::array();
  for (const Sample& s : samples_) {
    samples.push_back({{"metric", s.metric}, {"unit", s.unit}, {"value", s.value}});
  }
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (const std::string& metric : metric_order_) {
    std::vector<double> vals = values(metric);
    summary.push_back({{"metric", metric},
                       {"unit", units_.at(metric)},
                       {"count", vals.size()},
                       {"min", stat_over(vals, Stat::Min)},
                       {"median", stat_over(vals, Stat::Median)},
                       {"p99", stat_over(vals, Stat::P99)},
                       {"max", stat_over(vals, Stat::Max)}});
  }
  nlohmann::ordered_json budgets = nlohmann::ordered_json::array();
  for (const BudgetOutcome& r : evaluate_budgets()) {
    budgets.push_back({{"name", r.budget.name},
                       {"metric", r.budget.metric},
                       {"stat", to_string(r.budget.stat)},
                       {"cmp", to_string(r.budget.cmp)},
                       {"threshold", r.budget.threshold},
                       {"observed", r.has_samples ? nlohmann::ordered_json(r.observed)
                                                  : nlohmann::ordered_json(nullptr)},
                       {"pass", r.pass}});
  }
  return nlohmann::ordered_json{{"scenario", scenario_},
                                {"seed", seed_},
                                {"samples", std::move(samples)},
                                {"summary", std::move(summary)},
                                {"budgets", std::move(budgets)},
                                {"all_pass", all_pass()}};
}

}  // namespace agentnet
