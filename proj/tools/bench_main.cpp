#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "agentnet/errors.hpp"
#include "agentnet/scenario.hpp"

namespace {

int run(const std::string& scenario_flag, const std::string& config_path,
        std::optional<uint64_t> seed_flag, const std::string& out_dir,
        const std::string& format) {
  agentnet::Json doc = agentnet::Json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config file: " << config_path << "\n";
      return 2;
    }
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
      return 2;
    }
    if (!doc.is_object()) {
      std::cerr << "error: config root must be a JSON object\n";
      return 2;
    }
  }
  if (!scenario_flag.empty()) doc["scenario"] = scenario_flag;
  if (seed_flag.has_value()) doc["seed"] = *seed_flag;
  if (!doc.contains("scenario")) {
    std::cerr << "error: no scenario selected (use --scenario or a config file)\n";
    return 2;
  }

  agentnet::ScenarioConfig config;
  try {
    config = agentnet::config_from_json(doc);
  } catch (const agentnet::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  agentnet::MetricsReport report = agentnet::run_scenario(config);

  std::filesystem::create_directories(out_dir);
  std::string stem = report.scenario() + "_seed" + std::to_string(report.seed());
  std::string csv = report.to_csv();
  std::string json = report.to_json().dump(2) + "\n";
  {
    std::ofstream out(std::filesystem::path(out_dir) / (stem + ".csv"));
    out << csv;
  }
  {
    std::ofstream out(std::filesystem::path(out_dir) / (stem + ".json"));
    out << json;
  }

  if (format == "json") {
    std::cout << json;
  } else {
    std::cout << csv;
  }
  for (const agentnet::BudgetOutcome& b : report.evaluate_budgets()) {
    std::cerr << (b.pass ? "[pass] " : "[FAIL] ") << b.describe() << "\n";
  }
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "agentnet-bench: deterministic registry/fabric scenarios with budget verdicts"};
  std::string scenario, config_path, out_dir = ".", format = "csv";
  std::optional<uint64_t> seed;

  std::string names;
  for (const auto& n : agentnet::scenario_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("--scenario", scenario, "Scenario to run (" + names + ")");
  app.add_option("--config", config_path, "JSON config file (flags override its fields)");
  app.add_option("--seed", seed, "Simulation seed");
  app.add_option("--out-dir", out_dir, "Directory for the CSV/JSON reports");
  app.add_option("--format", format, "Report echoed to stdout: csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  CLI11_PARSE(app, argc, argv);

  try {
    return run(scenario, config_path, seed, out_dir, format);
  } catch (const agentnet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
