#pragma once

// Named experiment scenarios, sweeps and CSV result tables.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace greenq::bench {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Invalid configuration; `key()` names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct SweepSpec {
  std::string param;
  double from = 0.0;
  double to = 0.0;
  double step = 0.0;

  // Points from, from + step, ... up to `to` (inclusive within 1e-9 step).
  // Throws ConfigError when the range is empty.
  std::vector<double> values() const;
};

struct ScenarioConfig {
  std::string scenario;
  std::map<std::string, double> params;  // overrides of the scenario defaults
  std::optional<SweepSpec> sweep;
  std::string out;
  std::uint64_t seed = 1;
  int jobs = 1;
  bool check = false;
};

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::string>> provenance;  // written as "# key: value"
  std::vector<std::string> check_failures;                     // filled in check mode

  void add_row(std::vector<double> row);
  // UTF-8, comma separated, provenance comments first, 6 significant digits.
  std::string to_csv() const;
  void write_csv(const std::string& path) const;
};

const std::vector<std::string>& scenario_names();

// Defaults of a scenario's parameter block. Throws ConfigError for an
// unknown scenario.
std::map<std::string, double> default_params(const std::string& scenario);

// Parses the JSON config schema documented in README.md.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);

// Runs a named scenario (ignores any sweep block).
ResultTable run_scenario(const ScenarioConfig& config);

// One scenario run per sweep value, rows concatenated in sweep order.
ResultTable sweep(const ScenarioConfig& config);

}  // namespace greenq::bench
