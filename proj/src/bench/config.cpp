#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "greenq/bench.hpp"

namespace greenq::bench {

using nlohmann::json;

std::vector<double> SweepSpec::values() const {
  if (!(step > 0.0) || !(to >= from) || !std::isfinite(from) || !std::isfinite(to))
    throw ConfigError("sweep", "empty sweep range for '" + param + "'");
  const auto count = static_cast<long>(std::floor((to - from) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(count);
  for (long i = 0; i < count; ++i) out.push_back(from + static_cast<double>(i) * step);
  return out;
}

namespace {

double number_at(const json& obj, const std::string& key, const std::string& path) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path + key, "missing key '" + path + key + "'");
  if (!it->is_number()) throw ConfigError(path + key, "'" + path + key + "' must be a number");
  return it->get<double>();
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");

  ScenarioConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "scenario") {
      if (!value.is_string()) throw ConfigError(key, "'scenario' must be a string");
      cfg.scenario = value.get<std::string>();
    } else if (key == "params") {
      if (!value.is_object()) throw ConfigError(key, "'params' must be an object");
      for (const auto& [name, v] : value.items()) {
        if (!v.is_number()) throw ConfigError("params." + name, "'params." + name + "' must be a number");
        cfg.params[name] = v.get<double>();
      }
    } else if (key == "sweep") {
      if (!value.is_object()) throw ConfigError(key, "'sweep' must be an object");
      SweepSpec s;
      const auto param = value.find("param");
      if (param == value.end() || !param->is_string())
        throw ConfigError("sweep.param", "'sweep.param' must be a string");
      s.param = param->get<std::string>();
      s.from = number_at(value, "from", "sweep.");
      s.to = number_at(value, "to", "sweep.");
      s.step = number_at(value, "step", "sweep.");
      cfg.sweep = s;
    } else if (key == "out") {
      if (!value.is_string()) throw ConfigError(key, "'out' must be a string");
      cfg.out = value.get<std::string>();
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) throw ConfigError(key, "'seed' must be an unsigned integer");
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "jobs") {
      if (!value.is_number_integer() || value.get<int>() < 1)
        throw ConfigError(key, "'jobs' must be a positive integer");
      cfg.jobs = value.get<int>();
    } else {
      throw ConfigError(key, "unknown config key '" + key + "'");
    }
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace greenq::bench
