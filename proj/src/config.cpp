#include "rissbl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>

#include "rissbl/errors.hpp"

namespace rissbl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && text[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ConfigError("malformed number '" + text + "'");
  return v;
}

double parse_real(const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  return parse_number<double>(text);
}

using Setter = std::function<void(ConfigFile&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto int_field = [&t](const char* key, int ScenarioConfig::*field) {
      t[key] = [field](ConfigFile& c, const std::string& v) { c.sweep.base.*field = parse_number<int>(v); };
    };
    auto real_field = [&t](const char* key, double ScenarioConfig::*field) {
      t[key] = [field](ConfigFile& c, const std::string& v) { c.sweep.base.*field = parse_real(v); };
    };
    int_field("M1", &ScenarioConfig::M1);
    int_field("M2", &ScenarioConfig::M2);
    int_field("N1", &ScenarioConfig::N1);
    int_field("N2", &ScenarioConfig::N2);
    int_field("K", &ScenarioConfig::K);
    int_field("Q", &ScenarioConfig::Q);
    int_field("L_C", &ScenarioConfig::L_C);
    int_field("L_R_k", &ScenarioConfig::L_R_k);
    int_field("L_R", &ScenarioConfig::L_R);
    real_field("snr_db", &ScenarioConfig::snr_db);
    real_field("d_over_lambda", &ScenarioConfig::d_over_lambda);
    t["seed"] = [](ConfigFile& c, const std::string& v) { c.sweep.base.seed = parse_number<std::uint64_t>(v); };
    real_field("epsilon_fa", &ScenarioConfig::epsilon_fa);
    int_field("t_max", &ScenarioConfig::t_max);
    real_field("eta", &ScenarioConfig::eta);
    int_field("coherence_symbols", &ScenarioConfig::coherence_symbols);

    t["axis"] = [](ConfigFile& c, const std::string& v) { c.sweep.axis = parse_axis(v); };
    t["values"] = [](ConfigFile& c, const std::string& v) {
      c.sweep.values.clear();
      for (const auto& item : split_list(v)) c.sweep.values.push_back(parse_real(item));
    };
    t["trials"] = [](ConfigFile& c, const std::string& v) { c.sweep.trials = parse_number<int>(v); };
    t["estimators"] = [](ConfigFile& c, const std::string& v) { c.sweep.estimators = split_list(v); };
    t["output_path"] = [](ConfigFile& c, const std::string& v) { c.sweep.output_path = v; };
    t["omp_sparsity"] = [](ConfigFile& c, const std::string& v) { c.sweep.omp_sparsity = parse_number<int>(v); };
    t["q_values"] = [](ConfigFile& c, const std::string& v) {
      c.runtime.q_values.clear();
      for (const auto& item : split_list(v)) c.runtime.q_values.push_back(parse_number<int>(item));
    };
    t["repetitions"] = [](ConfigFile& c, const std::string& v) { c.runtime.repetitions = parse_number<int>(v); };
    t["iterations"] = [](ConfigFile& c, const std::string& v) { c.runtime.iterations = parse_number<int>(v); };
    return t;
  }();
  return table;
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = trim(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

ConfigFile parse_config(std::istream& is) {
  ConfigFile cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + " (" + key + "): " + e.what());
    }
  }
  cfg.runtime.cfg = cfg.sweep.base;
  return cfg;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  return parse_config(is);
}

std::vector<std::pair<std::string, std::string>> scenario_fields(const ScenarioConfig& c) {
  return {{"M1", std::to_string(c.M1)},
          {"M2", std::to_string(c.M2)},
          {"N1", std::to_string(c.N1)},
          {"N2", std::to_string(c.N2)},
          {"K", std::to_string(c.K)},
          {"Q", std::to_string(c.Q)},
          {"L_C", std::to_string(c.L_C)},
          {"L_R_k", std::to_string(c.L_R_k)},
          {"L_R", std::to_string(c.L_R)},
          {"snr_db", format_double(c.snr_db)},
          {"d_over_lambda", format_double(c.d_over_lambda)},
          {"seed", std::to_string(c.seed)},
          {"epsilon_fa", format_double(c.epsilon_fa)},
          {"t_max", std::to_string(c.t_max)},
          {"eta", format_double(c.eta)},
          {"coherence_symbols", std::to_string(c.coherence_symbols)}};
}

}  // namespace rissbl
