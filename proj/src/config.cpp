#include "capsim/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <ctime>
#include <fstream>

#include "json.hpp"

namespace capsim {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string where(const std::string& key, int line) {
  if (line > 0) return "key '" + key + "' (line " + std::to_string(line) + ")";
  return "key '" + key + "' (command-line override)";
}

double parse_double(const std::string& key, const std::string& value, int line) {
  const std::string v = trim(value);
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError("config error: " + where(key, line) +
                      ": expected a number, got '" + v + "'");
  }
  return d;
}

long long parse_int(const std::string& key, const std::string& value, int line) {
  const std::string v = trim(value);
  errno = 0;
  char* end = nullptr;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError("config error: " + where(key, line) +
                      ": expected an integer, got '" + v + "'");
  }
  return i;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value, int line) {
  const std::string v = trim(value);
  errno = 0;
  char* end = nullptr;
  const unsigned long long i = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || v[0] == '-' || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError("config error: " + where(key, line) +
                      ": expected an unsigned integer, got '" + v + "'");
  }
  return i;
}

std::vector<double> parse_list(const std::string& key, const std::string& value,
                               int line) {
  std::vector<double> out;
  std::size_t start = 0;
  const std::string v = trim(value);
  while (start <= v.size()) {
    const std::size_t comma = v.find(',', start);
    const std::string item =
        comma == std::string::npos ? v.substr(start) : v.substr(start, comma - start);
    out.push_back(parse_double(key, item, line));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

void apply_setting(SweepConfig& cfg, const std::string& key,
                   const std::string& value, int line) {
  if (key == "noise_levels") {
    cfg.noise_levels = parse_list(key, value, line);
  } else if (key == "capacity_multipliers") {
    cfg.capacity_multipliers = parse_list(key, value, line);
  } else if (key == "replications") {
    cfg.replications = static_cast<int>(parse_int(key, value, line));
  } else if (key == "base_width") {
    cfg.base_width = static_cast<int>(parse_int(key, value, line));
  } else if (key == "master_seed") {
    cfg.master_seed = parse_u64(key, value, line);
  } else if (key == "lr") {
    cfg.train.lr = parse_double(key, value, line);
  } else if (key == "convergence_window") {
    cfg.train.convergence_window = parse_int(key, value, line);
  } else if (key == "convergence_tol") {
    cfg.train.convergence_tol = parse_double(key, value, line);
  } else if (key == "max_epochs") {
    cfg.train.max_epochs = parse_int(key, value, line);
  } else if (key == "probe_every") {
    cfg.train.probe_every = parse_int(key, value, line);
  } else if (key == "rule_nonlinearity") {
    const std::string v = trim(value);
    if (v == "linear") {
      cfg.rule_nonlinearity = RuleNonlinearity::kLinear;
    } else if (v == "tanh") {
      cfg.rule_nonlinearity = RuleNonlinearity::kTanh;
    } else {
      throw ConfigError("config error: " + where(key, line) +
                        ": expected 'linear' or 'tanh', got '" + v + "'");
    }
  } else {
    throw ConfigError("config error: unknown " + where(key, line));
  }
}

SweepConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error: cannot open '" + path + "'");
  SweepConfig cfg;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string stripped = trim(raw);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config error: line " + std::to_string(line) +
                        ": expected key=value, got '" + stripped + "'");
    }
    apply_setting(cfg, trim(stripped.substr(0, eq)), stripped.substr(eq + 1), line);
  }
  return cfg;
}

void apply_override(SweepConfig& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("config error: override '" + assignment +
                      "' is not of the form key=value");
  }
  apply_setting(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1), 0);
}

void validate_config(const SweepConfig& cfg) {
  if (cfg.noise_levels.empty()) {
    throw ConfigError("config error: key 'noise_levels': must not be empty");
  }
  for (double n : cfg.noise_levels) {
    if (!(n >= 0.0 && n <= 1.0)) {
      throw ConfigError("config error: key 'noise_levels': value " +
                        std::to_string(n) + " outside [0, 1]");
    }
  }
  if (cfg.capacity_multipliers.empty()) {
    throw ConfigError("config error: key 'capacity_multipliers': must not be empty");
  }
  for (double m : cfg.capacity_multipliers) {
    if (!(m > 0.0)) {
      throw ConfigError("config error: key 'capacity_multipliers': value " +
                        std::to_string(m) + " must be positive");
    }
  }
  if (cfg.replications < 1) {
    throw ConfigError("config error: key 'replications': must be at least 1");
  }
  if (cfg.base_width < 1) {
    throw ConfigError("config error: key 'base_width': must be at least 1");
  }
  if (!(cfg.train.lr > 0.0)) {
    throw ConfigError("config error: key 'lr': must be positive");
  }
  if (cfg.train.convergence_window < 1) {
    throw ConfigError("config error: key 'convergence_window': must be at least 1");
  }
  if (!(cfg.train.convergence_tol > 0.0)) {
    throw ConfigError("config error: key 'convergence_tol': must be positive");
  }
  if (cfg.train.max_epochs < 1) {
    throw ConfigError("config error: key 'max_epochs': must be at least 1");
  }
  if (cfg.train.max_epochs < cfg.train.convergence_window) {
    throw ConfigError(
        "config error: key 'max_epochs': must be at least convergence_window");
  }
  if (cfg.train.probe_every < 1) {
    throw ConfigError("config error: key 'probe_every': must be at least 1");
  }
}

namespace {

nlohmann::json config_object(const SweepConfig& cfg) {
  nlohmann::json j;
  j["noise_levels"] = cfg.noise_levels;
  j["capacity_multipliers"] = cfg.capacity_multipliers;
  j["replications"] = cfg.replications;
  j["base_width"] = cfg.base_width;
  j["master_seed"] = cfg.master_seed;
  j["lr"] = cfg.train.lr;
  j["convergence_window"] = cfg.train.convergence_window;
  j["convergence_tol"] = cfg.train.convergence_tol;
  j["max_epochs"] = cfg.train.max_epochs;
  j["probe_every"] = cfg.train.probe_every;
  j["rule_nonlinearity"] =
      cfg.rule_nonlinearity == RuleNonlinearity::kTanh ? "tanh" : "linear";
  return j;
}

}  // namespace

std::string config_json(const SweepConfig& cfg, int indent) {
  return config_object(cfg).dump(indent);
}

std::string manifest_json(const SweepConfig& cfg, const std::string& command,
                          int threads, const std::vector<std::string>& outputs) {
  nlohmann::json j;
  j["command"] = command;
  j["threads"] = threads;
  j["config"] = config_object(cfg);
  j["outputs"] = outputs;

  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  j["generated_at"] = stamp;
  return j.dump(2) + "\n";
}

}  // namespace capsim
