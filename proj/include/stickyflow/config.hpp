#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace stickyflow {

// Experiment configuration shared by every CLI subcommand. Config files are
// flat `key = value` lines (# comments) with keys named exactly as the fields
// below; CLI flags override file values.
struct ExperimentConfig {
  double theta = 1.0;
  double t_horizon = 1.0;
  std::size_t n_time_steps = 2000;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  double zero_detect_c = 0.01;
  double quad_tol = 1e-10;
  std::size_t space_nodes = 200;
  std::size_t chaos_orders = 3;
  unsigned threads = 0;  // 0 = hardware concurrency
  std::string out_dir = "out";

  void validate() const {
    if (!(theta > 0.0)) throw std::invalid_argument("config: theta must be > 0");
    if (!(t_horizon > 0.0)) throw std::invalid_argument("config: t_horizon must be > 0");
    if (n_time_steps == 0) throw std::invalid_argument("config: n_time_steps must be > 0");
    if (n_paths == 0) throw std::invalid_argument("config: n_paths must be > 0");
    if (!(zero_detect_c > 0.0))
      throw std::invalid_argument("config: zero_detect_c must be > 0");
    if (!(quad_tol > 0.0) || quad_tol > 1e-4)
      throw std::invalid_argument("config: quad_tol must be in (0, 1e-4]");
    if (space_nodes < 16) throw std::invalid_argument("config: space_nodes must be >= 16");
    if (chaos_orders > 3)
      throw std::invalid_argument("config: chaos_orders must be <= 3 (cost guard)");
    if (out_dir.empty()) throw std::invalid_argument("config: out_dir must be nonempty");
  }
};

inline std::map<std::string, std::string> parse_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: missing '=' at " + path + ":" +
                                  std::to_string(lineno));
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config: empty key or value at " + path + ":" +
                                  std::to_string(lineno));
    kv[key] = value;
  }
  return kv;
}

inline void apply_key_values(ExperimentConfig& cfg,
                             const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    std::istringstream is(value);
    bool ok = true;
    if (key == "theta") ok = static_cast<bool>(is >> cfg.theta);
    else if (key == "t_horizon") ok = static_cast<bool>(is >> cfg.t_horizon);
    else if (key == "n_time_steps") ok = static_cast<bool>(is >> cfg.n_time_steps);
    else if (key == "n_paths") ok = static_cast<bool>(is >> cfg.n_paths);
    else if (key == "seed") ok = static_cast<bool>(is >> cfg.seed);
    else if (key == "zero_detect_c") ok = static_cast<bool>(is >> cfg.zero_detect_c);
    else if (key == "quad_tol") ok = static_cast<bool>(is >> cfg.quad_tol);
    else if (key == "space_nodes") ok = static_cast<bool>(is >> cfg.space_nodes);
    else if (key == "chaos_orders") ok = static_cast<bool>(is >> cfg.chaos_orders);
    else if (key == "threads") ok = static_cast<bool>(is >> cfg.threads);
    else if (key == "out_dir") cfg.out_dir = value;
    else throw std::invalid_argument("config: unknown key '" + key + "'");
    if (!ok) throw std::invalid_argument("config: bad value for '" + key + "': " + value);
  }
}

inline void print_config(std::ostream& os, const ExperimentConfig& cfg) {
  os << "theta = " << cfg.theta << "\n"
     << "t_horizon = " << cfg.t_horizon << "\n"
     << "n_time_steps = " << cfg.n_time_steps << "\n"
     << "n_paths = " << cfg.n_paths << "\n"
     << "seed = " << cfg.seed << "\n"
     << "zero_detect_c = " << cfg.zero_detect_c << "\n"
     << "quad_tol = " << cfg.quad_tol << "\n"
     << "space_nodes = " << cfg.space_nodes << "\n"
     << "chaos_orders = " << cfg.chaos_orders << "\n"
     << "threads = " << cfg.threads << "\n"
     << "out_dir = " << cfg.out_dir << "\n";
}

}  // namespace stickyflow
