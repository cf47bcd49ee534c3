// Acceptance suite: runs every verification gate at its stated tolerance and
// prints one pass/fail line per criterion. Exits nonzero if any fails.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stickyflow/stickyflow.hpp"

namespace {

using namespace stickyflow;

int g_failures = 0;

void line(int criterion, const std::string& what, bool pass) {
  std::printf("%s criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, what.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

bool checks_pass(const SuiteReport& rep, const std::string& label_prefix) {
  bool found = false, ok = true;
  for (const auto& c : rep.checks) {
    if (c.label.rfind(label_prefix, 0) == 0) {
      found = true;
      ok = ok && c.passed;
    }
  }
  return found && ok;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool dirs_identical(const std::string& a, const std::string& b) {
  std::map<std::string, std::string> fa, fb;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a))
    if (e.is_regular_file())
      fa[std::filesystem::relative(e.path(), a).string()] = slurp(e.path());
  for (const auto& e : std::filesystem::recursive_directory_iterator(b))
    if (e.is_regular_file())
      fb[std::filesystem::relative(e.path(), b).string()] = slurp(e.path());
  return !fa.empty() && fa == fb;
}

ExperimentConfig base_config(const std::string& out) {
  ExperimentConfig cfg;
  cfg.theta = 1.0;
  cfg.t_horizon = 1.0;
  cfg.seed = 20240817;
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

int main() {
  std::filesystem::create_directories("acceptance_out");

  // -- semigroup gates: criteria 1-4 plus the marginal law (criterion 8)
  {
    auto cfg = base_config("acceptance_out/semigroup");
    cfg.n_paths = 100000;  // marginal-law sample size
    const auto rep = run_semigroup_check(cfg);
    rep.print(std::cout);
    line(1, "semigroup conservativity: atom + integral density = 1 within 1e-8",
         checks_pass(rep, "conservativity"));
    line(2, "g_t ODE residual <= 1e-8 on x in [0,10], theta x t battery",
         checks_pass(rep, "g_t ODE residual"));
    line(3, "boundary identity (P_t f)''(0+) = 2 theta (P_t f)'(0+) within 1e-6",
         checks_pass(rep, "boundary identity"));
    line(4, "Chapman-Kolmogorov <= 1e-6 with dropped-atom control >= 1e-3",
         checks_pass(rep, "Chapman-Kolmogorov") && checks_pass(rep, "negative control"));
    line(8, "marginal law of (W+_t - T)^+: atom frequency 4 sigma + positive-part KS",
         checks_pass(rep, "marginal"));
  }

  // -- flow gates: criteria 5 and 6
  {
    auto cfg = base_config("acceptance_out/flow");
    cfg.n_paths = 4000;
    const auto rep = run_flow_check(cfg);
    rep.print(std::cout);
    line(5, "G-transform identities with boundary-violating negative control",
         checks_pass(rep, "G_") && checks_pass(rep, "negative control"));
    line(6, "flow property: map composition machine-exact, kernel composition <= 1e-8",
         checks_pass(rep, "flow of maps") && checks_pass(rep, "kernel composition"));
  }

  // -- criterion 7: Warren joint-law battery
  {
    auto cfg = base_config("acceptance_out/warren");
    cfg.n_time_steps = 2000;
    cfg.n_paths = 100000;
    const auto rep = run_warren_check(cfg);
    rep.print(std::cout);
    line(7, "Warren joint-law battery: 6 (f,g) pairs within 4 pooled SE",
         rep.all_passed());
  }

  // -- criterion 9: occupation-time law at theta in {0.5, 1}
  {
    bool ok = true;
    for (double theta : {0.5, 1.0}) {
      auto cfg = base_config("acceptance_out/occupation_theta" + csv_num(theta));
      cfg.theta = theta;
      cfg.n_time_steps = 1 << 16;
      cfg.n_paths = 10000;
      const auto rep = run_occupation_check(cfg);
      rep.print(std::cout);
      ok = ok && rep.all_passed();
    }
    line(9, "occupation-time law: two-sample KS at 2^16 steps, passing under refinement",
         ok);
  }

  // -- criterion 10: flow SDE residual convergence
  {
    auto cfg = base_config("acceptance_out/sde");
    cfg.n_paths = 1000;
    const auto rep = run_sde_residual_check(cfg);
    rep.print(std::cout);
    line(10, "flow SDE residual: RMS step-halving ratios in [1.2, 2.0]",
         rep.all_passed());
  }

  // -- criterion 11: chaos expansion study
  {
    auto cfg = base_config("acceptance_out/chaos");
    cfg.n_time_steps = 200;
    cfg.space_nodes = 200;
    cfg.n_paths = 1000;
    cfg.chaos_orders = 3;
    const auto rep = run_chaos_check(cfg);
    rep.print(std::cout);
    line(11,
         "chaos expansion: MSE improvement, mean = P_t f(0), P_t f(0) = P+_t G_f(0)",
         checks_pass(rep, "MSE") && checks_pass(rep, "ensemble mean") &&
             checks_pass(rep, "P_t f(0)"));
  }

  // -- criterion 12: bitwise reproducibility of every subcommand's outputs
  {
    bool ok = true;
    using Runner = SuiteReport (*)(const ExperimentConfig&);
    struct Entry {
      const char* name;
      Runner runner;
      std::size_t steps, paths;
    };
    const Entry entries[] = {
        {"warren", [](const ExperimentConfig& c) { return run_warren_check(c); }, 64,
         200},
        {"occupation", [](const ExperimentConfig& c) { return run_occupation_check(c); },
         1024, 200},
        {"semigroup", [](const ExperimentConfig& c) { return run_semigroup_check(c); },
         64, 500},
        {"flow", [](const ExperimentConfig& c) { return run_flow_check(c); }, 64, 500},
        {"sde", [](const ExperimentConfig& c) { return run_sde_residual_check(c); }, 64,
         50},
        {"chaos", [](const ExperimentConfig& c) { return run_chaos_check(c); }, 24,
         100}};
    for (const auto& e : entries) {
      ExperimentConfig cfg = base_config("");
      cfg.n_time_steps = e.steps;
      cfg.n_paths = e.paths;
      cfg.space_nodes = 48;
      const std::string d1 = std::string("acceptance_out/repro_") + e.name + "_a";
      const std::string d2 = std::string("acceptance_out/repro_") + e.name + "_b";
      // different thread counts must not change any output byte
      cfg.out_dir = d1;
      cfg.threads = 1;
      e.runner(cfg);
      cfg.out_dir = d2;
      cfg.threads = 2;
      e.runner(cfg);
      const bool same = dirs_identical(d1, d2);
      if (!same) std::printf("  reproducibility mismatch in %s\n", e.name);
      ok = ok && same;
    }
    line(12, "bitwise-identical CSV outputs for identical (config, seed)", ok);
  }

  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return 1;
}
