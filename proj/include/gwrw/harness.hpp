#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace gwrw::harness {

inline constexpr int kSchemaVersion = 1;

struct ScalingParams {
  std::vector<std::int64_t> n{250, 500, 1000, 2000};
  std::size_t replicas = 2000;
  double cap = 50;  // Δ censored at cap · n^{1/γ}
  double slope_tol = 0.15;
  int bootstrap = 200;
};

struct SubsequenceParams {
  double lambda = 1;
  int k_min = 4, k_max = 8;
  std::size_t replicas = 5000;
  double cap = 50;
  double final_ks = 0.05;
};

struct TrapTimeParams {
  int traps = 50;
  int max_vertices = 200;
  int max_height = 8;
  std::size_t excursions = 100000;
  int conditioned_height = 4;
  std::size_t conditioned_samples = 100000;
  double conditioned_ks = 0.01;
};

struct WLawParams {
  std::vector<std::int64_t> n{125, 250, 500, 1000, 2000};
  std::size_t replicas = 10000;
  double p_floor = 0.1;
  double converged_ks = 0.02;  // W_∞ is taken at the largest n with KS(W_n, W_{n/2}) below this
};

struct LimitLawParams {
  std::size_t z_samples = 20000;
  double s_tol = 1e-6;
  std::vector<double> x{0.5, 1, 2, 5};
  std::size_t psi_s_samples = 2000;
  int psi_grid = 3000;
  std::vector<std::int64_t> chi_n{1000, 10000};
  std::size_t chi_replicas = 20000;
  double chi_ks = 0.05;
};

struct NonconvergenceParams {
  double beta = 20;
  std::size_t samples = 20000;
  std::size_t z_samples = 20000;
  std::size_t rho_blocks = 20000;
  double floor_ks = 0.05;
  double same_ks = 0.03;
  int bootstrap = 200;
};

struct ToyParams {
  double beta = 20, alpha = 0.5;
  int k_min = 1, k_max = 6;
  std::size_t replicas = 100000;
  double sub_ks = 0.03, off_ks = 0.05;
  std::vector<double> compare_betas{5, 20};
  int variance_level = 30;
  double variance_eps = 0.1;
};

struct ExperimentConfig {
  std::map<int, double> offspring{{0, 0.2}, {2, 0.8}};
  double beta = 5;
  double epsilon = 0.1;
  std::uint64_t seed = 20261019;
  unsigned workers = 0;  // 0: GWRW_WORKERS or hardware concurrency
  std::string experiment;
  std::string out;

  ScalingParams scaling;
  SubsequenceParams subsequence;
  TrapTimeParams trap_time;
  WLawParams w_law;
  LimitLawParams limit_law;
  NonconvergenceParams nonconvergence;
  ToyParams toy;
};

const std::vector<std::string>& experiment_names();

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& toml_text);
void validate(const ExperimentConfig& c);
std::string canonical_json(const ExperimentConfig& c);
std::uint64_t config_hash(const ExperimentConfig& c);
// Overrides the replica count of `experiment`'s main loop.
void set_replicas(ExperimentConfig& c, const std::string& experiment, std::size_t replicas);

struct Row {
  std::string name;
  std::vector<std::pair<std::string, double>> params;
  double value = 0, lo = 0, hi = 0;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ResultTable {
  std::string suite;
  std::string citation;
  std::map<std::string, std::string> metadata;
  std::vector<Row> rows;
  std::vector<Check> checks;

  void add(std::string name, std::vector<std::pair<std::string, double>> params, double value) {
    rows.push_back({std::move(name), std::move(params), value, value, value});
  }
  void add(std::string name, std::vector<std::pair<std::string, double>> params, double value, double lo,
           double hi) {
    rows.push_back({std::move(name), std::move(params), value, lo, hi});
  }
  void check(std::string name, bool pass, std::string detail) {
    checks.push_back({std::move(name), pass, std::move(detail)});
  }
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  std::string csv() const;
  std::string json() const;
};

ResultTable run_experiment(const ExperimentConfig& c);

// Samples memoised across suites within one process (the scaling and
// trap-time suites share their hitting runs).
void clear_caches();

void write_outputs(const ResultTable& t, const std::string& prefix);

std::string format_double(double x);

}  // namespace gwrw::harness
