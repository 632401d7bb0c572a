#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <gwrw/environment.hpp>
#include <gwrw/harness.hpp>
#include <gwrw/stats.hpp>
#include <gwrw/walk.hpp>

namespace gwrw::harness::detail {

OffspringLaw law_of(const ExperimentConfig& c);
std::shared_ptr<const EnvironmentModel> env_model(const ExperimentConfig& c, double beta);
unsigned workers(const ExperimentConfig& c);
void fill_metadata(ResultTable& t, const ExperimentConfig& c, double beta);

// Stream seeds per purpose, derived from the run seed.
enum class Purpose : std::uint64_t {
  Hitting = 0x11, WLaw = 0x22, ZCache = 0x33, Psi = 0x44, Chi = 0x55, Traps = 0x66,
  Conditioned = 0x77, Bootstrap = 0x88, Limit = 0x99, Toy = 0xAA, Rho = 0xBB
};
inline std::uint64_t seed_for(const ExperimentConfig& c, Purpose p) { return derive_seed(c.seed, std::uint64_t(p)); }

struct HitSample {
  std::int64_t n = 0;
  double scale = 0;  // n^{1/γ}
  std::vector<double> delta, trap_free;  // Δ_n and Δ_n - χ(n); +inf when censored
  std::vector<double> chi_share;         // χ(n)/Δ_n
  std::size_t censored = 0;
};

// Hitting runs of the β-walk to level n with Δ censored at cap·n^{1/γ}.
const HitSample& hitting_sample(const ExperimentConfig& c, std::int64_t n, std::size_t replicas, double cap);

// W_n samples for the model at `beta`.
const std::vector<WSample>& w_sample(const ExperimentConfig& c, double beta, std::int64_t n, std::size_t replicas);

std::vector<double> as_doubles(const std::vector<WSample>& s);

struct WInfinity {
  std::vector<double> pmf;
  std::int64_t n = 0;
  double ks = 0;
  bool converged = false;
};
WInfinity w_infinity(const ExperimentConfig& c, double beta);

struct Interval {
  double value, lo, hi;
};
Interval median_ci(const std::vector<double>& x, int B, std::uint64_t seed);
Interval wilson(double successes, double n);

// 95% critical value of the two-sample KS statistic.
inline double ks_critical(std::size_t n1, std::size_t n2) {
  return 1.358 * std::sqrt(double(n1 + n2) / (double(n1) * double(n2)));
}

// Nonincreasing up to sampling noise: each value is at most the previous one or
// the noise floor, whichever is larger.
inline bool nonincreasing_to_floor(const std::vector<double>& v, const std::vector<double>& floor) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > std::max(v[i - 1], floor[i])) return false;
  return true;
}

std::string describe(const std::vector<double>& v);

ResultTable run_scaling(const ExperimentConfig& c);
ResultTable run_subsequence(const ExperimentConfig& c);
ResultTable run_trap_time(const ExperimentConfig& c);
ResultTable run_w_law(const ExperimentConfig& c);
ResultTable run_limit_law(const ExperimentConfig& c);
ResultTable run_nonconvergence(const ExperimentConfig& c);
ResultTable run_toy(const ExperimentConfig& c);

}  // namespace gwrw::harness::detail
