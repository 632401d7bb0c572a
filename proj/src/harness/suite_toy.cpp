#include <gwrw/iidsum.hpp>

#include "common.hpp"

namespace gwrw::harness::detail {

namespace {

// Samples of S_n / n^{1/α}.
std::vector<double> rescaled_toy(const ExperimentConfig& c, double beta, double a, std::int64_t n,
                                 std::uint64_t tag) {
  auto s = toy_sum(beta, a, n, c.toy.replicas, derive_seed(seed_for(c, Purpose::Toy), tag), workers(c));
  const double scale = std::pow(double(n), 1.0 / toy_alpha(beta, a));
  for (auto& v : s) v /= scale;
  return s;
}

struct Series {
  std::vector<double> consecutive;  // KS between successive on-subsequence laws
  std::vector<double> off;          // KS between on- and off-subsequence laws at the same k
  std::vector<double> floor;
};

Series toy_series(const ExperimentConfig& c, ResultTable& t, double beta) {
  const auto& P = c.toy;
  const double a = 1 - std::pow(beta, -P.alpha);
  check_toy(beta, a);
  Series s;
  std::vector<double> prev;
  for (int k = P.k_min; k <= P.k_max; ++k) {
    const auto n = toy_subsequence(beta, P.alpha, 1.0, k);
    const auto m = toy_subsequence(beta, P.alpha, std::pow(beta, P.alpha / 2), k);
    const auto tag = std::uint64_t(beta * 1000) * 1000 + std::uint64_t(k) * 2;
    const auto on = rescaled_toy(c, beta, a, n, tag);
    const auto off = rescaled_toy(c, beta, a, m, tag + 1);
    s.off.push_back(stats::ks_two_sample(on, off).D);
    s.floor.push_back(ks_critical(on.size(), off.size()));
    t.add("median_on", {{"beta", beta}, {"k", double(k)}, {"n", double(n)}}, stats::median(on));
    t.add("median_off", {{"beta", beta}, {"k", double(k)}, {"n", double(m)}}, stats::median(off));
    t.add("ks_off", {{"beta", beta}, {"k", double(k)}}, s.off.back(), 0, s.floor.back());
    if (!prev.empty()) {
      s.consecutive.push_back(stats::ks_two_sample(prev, on).D);
      t.add("ks_consecutive", {{"beta", beta}, {"k", double(k)}}, s.consecutive.back(), 0, s.floor.back());
    }
    prev = on;
  }
  return s;
}

}  // namespace

ResultTable run_toy(const ExperimentConfig& c) {
  ResultTable t;
  t.suite = "toy-iid";
  t.citation = "i.i.d. sums S_n of beta^{G_i}: convergence along n(k) = floor(lambda beta^{alpha k}) only, "
               "and the triangular-array limit with zero Gaussian part";
  fill_metadata(t, c, c.beta);
  const auto& P = c.toy;
  t.metadata["toy_beta"] = format_double(P.beta);
  t.metadata["toy_alpha"] = format_double(P.alpha);
  if (P.replicas == 0) return t;

  const auto main = toy_series(c, t, P.beta);
  bool off_all = true;
  for (double d : main.off) off_all &= d > P.off_ks;
  t.check("subsequence_converges",
          nonincreasing_to_floor(main.consecutive, main.floor) && !main.consecutive.empty() &&
              main.consecutive.back() < P.sub_ks,
          "KS(n(k), n(k+1)) " + describe(main.consecutive) + ", last < " + format_double(P.sub_ks));
  t.check("off_subsequence_floor", off_all,
          "KS(n(k), n'(k)) " + describe(main.off) + " all > " + format_double(P.off_ks));

  // The oscillation grows with β.
  std::vector<double> floors;
  for (double b : P.compare_betas) {
    const auto s = b == P.beta ? main : toy_series(c, t, b);
    double lo = INFINITY;
    for (double d : s.off) lo = std::min(lo, d);
    floors.push_back(lo);
    t.add("off_floor", {{"beta", b}}, lo);
  }
  bool increasing = true;
  for (std::size_t i = 1; i < floors.size(); ++i)
    increasing &= P.compare_betas[i] > P.compare_betas[i - 1] ? floors[i] > floors[i - 1] : floors[i] < floors[i - 1];
  t.check("floor_increases_with_beta", increasing, "min off-subsequence KS per beta " + describe(floors));

  // Truncated variance N_l/K_l² Var(Y 1{Y ≤ τK_l}) for Z ≡ 1, τ = β^{-j}.
  const double g = P.alpha;
  const auto spec = toy_spec(P.beta, g, 1.0, false);
  const int l = P.variance_level;
  std::vector<double> lx, ly;
  double ratio = 0;
  const double expo = 2 - g - P.variance_eps;
  for (int j = 1; l - j >= spec.f(l); ++j) {
    const double tau = std::pow(P.beta, -j);
    const double v = truncated_variance_exact(spec, l, tau);
    t.add("truncated_variance", {{"l", double(l)}, {"tau", tau}}, v);
    if (v <= 0) continue;
    lx.push_back(std::log(tau));
    ly.push_back(std::log(v));
    ratio = std::max(ratio, v / std::pow(tau, expo));
  }
  const auto fit = stats::linear_fit(lx, ly);
  t.add("truncated_variance_slope", {{"l", double(l)}}, fit.slope, fit.slope - 2 * fit.slope_se,
        fit.slope + 2 * fit.slope_se);
  t.add("truncated_variance_ratio", {{"exponent", expo}}, ratio);
  t.check("truncated_variance_scaling", fit.slope >= expo && ratio <= 1.0,
          "slope " + format_double(fit.slope) + " >= 2 - gamma - eps = " + format_double(expo) +
              ", max stat/tau^{2-gamma-eps} = " + format_double(ratio));

  // Monte Carlo route for the same statistic on a short-cutoff array.
  const auto mc_spec = toy_spec(2.0, 0.5, 1.0, false, 1.0);
  for (int j = 1; j <= 3; ++j) {
    const double tau = std::pow(2.0, -j);
    const double ex = truncated_variance_exact(mc_spec, 12, tau);
    const double mc = truncated_variance_mc(mc_spec, 12, tau, 200000, derive_seed(seed_for(c, Purpose::Toy), 77 + j));
    t.add("truncated_variance_mc", {{"l", 12}, {"tau", tau}}, mc, ex, ex);
  }

  // Triangular array against the inverted characteristic function.
  const auto arr = toy_spec(4.0, 0.6, 1.3, true);
  const auto ys = triangular_sum(arr, 14, 20000, derive_seed(seed_for(c, Purpose::Toy), 99), workers(c));
  const auto zc = z_limit_cache(arr, 20000, derive_seed(seed_for(c, Purpose::Toy), 98));
  const auto T = theoretical_triple(arr, zc);
  double worst = 0;
  for (double tt = -5; tt <= 5; tt += 0.25)
    worst = std::max(worst, std::abs(stats::empirical_cf(ys, tt) - char_function(T, tt)));
  t.add("array_cf_distance", {{"l", 14}}, worst);
  t.check("array_cf_two_route", worst < 0.05, "sup |ecf - cf| on [-5,5] = " + format_double(worst));
  return t;
}

}  // namespace gwrw::harness::detail
