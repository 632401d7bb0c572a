#include <Eigen/Dense>

#include <gwrw/trap.hpp>

#include "common.hpp"

namespace gwrw::harness::detail {

namespace {
std::vector<double> finite_only(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v)
    if (std::isfinite(x)) out.push_back(x);
  return out;
}

std::vector<double> scaled(const std::vector<double>& v, double s) {
  std::vector<double> out(v);
  for (auto& x : out) x /= s;
  return out;
}
}  // namespace

ResultTable run_scaling(const ExperimentConfig& c) {
  ResultTable t;
  t.suite = "scaling";
  t.citation = "log-scaling of hitting times: ln Delta_n/ln n -> 1/gamma";
  fill_metadata(t, c, c.beta);
  const auto& P = c.scaling;
  const double gamma = derive_params(law_of(c), c.beta).gamma;
  std::vector<double> ln_n, ln_med;
  bool medians_valid = true;
  for (auto n : P.n) {
    const auto& s = hitting_sample(c, n, P.replicas, P.cap);
    std::vector<double> logs;
    for (double d : s.delta) logs.push_back(std::log(d));
    const auto m = median_ci(logs, P.bootstrap, derive_seed(seed_for(c, Purpose::Bootstrap), std::uint64_t(n)));
    const double nn = double(n);
    t.add("median_log_delta", {{"n", nn}}, m.value, m.lo, m.hi);
    t.add("log_ratio", {{"n", nn}}, m.value / std::log(nn));
    t.add("median_rescaled_delta", {{"n", nn}}, std::exp(m.value) / s.scale);
    t.add("censored_fraction", {{"n", nn}, {"cap", P.cap}}, double(s.censored) / double(s.delta.size()));
    medians_valid &= std::isfinite(m.value) && 2 * s.censored < s.delta.size();
    ln_n.push_back(std::log(nn));
    ln_med.push_back(m.value);
  }
  const auto fit = stats::linear_fit(ln_n, ln_med);
  t.add("slope", {}, fit.slope, fit.slope - 1.96 * fit.slope_se, fit.slope + 1.96 * fit.slope_se);
  t.add("inverse_gamma", {}, 1.0 / gamma);
  const bool ok = medians_valid && std::abs(fit.slope - 1.0 / gamma) <= P.slope_tol;
  t.check("slope_within_tolerance", ok,
          "slope " + format_double(fit.slope) + " vs 1/gamma " + format_double(1.0 / gamma) + " +- " +
              format_double(P.slope_tol));
  return t;
}

ResultTable run_subsequence(const ExperimentConfig& c) {
  ResultTable t;
  t.suite = "subsequence";
  t.citation = "Delta_n/n^{1/gamma} converges in law along n_lambda(k) = floor(lambda f'(q)^{-k})";
  fill_metadata(t, c, c.beta);
  const auto& P = c.subsequence;
  const double fp = derive_params(law_of(c), c.beta).fprime_q;
  std::vector<std::vector<double>> laws;
  std::vector<std::int64_t> ns;
  for (int k = P.k_min; k <= P.k_max; ++k) {
    const auto n = std::int64_t(std::floor(P.lambda * std::pow(fp, -k) + 1e-9));
    const auto& s = hitting_sample(c, n, P.replicas, P.cap);
    laws.push_back(scaled(s.delta, s.scale));
    ns.push_back(n);
    const auto m = median_ci(laws.back(), 200, derive_seed(seed_for(c, Purpose::Bootstrap), std::uint64_t(n)));
    t.add("median_rescaled_delta", {{"k", double(k)}, {"n", double(n)}}, m.value, m.lo, m.hi);
    t.add("censored_fraction", {{"k", double(k)}, {"n", double(n)}}, double(s.censored) / double(s.delta.size()));
    for (double p : {0.1, 0.25, 0.75, 0.9})
      t.add("quantile_rescaled_delta", {{"k", double(k)}, {"p", p}}, stats::quantile(laws.back(), p));
  }
  std::vector<double> ks, floor;
  for (std::size_t i = 1; i < laws.size(); ++i) {
    ks.push_back(stats::ks_two_sample(laws[i - 1], laws[i]).D);
    floor.push_back(ks_critical(laws[i - 1].size(), laws[i].size()));
    t.add("ks_consecutive", {{"k", double(P.k_min + int(i))}, {"n", double(ns[i])}}, ks.back(), 0, floor.back());
  }
  if (ks.empty()) return t;
  t.check("ks_nonincreasing", nonincreasing_to_floor(ks, floor),
          "KS " + describe(ks) + ", noise floor " + format_double(floor.back()));
  t.check("final_ks_below", ks.back() < P.final_ks,
          "final KS " + format_double(ks.back()) + " < " + format_double(P.final_ks));
  return t;
}

namespace {

// E_δ[T_δ^+] from the hitting-time linear system on the network.
double brute_force_return_time(const Tree& T, const std::vector<double>& up, int delta) {
  const int n = int(T.size());
  std::vector<std::vector<std::pair<int, double>>> nb(std::size_t(n), std::vector<std::pair<int, double>>{});
  for (int v = 0; v < n; ++v)
    if (T.parent[std::size_t(v)] >= 0) {
      nb[std::size_t(v)].push_back({T.parent[std::size_t(v)], up[std::size_t(v)]});
      nb[std::size_t(T.parent[std::size_t(v)])].push_back({v, up[std::size_t(v)]});
    }
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Ones(n);
  b(delta) = 0;
  for (int v = 0; v < n; ++v) {
    if (v == delta) continue;
    double tot = 0;
    for (auto [w, cw] : nb[std::size_t(v)]) tot += cw;
    for (auto [w, cw] : nb[std::size_t(v)]) A(v, w) -= cw / tot;
  }
  for (auto [w, cw] : nb[std::size_t(delta)]) A(delta, w) = 0;
  const Eigen::VectorXd h = A.partialPivLu().solve(b);
  double tot = 0, s = 0;
  for (auto [w, cw] : nb[std::size_t(delta)]) {
    tot += cw;
    s += cw * (1.0 + h(w));
  }
  return s / tot;
}

}  // namespace

ResultTable run_trap_time(const ExperimentConfig& c) {
  ResultTable t;
  t.suite = "trap-time";
  t.citation = "time outside big traps is negligible; excursion times inside a trap";
  fill_metadata(t, c, c.beta);
  const auto model = env_model(c, c.beta);
  const double beta = c.beta;

  // Time outside big traps.
  std::vector<double> meds;
  for (auto n : c.scaling.n) {
    const auto& s = hitting_sample(c, n, c.scaling.replicas, c.scaling.cap);
    const auto m = median_ci(scaled(s.trap_free, s.scale), 200,
                             derive_seed(seed_for(c, Purpose::Bootstrap), 0x1000 + std::uint64_t(n)));
    t.add("median_rescaled_trap_free", {{"n", double(n)}}, m.value, m.lo, m.hi);
    t.add("median_chi_share", {{"n", double(n)}}, stats::median(finite_only(s.chi_share)));
    double met = 0;
    for (double x : s.chi_share) met += x > 0;
    t.add("fraction_in_big_trap", {{"n", double(n)}}, met / double(s.chi_share.size()));
    t.add("h_n", {{"n", double(n)}}, big_trap_threshold(double(n), c.epsilon, model->params.fprime_q));
    t.add("median_rescaled_delta", {{"n", double(n)}}, stats::median(scaled(s.delta, s.scale)));
    meds.push_back(m.value);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < meds.size(); ++i) decreasing &= meds[i] < meds[i - 1];
  t.check("trap_time_dominance", decreasing, "median (Delta - chi)/n^{1/gamma}: " + describe(meds));

  // Mean return time identity on sampled traps.
  const TrapModel M(model->h, beta, 60);
  const auto& TP = c.trap_time;
  double worst_exact = 0;
  int within = 0;
  for (int k = 0; k < TP.traps; ++k) {
    Stream rng(seed_for(c, Purpose::Traps), std::uint64_t(k));
    Trap trap;
    do {
      const int H = 1 + std::min(TP.max_height - 1, int(rng.uniform() * TP.max_height));
      trap = geiger_tree(M, H, rng);
    } while (int(trap.size()) > TP.max_vertices);
    const auto cond = trap_conductances(trap);
    double sum_c = 0;
    for (double x : cond) sum_c += x;
    const double identity = 2.0 * sum_c;  // c(δ, parent δ) = 1
    const double brute = brute_force_return_time(trap.tree, cond, trap.delta());
    NetworkWalk walk(trap.tree, cond);
    double m1 = 0, m2 = 0;
    for (std::size_t e = 0; e < TP.excursions; ++e) {
      int v = trap.tree.parent[std::size_t(trap.delta())];
      double len = 1;
      while (v != trap.delta()) {
        v = walk.step(v, rng);
        ++len;
      }
      m1 += len;
      m2 += len * len;
    }
    const double N = double(TP.excursions), mean = m1 / N;
    const double se = std::sqrt(std::max(0.0, m2 / N - mean * mean) / N);
    worst_exact = std::max(worst_exact, std::abs(brute - identity) / identity);
    within += std::abs(mean - identity) <= 3 * se;
    t.add("return_time", {{"trap", double(k)}, {"H", double(trap.H)}, {"vertices", double(trap.size())}}, mean,
          mean - 3 * se, mean + 3 * se);
    t.add("return_time_identity", {{"trap", double(k)}}, identity, brute, brute);
  }
  t.check("return_time_identity_exact", worst_exact <= 1e-10,
          "max relative |linear system - 2 sum c(e)| = " + format_double(worst_exact));
  t.check("return_time_identity_mc", within == TP.traps,
          std::to_string(within) + "/" + std::to_string(TP.traps) + " traps within 3 SE");

  // Conditioned excursions two ways.
  Stream trng(seed_for(c, Purpose::Conditioned), 0);
  const Trap trap = geiger_tree(M, TP.conditioned_height, trng);
  ConditionedExcursionSampler net(trap);
  std::vector<double> rej, dir;
  Stream r1(seed_for(c, Purpose::Conditioned), 1), r2(seed_for(c, Purpose::Conditioned), 2);
  std::int64_t rejected = 0;
  for (std::size_t i = 0; i < TP.conditioned_samples; ++i) {
    rej.push_back(double(sample_excursion_rejection(trap, r1, &rejected)));
    dir.push_back(double(net(r2)));
  }
  const double ks = stats::ks_two_sample(rej, dir).D;
  const double formula = mean_excursion_time(skeleton(trap));
  const double se = stats::std_error(dir);
  t.add("conditioned_ks", {{"H", double(trap.H)}}, ks);
  t.add("conditioned_mean_rejection", {{"H", double(trap.H)}}, stats::mean(rej), stats::mean(rej) - 3 * stats::std_error(rej),
        stats::mean(rej) + 3 * stats::std_error(rej));
  t.add("conditioned_mean_network", {{"H", double(trap.H)}}, stats::mean(dir), stats::mean(dir) - 3 * se,
        stats::mean(dir) + 3 * se);
  t.add("conditioned_mean_formula", {{"H", double(trap.H)}}, formula);
  t.add("rejection_rate", {{"H", double(trap.H)}}, double(rejected) / double(rejected + std::int64_t(rej.size())));
  t.check("conditioned_two_route_ks", ks < TP.conditioned_ks,
          "KS " + format_double(ks) + " < " + format_double(TP.conditioned_ks));
  t.check("conditioned_mean", std::abs(stats::mean(dir) - formula) <= 3 * se,
          "network mean " + format_double(stats::mean(dir)) + " vs formula " + format_double(formula) + " (3 SE " +
              format_double(3 * se) + ")");
  return t;
}

}  // namespace gwrw::harness::detail
