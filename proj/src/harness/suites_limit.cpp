#include <gwrw/limitlaw.hpp>
#include <gwrw/trap.hpp>

#include "common.hpp"

namespace gwrw::harness::detail {

ResultTable run_w_law(const ExperimentConfig& c) {
  ResultTable t;
  t.suite = "w-law";
  t.citation = "law of W_n, the number of visits from the first big-trap root into its bud, and its limit W_infinity";
  fill_metadata(t, c, c.beta);
  const auto& P = c.w_law;
  const double p_inf = derive_params(law_of(c), c.beta).p_inf;
  const double a = p_inf / 3.0;
  bool dominated = true;
  double min_lo = 1;
  std::string worst;
  std::vector<double> ks, floor;
  for (std::size_t i = 0; i < P.n.size(); ++i) {
    const auto n = P.n[i];
    const auto& s = w_sample(c, c.beta, n, P.replicas);
    const double N = double(s.size());
    std::int64_t mx = 0;
    double mean = 0;
    std::size_t incomplete = 0;
    for (const auto& x : s) {
      mx = std::max(mx, x.W);
      mean += double(x.W);
      incomplete += !x.complete;
    }
    t.add("mean_W", {{"n", double(n)}}, mean / N);
    t.add("incomplete", {{"n", double(n)}}, double(incomplete));
    for (std::int64_t k = 1; k <= mx; ++k) {
      double cnt = 0;
      for (const auto& x : s) cnt += x.W >= k;
      const auto w = wilson(cnt, N);
      const double bound = std::pow(1 - a, double(k - 1));
      t.add("tail_W", {{"n", double(n)}, {"k", double(k)}}, w.value, w.lo, w.hi);
      t.add("geometric_bound", {{"n", double(n)}, {"k", double(k)}}, bound);
      if (w.lo > bound) {
        dominated = false;
        worst = "n=" + std::to_string(n) + " k=" + std::to_string(k);
      }
      if (k == 1) min_lo = std::min(min_lo, w.lo);
    }
    if (mx == 0) min_lo = 0;
    if (i > 0) {
      const auto& prev = w_sample(c, c.beta, P.n[i - 1], P.replicas);
      ks.push_back(stats::ks_two_sample(as_doubles(prev), as_doubles(s)).D);
      floor.push_back(ks_critical(prev.size(), s.size()));
      t.add("ks_successive", {{"n", double(P.n[i - 1])}, {"n2", double(n)}}, ks.back(), 0, floor.back());
    }
  }
  t.check("tail_dominated", dominated,
          dominated ? "P[W_n >= k] <= (1 - p_inf/3)^{k-1} within one-sided 95% CI" : "violated at " + worst);
  t.check("positive_mass", min_lo >= P.p_floor,
          "min lower CI of P[W_n >= 1] = " + format_double(min_lo) + " >= " + format_double(P.p_floor));
  t.check("ks_decreasing", ks.empty() || nonincreasing_to_floor(ks, floor),
          "KS(W_n, W_2n) " + describe(ks) + ", noise floor " + (floor.empty() ? "-" : format_double(floor.back())));
  return t;
}

namespace {

struct LimitSetup {
  WInfinity w;
  std::shared_ptr<const TrapModel> traps;
  std::shared_ptr<ZInfinityModel> zmodel;
  std::shared_ptr<ZCache> cache;
  DerivedParams params;
};

LimitSetup limit_setup(const ExperimentConfig& c, double beta, std::size_t z_samples) {
  LimitSetup L;
  L.params = derive_params(law_of(c), beta);
  L.w = w_infinity(c, beta);
  L.traps = std::make_shared<TrapModel>(h_law(law_of(c), L.params.q), beta, 150);
  L.zmodel = std::make_shared<ZInfinityModel>(L.w.pmf, L.traps, L.params.gamma, c.limit_law.s_tol);
  L.cache = std::make_shared<ZCache>(
      sample_Z_many(*L.zmodel, derive_seed(seed_for(c, Purpose::ZCache), std::uint64_t(beta * 1000)), z_samples,
                    workers(c)),
      beta, L.params.gamma);
  return L;
}

void describe_w(ResultTable& t, const WInfinity& w) {
  t.add("w_infinity_n", {}, double(w.n));
  t.add("w_infinity_converged", {}, w.converged ? 1 : 0);
  for (std::size_t k = 0; k < w.pmf.size(); ++k) t.add("w_infinity_pmf", {{"k", double(k)}}, w.pmf[k]);
}

// One coupled pair (χ*/β^H, 𝒵): the same uniforms drive the walk-side
// quantities on a height-H trap and the closed form.
struct ChiPair {
  double chi, z;
};

ChiPair chi_pair(const TrapModel& M, const ZInfinityModel& zm, int H, int truncation, Stream& rng) {
  const double beta = M.beta;
  const int W = discrete_from(rng.uniform(), zm.w_cdf);
  std::vector<double> extra;
  const Trap trap = geiger_tree(M, H, rng, &extra, std::max(0, truncation - H));
  std::vector<double> lambda = trap.lambda;
  lambda.insert(lambda.end(), extra.begin(), extra.end());
  const double S = s_infinity_from_lambda(lambda, beta);
  const auto esc = escape_probabilities(H, beta);
  ConditionedExcursionSampler sampler(trap);
  const auto mom = excursion_moments(trap);
  double chi = 0, e = 0;
  for (int i = 0; i < W; ++i) {
    const double u = rng.uniform(), v = rng.uniform();
    if (u < esc.p1) {
      // G δ-visits before escaping: G - 1 completed excursions.
      const auto G = geometric_from(v, esc.p2);
      chi += sum_excursions(trap, sampler, mom, G - 1, rng);
    }
    if (u < zm.p_inf) e += exponential_from(v);
  }
  return {chi / std::pow(beta, H), S / zm.p_inf * e};
}

}  // namespace

ResultTable run_limit_law(const ExperimentConfig& c) {
  ResultTable t;
  t.suite = "limit-law";
  t.citation = "limit law Z_infinity: spectral function, its bounds, the density psi, and chi*/beta^H -> Z_infinity";
  fill_metadata(t, c, c.beta);
  const auto& P = c.limit_law;
  const auto L = limit_setup(c, c.beta, P.z_samples);
  const auto& Z = *L.cache;
  const double b = c.beta, g = L.params.gamma;
  describe_w(t, L.w);
  double sbound = 0;
  const int I = s_infinity_truncation(*L.traps, P.s_tol, &sbound);
  t.add("s_truncation", {{"tol", P.s_tol}}, double(I), 0, sbound);
  t.add("atom_at_zero", {}, Z.atom_at_zero(), 0, L.zmodel->alpha()[0]);
  for (double r : {g / 2, g, 1.0}) {
    const auto m = moment(Z, r);
    t.add("moment", {{"r", r}}, m.value, m.lo, m.hi);
  }

  // Spectral function on the shared cache.
  bool monotone = true;
  double worst_ss = 0, prev = -INFINITY;
  for (double x = 1e-3; x <= 1e3; x *= 1.2) {
    const double v = spectral_L1(Z, x).value;
    monotone &= v >= prev;
    prev = v;
    const double w = std::pow(b, g) * spectral_L1(Z, b * x).value;
    if (v != 0) worst_ss = std::max(worst_ss, std::abs(v - w) / std::abs(v));
    t.add("spectral_L1", {{"x", x}}, v);
  }
  t.check("spectral_monotone", monotone, "L_1 nondecreasing on a log grid over [1e-3, 1e3]");
  t.check("spectral_self_similar", worst_ss <= 1e-6,
          "max relative |L_1(x) - beta^gamma L_1(beta x)| = " + format_double(worst_ss));
  // −ℒ_1(x) is the mean of β^{γ k*(Z)}, k* the largest k with xβ^k < Z; CI from its sample variance.
  const auto mg = moment(Z, g);
  bool bounds = true;
  for (double x : P.x) {
    double s1 = 0, s2 = 0;
    for (double z : Z.values()) {
      double v = 0;
      if (z > 0) {
        const double kstar = std::ceil(std::log(z / x) / std::log(b)) - 1;
        v = std::pow(b, g * kstar);
      }
      s1 += v;
      s2 += v * v;
    }
    const double N = double(Z.size()), m = s1 / N, half = 1.96 * std::sqrt(std::max(0.0, s2 / N - m * m) / N);
    const double L1 = -spectral_L1(Z, x).value;
    const double lower = std::pow(b, -g) * mg.lo / std::pow(x, g), upper = mg.hi / std::pow(x, g);
    bounds &= L1 + half >= lower && L1 - half <= upper;
    t.add("minus_L1", {{"x", x}}, L1, L1 - half, L1 + half);
    t.add("bound_lower", {{"x", x}}, std::pow(b, -g) * mg.value / std::pow(x, g));
    t.add("bound_upper", {{"x", x}}, mg.value / std::pow(x, g));
    const auto tail = tail_F_infinity(Z, x);
    t.add("tail_F", {{"x", x}}, tail.value, tail.lo, tail.hi);
  }
  t.check("spectral_bounds", bounds, "beta^-gamma E[Z^gamma]/x^gamma <= -L_1(x) <= E[Z^gamma]/x^gamma within CI");
  const auto T1 = levy_triple(Z, 1.0);
  t.add("drift", {{"lambda", 1.0}}, T1.d_lambda);
  for (double tt : {0.5, 1.0, 2.0}) t.add("abs_char_function", {{"t", tt}}, std::abs(char_function(T1, tt)));

  // Density ψ.
  std::vector<double> s_sample;
  Stream srng(seed_for(c, Purpose::Psi), 0);
  for (std::size_t i = 0; i < P.psi_s_samples; ++i) s_sample.push_back(sample_S_infinity(*L.traps, P.s_tol, srng).value);
  const double top = 4 * stats::quantile(Z.values(), 0.9999);
  std::vector<double> grid;
  for (int i = 0; i <= P.psi_grid; ++i) grid.push_back(top * i / P.psi_grid);
  const auto dens = density_psi(*L.zmodel, s_sample, grid);
  for (int i = 0; i <= P.psi_grid; i += std::max(1, P.psi_grid / 100)) t.add("psi", {{"v", grid[std::size_t(i)]}}, dens.psi[std::size_t(i)]);
  t.add("psi_total_mass", {}, dens.alpha0 + dens.mass);
  t.check("density_mass", std::abs(dens.alpha0 + dens.mass - 1) <= 0.01,
          "alpha_0 + int psi = " + format_double(dens.alpha0 + dens.mass));
  const auto alpha = L.zmodel->alpha();
  double eb = 0;
  for (std::size_t k = 0; k < alpha.size(); ++k) eb += double(k) * alpha[k];
  const double se_psi = eb / L.zmodel->p_inf * stats::std_error(s_sample);
  const auto m1 = moment(Z, 1.0);
  const double se_mc = (m1.hi - m1.value) / 1.96;
  const double tol = 1.96 * std::sqrt(se_psi * se_psi + se_mc * se_mc);
  t.add("mean_from_psi", {}, dens.mean, dens.mean - tol, dens.mean + tol);
  t.add("mean_direct", {}, m1.value, m1.lo, m1.hi);
  t.check("density_mean", std::abs(dens.mean - m1.value) <= tol,
          "E[Z] from psi " + format_double(dens.mean) + " vs direct " + format_double(m1.value) + " (tol " +
              format_double(tol) + ")");

  // χ*(n)/β^H against 𝒵_∞.
  std::vector<double> coupled, uncoupled;
  for (auto n : P.chi_n) {
    const int H = trap_height_scale(double(n), L.params.fprime_q);
    const auto pairs = parallel_map(P.chi_replicas, workers(c), [&](std::size_t r) {
      Stream rng(derive_seed(seed_for(c, Purpose::Chi), std::uint64_t(n)), r);
      return chi_pair(*L.traps, *L.zmodel, H, I, rng);
    });
    std::vector<double> a, z;
    for (const auto& p : pairs) {
      a.push_back(p.chi);
      z.push_back(p.z);
    }
    coupled.push_back(stats::ks_two_sample(a, z).D);
    uncoupled.push_back(stats::ks_two_sample(a, Z.values()).D);
    t.add("chi_ks_coupled", {{"n", double(n)}, {"H", double(H)}}, coupled.back());
    t.add("chi_ks_independent", {{"n", double(n)}, {"H", double(H)}}, uncoupled.back(), 0,
          ks_critical(a.size(), Z.size()));
    t.add("chi_median", {{"n", double(n)}}, stats::median(a));
  }
  bool dec = true;
  for (std::size_t i = 1; i < coupled.size(); ++i) dec &= coupled[i] < coupled[i - 1];
  t.check("chi_two_route", dec && !uncoupled.empty() && uncoupled.back() < P.chi_ks,
          "coupled KS " + describe(coupled) + " decreasing; independent KS at largest n " +
              (uncoupled.empty() ? "-" : format_double(uncoupled.back())) + " < " + format_double(P.chi_ks));
  return t;
}

ResultTable run_nonconvergence(const ExperimentConfig& c) {
  ResultTable t;
  t.suite = "nonconvergence";
  const auto& P = c.nonconvergence;
  t.citation = "no limit law for Delta_n/n^{1/gamma}; subsequential limits are log-periodic, Y_{beta lambda} = Y_lambda";
  fill_metadata(t, c, P.beta);
  const auto L = limit_setup(c, P.beta, P.z_samples);
  describe_w(t, L.w);
  const double b = P.beta, g = L.params.gamma;

  // Δ_n/(ρ C_a n)^{1/γ} → Ỹ_{(ρ C_a λ)^{1/γ}} along n_λ(k): walk λ ↦ Lévy λ c λ^{1/γ}
  // with c = (ρ C_a)^{1/γ}, so the walk half period β^{γ/2} is the Lévy half period β^{1/2}.
  const auto env = env_model(c, b);
  const auto rho = rho_estimate(env, seed_for(c, Purpose::Rho), 200, P.rho_blocks, workers(c));
  const double Ca = constant_Ca(L.params, L.traps->tail);
  const double base = std::pow(rho.rho * Ca, 1 / g);
  t.add("rho", {}, rho.rho, rho.lo, rho.hi);
  t.add("C_a", {}, Ca);
  t.add("levy_lambda_of_walk_lambda_1", {}, base);

  auto sample = [&](double levy_lambda, std::uint64_t tag) {
    LimitLawSampler s(*L.cache, levy_lambda);
    return parallel_map(P.samples, workers(c), [&](std::size_t r) {
      Stream rng(derive_seed(seed_for(c, Purpose::Limit), tag), r);
      return s(rng);
    });
  };
  // Phases j/8 of one period in walk λ = β^{γ j/8}; j = 4 is the half period, j = 8 the full one.
  std::vector<std::vector<double>> y;
  for (int j = 0; j <= 8; ++j) {
    const double walk_lambda = std::pow(b, g * j / 8.0);
    y.push_back(sample(base * std::pow(b, j / 8.0), 1 + std::uint64_t(j)));
    t.add("median_limit", {{"walk_lambda", walk_lambda}}, base * stats::median(y.back()));
    if (j > 0) t.add("ks_vs_lambda_1", {{"walk_lambda", walk_lambda}}, stats::ks_two_sample(y[0], y.back()).D);
  }
  double widest = 0;
  for (int j = 0; j < 4; ++j) {
    const double d = stats::ks_two_sample(y[std::size_t(j)], y[std::size_t(j) + 4]).D;
    widest = std::max(widest, d);
    t.add("ks_half_period", {{"walk_lambda", std::pow(b, g * j / 8.0)}}, d);
  }
  t.add("ks_half_period_max", {}, widest);
  const double ks_half = stats::ks_two_sample(y[0], y[4]).D;
  const double p_half = stats::ks_bootstrap_pvalue(y[0], y[4], P.bootstrap, seed_for(c, Purpose::Bootstrap));
  const double ks_same = stats::ks_two_sample(y[0], y[8]).D;
  t.add("ks_lambda_half_period", {{"walk_lambda", std::pow(b, g / 2)}}, ks_half, 0, ks_critical(y[0].size(), y[4].size()));
  t.add("bootstrap_p_half_period", {}, p_half);
  t.add("ks_lambda_full_period", {{"walk_lambda", std::pow(b, g)}}, ks_same, 0, ks_critical(y[0].size(), y[8].size()));

  const auto T = levy_triple(*L.cache, base);
  double worst = 0;
  for (double tt = -5; tt <= 5; tt += 0.5)
    worst = std::max(worst, std::abs(stats::empirical_cf(y[0], tt) - char_function(T, tt)));
  t.add("cf_sampler_vs_formula", {{"walk_lambda", 1.0}}, worst);
  t.check("nonconvergence_floor", ks_half > P.floor_ks && p_half < 0.01,
          "KS(walk lambda = 1, beta^{gamma/2}) = " + format_double(ks_half) + " > " + format_double(P.floor_ks) +
              ", bootstrap p = " + format_double(p_half) + " (max over phases " + format_double(widest) + ")");
  t.check("same_limit_full_period", ks_same < P.same_ks,
          "KS(walk lambda = 1, beta^gamma; Levy lambda ratio beta) = " + format_double(ks_same) + " < " +
              format_double(P.same_ks));
  return t;
}

}  // namespace gwrw::harness::detail
