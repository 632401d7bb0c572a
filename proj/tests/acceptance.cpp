// Acceptance gate: one PASS/FAIL line per criterion. Budgets and tolerances
// are pinned here rather than taken from the config defaults.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <gwrw/harness.hpp>
#include <gwrw/offspring.hpp>
#include <gwrw/trap.hpp>

using namespace gwrw;
using namespace gwrw::harness;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig reference(unsigned workers) {
  ExperimentConfig c;
  c.offspring = {{0, 0.2}, {2, 0.8}};
  c.beta = 5;
  c.epsilon = 0.1;
  c.seed = 20261019;
  c.workers = workers;

  c.scaling.n = {250, 500, 1000, 2000};
  c.scaling.replicas = 2000;
  c.scaling.cap = 50;
  c.scaling.slope_tol = 0.15;

  c.subsequence.lambda = 1;
  c.subsequence.k_min = 4;
  c.subsequence.k_max = 8;
  c.subsequence.replicas = 5000;
  c.subsequence.final_ks = 0.05;

  c.trap_time.traps = 50;
  c.trap_time.max_vertices = 200;
  c.trap_time.excursions = 100000;
  c.trap_time.conditioned_samples = 100000;
  c.trap_time.conditioned_ks = 0.01;

  c.w_law.n = {125, 250, 500, 1000, 2000};
  c.w_law.replicas = 10000;

  c.limit_law.x = {0.5, 1, 2, 5};
  c.limit_law.chi_n = {1000, 10000};
  c.limit_law.chi_replicas = 20000;
  c.limit_law.chi_ks = 0.05;

  c.nonconvergence.beta = 20;
  c.nonconvergence.floor_ks = 0.05;
  c.nonconvergence.same_ks = 0.03;

  c.toy.beta = 20;
  c.toy.alpha = 0.5;
  c.toy.replicas = 100000;
  c.toy.sub_ks = 0.03;
  c.toy.off_ks = 0.05;
  return c;
}

ExperimentConfig small(unsigned workers) {
  auto c = reference(workers);
  c.seed = 99;
  c.scaling.n = {60, 120};
  c.scaling.replicas = 60;
  c.subsequence.k_min = 3;
  c.subsequence.k_max = 4;
  c.subsequence.replicas = 60;
  c.trap_time.traps = 4;
  c.trap_time.excursions = 1000;
  c.trap_time.conditioned_samples = 1000;
  c.w_law.n = {40, 80};
  c.w_law.replicas = 150;
  c.limit_law.z_samples = 1000;
  c.limit_law.psi_s_samples = 100;
  c.limit_law.psi_grid = 200;
  c.limit_law.chi_n = {100, 300};
  c.limit_law.chi_replicas = 150;
  c.nonconvergence.samples = 150;
  c.nonconvergence.z_samples = 500;
  c.nonconvergence.bootstrap = 10;
  c.toy.k_max = 2;
  c.toy.replicas = 300;
  return c;
}

std::map<std::string, ResultTable> tables;

const ResultTable& suite(ExperimentConfig c, const std::string& name, const std::string& out_dir) {
  auto it = tables.find(name);
  if (it != tables.end()) return it->second;
  c.experiment = name;
  const auto t0 = std::chrono::steady_clock::now();
  auto t = run_experiment(c);
  std::fprintf(stderr, "  [%s: %.1f s]\n", name.c_str(), seconds_since(t0));
  if (!out_dir.empty()) write_outputs(t, out_dir + "/" + name);
  return tables.emplace(name, std::move(t)).first->second;
}

Verdict checks(const ResultTable& t, const std::vector<std::string>& names) {
  Verdict v{true, ""};
  for (const auto& n : names) {
    bool found = false;
    for (const auto& ch : t.checks) {
      if (ch.name != n) continue;
      found = true;
      v.pass &= ch.pass;
      if (!v.detail.empty()) v.detail += "; ";
      v.detail += (ch.pass ? "" : "[fail] ") + ch.detail;
    }
    if (!found) {
      v.pass = false;
      v.detail += "; missing check " + n;
    }
  }
  return v;
}

Verdict exact_numerics() {
  const auto t0 = std::chrono::steady_clock::now();
  const double tol = 1e-10;
  double worst = 0;
  auto cmp = [&](double got, double want) { worst = std::max(worst, std::abs(got - want)); };
  const OffspringLaw f({0.2, 0.0, 0.8});
  const double q = extinction_probability(f);
  cmp(q, 0.25);
  const auto g = g_law(f, q);
  cmp(g[1], 0.4);
  cmp(g[2], 0.6);
  const auto h = h_law(f, q);
  cmp(h[0], 0.8);
  cmp(h[1], 0.0);
  cmp(h[2], 0.2);
  const auto tail = height_tail(h, 40);
  const double t[] = {1.0, 0.2, 0.072, 0.0277632};
  for (int n = 0; n < 4; ++n) cmp(tail.values[std::size_t(n)], t[n]);
  cmp(geiger_cn(tail, 0), 0.8 / 0.128);
  cmp(geiger_cn(tail, 1), 0.128 / (0.072 - 0.0277632));
  double mass = 0;
  for (int n = 0; n <= 10; ++n) {
    double s = 0;
    for (double p : phi_psi_law(h, tail, n).prob) s += p;
    mass = std::max(mass, std::abs(s - 1));
  }
  const double secs = seconds_since(t0);
  char buf[200];
  std::snprintf(buf, sizeof buf, "max |error| %.2e, max |mass - 1| %.2e (tol %.0e), %.3f s (< 1 s)", worst, mass,
                tol, secs);
  return {worst <= tol && mass <= tol && secs < 1.0, buf};
}

Verdict determinism() {
  std::string diff;
  for (const auto& name : experiment_names()) {
    std::string out[2];
    for (unsigned w : {1u, 2u}) {
      auto c = small(w);
      c.experiment = name;
      clear_caches();
      const auto t = run_experiment(c);
      out[w - 1] = t.csv() + t.json();
    }
    if (out[0] != out[1]) diff += (diff.empty() ? "" : ", ") + name;
  }
  clear_caches();
  return {diff.empty(), diff.empty() ? "all 7 suites byte-identical for workers 1 vs 2" : "differs: " + diff};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  unsigned workers = 0;
  std::string out_dir;
  app.add_option("--workers", workers, "Worker threads (0: GWRW_WORKERS or all cores)");
  app.add_option("--out", out_dir, "Directory for the suite tables");
  CLI11_PARSE(app, argc, argv);
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  const auto c = reference(workers);

  struct Criterion {
    int id;
    const char* title;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "exact numerics", exact_numerics},
      {2, "mean return time identity",
       [&] { return checks(suite(c, "trap-time", out_dir), {"return_time_identity_exact", "return_time_identity_mc"}); }},
      {3, "conditioned excursion two-route",
       [&] { return checks(suite(c, "trap-time", out_dir), {"conditioned_two_route_ks", "conditioned_mean"}); }},
      {4, "Z_infinity two-route", [&] { return checks(suite(c, "limit-law", out_dir), {"chi_two_route"}); }},
      {5, "scaling exponent", [&] { return checks(suite(c, "scaling", out_dir), {"slope_within_tolerance"}); }},
      {6, "subsequence convergence",
       [&] { return checks(suite(c, "subsequence", out_dir), {"ks_nonincreasing", "final_ks_below"}); }},
      {7, "non-convergence signature",
       [&] { return checks(suite(c, "nonconvergence", out_dir), {"nonconvergence_floor", "same_limit_full_period"}); }},
      {8, "spectral function properties",
       [&] {
         return checks(suite(c, "limit-law", out_dir), {"spectral_monotone", "spectral_self_similar", "spectral_bounds",
                                                        "density_mass", "density_mean"});
       }},
      {9, "W_n law", [&] { return checks(suite(c, "w-law", out_dir), {"tail_dominated", "positive_mass", "ks_decreasing"}); }},
      {10, "trap-time dominance", [&] { return checks(suite(c, "trap-time", out_dir), {"trap_time_dominance"}); }},
      {11, "toy i.i.d. sums",
       [&] {
         return checks(suite(c, "toy-iid", out_dir),
                       {"subsequence_converges", "off_subsequence_floor", "truncated_variance_scaling"});
       }},
      {12, "determinism across worker counts", determinism},
  };

  int failed = 0;
  for (const auto& cr : criteria) {
    Verdict v;
    try {
      v = cr.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s  %2d %s: %s\n", v.pass ? "PASS" : "FAIL", cr.id, cr.title, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
