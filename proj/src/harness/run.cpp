#include <algorithm>
#include <cstdio>
#include <mutex>

#include "common.hpp"

#ifndef GWRW_VERSION
#define GWRW_VERSION "unknown"
#endif

namespace gwrw::harness {
namespace detail {

namespace {
std::mutex cache_mu;
std::map<std::string, HitSample> hit_cache;
std::map<std::string, std::vector<WSample>> w_cache;

std::string model_key(const ExperimentConfig& c, double beta) {
  std::string k;
  for (const auto& [d, p] : c.offspring) k += std::to_string(d) + ':' + format_double(p) + ',';
  return k + "|b=" + format_double(beta) + "|e=" + format_double(c.epsilon) + "|s=" + std::to_string(c.seed);
}
}  // namespace

OffspringLaw law_of(const ExperimentConfig& c) { return OffspringLaw::from_map(c.offspring); }

std::shared_ptr<const EnvironmentModel> env_model(const ExperimentConfig& c, double beta) {
  return std::make_shared<EnvironmentModel>(law_of(c), beta);
}

unsigned workers(const ExperimentConfig& c) { return c.workers ? c.workers : default_workers(); }

void fill_metadata(ResultTable& t, const ExperimentConfig& c, double beta) {
  const auto p = derive_params(law_of(c), beta);
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(c)));
  t.metadata["version"] = GWRW_VERSION;
  t.metadata["config_hash"] = hash;
  t.metadata["seed"] = std::to_string(c.seed);
  t.metadata["beta"] = format_double(beta);
  t.metadata["epsilon"] = format_double(c.epsilon);
  t.metadata["q"] = format_double(p.q);
  t.metadata["fprime_q"] = format_double(p.fprime_q);
  t.metadata["gamma"] = format_double(p.gamma);
  t.metadata["beta_c"] = format_double(p.beta_c);
}

const HitSample& hitting_sample(const ExperimentConfig& c, std::int64_t n, std::size_t replicas, double cap) {
  const std::string key = model_key(c, c.beta) + "|n=" + std::to_string(n) + "|r=" + std::to_string(replicas) +
                          "|cap=" + format_double(cap);
  {
    std::lock_guard<std::mutex> lock(cache_mu);
    if (auto it = hit_cache.find(key); it != hit_cache.end()) return it->second;
  }
  auto model = env_model(c, c.beta);
  const double scale = std::pow(double(n), 1.0 / model->params.gamma);
  HittingOptions opt;
  opt.epsilon = c.epsilon;
  opt.step_budget = std::int64_t(std::ceil(cap * scale));
  const std::uint64_t base = derive_seed(seed_for(c, Purpose::Hitting), std::uint64_t(n));
  const auto recs = parallel_map(replicas, workers(c), [&](std::size_t r) {
    Environment env(model, derive_seed(base, 2 * r));
    return try_run_hitting(env, n, derive_seed(base, 2 * r + 1), opt);
  });
  HitSample s;
  s.n = n;
  s.scale = scale;
  for (const auto& r : recs) {
    if (!r.complete) {
      ++s.censored;
      s.delta.push_back(INFINITY);
      s.trap_free.push_back(INFINITY);
      s.chi_share.push_back(NAN);
      continue;
    }
    s.delta.push_back(double(r.delta_n));
    s.trap_free.push_back(double(r.delta_n - r.chi_n));
    s.chi_share.push_back(double(r.chi_n) / double(r.delta_n));
  }
  std::lock_guard<std::mutex> lock(cache_mu);
  return hit_cache.emplace(key, std::move(s)).first->second;
}

const std::vector<WSample>& w_sample(const ExperimentConfig& c, double beta, std::int64_t n, std::size_t replicas) {
  const std::string key = model_key(c, beta) + "|n=" + std::to_string(n) + "|r=" + std::to_string(replicas);
  {
    std::lock_guard<std::mutex> lock(cache_mu);
    if (auto it = w_cache.find(key); it != w_cache.end()) return it->second;
  }
  WOptions opt;
  opt.epsilon = std::min(c.epsilon, 0.9 * max_epsilon(derive_params(law_of(c), beta).gamma));
  auto s = sample_Wn(env_model(c, beta), n, derive_seed(seed_for(c, Purpose::WLaw), std::uint64_t(n)), replicas,
                     workers(c), opt);
  std::lock_guard<std::mutex> lock(cache_mu);
  return w_cache.emplace(key, std::move(s)).first->second;
}

std::vector<double> as_doubles(const std::vector<WSample>& s) {
  std::vector<double> v;
  v.reserve(s.size());
  for (const auto& x : s) v.push_back(double(x.W));
  return v;
}

WInfinity w_infinity(const ExperimentConfig& c, double beta) {
  WInfinity w;
  const auto& ns = c.w_law.n;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const auto& cur = w_sample(c, beta, ns[i], c.w_law.replicas);
    if (i == 0) {
      w.pmf = w_pmf(cur);
      w.n = ns[i];
      continue;
    }
    const double ks = stats::ks_two_sample(as_doubles(cur), as_doubles(w_sample(c, beta, ns[i - 1], c.w_law.replicas))).D;
    if (ks < c.w_law.converged_ks) {
      w.pmf = w_pmf(cur);
      w.n = ns[i];
      w.ks = ks;
      w.converged = true;
    }
  }
  if (!w.converged) {
    w.pmf = w_pmf(w_sample(c, beta, ns.back(), c.w_law.replicas));
    w.n = ns.back();
  }
  return w;
}

Interval median_ci(const std::vector<double>& x, int B, std::uint64_t seed) {
  Interval r{stats::median(x), 0, 0};
  std::vector<double> meds, tmp(x.size());
  Stream s(seed, 0);
  for (int b = 0; b < B; ++b) {
    for (auto& v : tmp) v = x[std::min(x.size() - 1, std::size_t(s.uniform() * double(x.size())))];
    std::nth_element(tmp.begin(), tmp.begin() + std::ptrdiff_t(tmp.size() / 2), tmp.end());
    meds.push_back(tmp[tmp.size() / 2]);
  }
  if (meds.empty()) {
    r.lo = r.hi = r.value;
  } else {
    r.lo = stats::quantile(meds, 0.025);
    r.hi = stats::quantile(meds, 0.975);
  }
  return r;
}

Interval wilson(double k, double n) {
  const double z = 1.959963984540054, p = k / n;
  const double d = 1 + z * z / n, centre = (p + z * z / (2 * n)) / d;
  const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / d;
  return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::string describe(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s + "]";
}

}  // namespace detail

void clear_caches() {
  std::lock_guard<std::mutex> lock(detail::cache_mu);
  detail::hit_cache.clear();
  detail::w_cache.clear();
}

ResultTable run_experiment(const ExperimentConfig& c) {
  validate(c);
  using namespace detail;
  if (c.experiment == "scaling") return run_scaling(c);
  if (c.experiment == "subsequence") return run_subsequence(c);
  if (c.experiment == "trap-time") return run_trap_time(c);
  if (c.experiment == "w-law") return run_w_law(c);
  if (c.experiment == "limit-law") return run_limit_law(c);
  if (c.experiment == "nonconvergence") return run_nonconvergence(c);
  if (c.experiment == "toy-iid") return run_toy(c);
  throw Error(ErrorCode::Config, "no experiment selected");
}

}  // namespace gwrw::harness
