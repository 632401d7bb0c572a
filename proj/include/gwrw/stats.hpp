#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "error.hpp"
#include "rng.hpp"

namespace gwrw::stats {

inline double mean(const std::vector<double>& x) {
  if (x.empty()) return 0;
  return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}

inline double variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0;
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size() - 1);
}

inline double std_error(const std::vector<double>& x) {
  return x.size() < 2 ? 0.0 : std::sqrt(variance(x) / double(x.size()));
}

// Type-7 quantile.
inline double quantile(std::vector<double> x, double p) {
  if (x.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double h = (double(x.size()) - 1) * p;
  const std::size_t lo = std::size_t(std::floor(h)), hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - double(lo)) * (x[hi] - x[lo]);
}

inline double median(const std::vector<double>& x) { return quantile(x, 0.5); }

// Q_KS(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}.
inline double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double s = 0;
  for (int k = 1; k <= 100; ++k) {
    const double t = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 1.0 : -1.0) * t;
    if (t < 1e-16) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double D = 0;
  double p = 1;
};

// Two-sample statistic; ties are stepped over together.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "KS needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = double(a.size()), nb = double(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(double(i) / na - double(j) / nb));
  }
  return d;
}

inline KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  KsResult r;
  r.D = ks_statistic(a, b);
  const double ne = double(a.size()) * double(b.size()) / double(a.size() + b.size());
  const double s = std::sqrt(ne);
  r.p = kolmogorov_q((s + 0.12 + 0.11 / s) * r.D);
  return r;
}

// One-sample statistic against a continuous CDF.
template <class Cdf>
KsResult ks_one_sample(std::vector<double> x, Cdf&& F) {
  std::sort(x.begin(), x.end());
  const double n = double(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = F(x[i]);
    d = std::max({d, double(i + 1) / n - f, f - double(i) / n});
  }
  const double s = std::sqrt(n);
  return {d, kolmogorov_q((s + 0.12 + 0.11 / s) * d)};
}

// Bootstrap p-value under the pooled null.
inline double ks_bootstrap_pvalue(const std::vector<double>& a, const std::vector<double>& b, int B,
                                  std::uint64_t seed) {
  const double d0 = ks_statistic(a, b);
  std::vector<double> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  Stream rng(seed, 0xB00757);
  std::vector<double> ra(a.size()), rb(b.size());
  int hits = 0;
  auto pick = [&] { return pool[std::min(pool.size() - 1, std::size_t(rng.uniform() * double(pool.size())))]; };
  for (int r = 0; r < B; ++r) {
    for (auto& v : ra) v = pick();
    for (auto& v : rb) v = pick();
    if (ks_statistic(ra, rb) >= d0) ++hits;
  }
  return (hits + 1.0) / (B + 1.0);
}

inline double ecdf(const std::vector<double>& sorted, double x) {
  return double(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) / double(sorted.size());
}

inline std::complex<double> empirical_cf(const std::vector<double>& x, double t) {
  double re = 0, im = 0;
  for (double v : x) {
    re += std::cos(t * v);
    im += std::sin(t * v);
  }
  return {re / double(x.size()), im / double(x.size())};
}

struct Fit {
  double slope = 0, intercept = 0, slope_se = 0;
};

inline Fit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidArgument, "fit needs >= 2 points");
  const double mx = mean(x), my = mean(y);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Fit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / double(x.size() - 2) / sxx);
  }
  return f;
}

// Upper tail of χ²_k.
inline double chi_square_pvalue(double stat, int dof) {
  if (dof <= 0) throw Error(ErrorCode::InvalidArgument, "dof must be positive");
  return boost::math::gamma_q(0.5 * dof, 0.5 * stat);
}

// Pearson test of counts against probabilities; cells with expected < min_expected
// are pooled into their right neighbour.
struct ChiSquare {
  double stat = 0, p = 1;
  int dof = 0;
};

inline ChiSquare chi_square_gof(const std::vector<double>& counts, const std::vector<double>& probs,
                                double min_expected = 5) {
  double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  std::vector<double> o, e;
  double co = 0, ce = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    co += i < counts.size() ? counts[i] : 0.0;
    ce += probs[i] * n;
    if (ce >= min_expected) {
      o.push_back(co);
      e.push_back(ce);
      co = ce = 0;
    }
  }
  if (ce > 0 || co > 0) {
    if (e.empty()) {
      o.push_back(co);
      e.push_back(ce);
    } else {
      o.back() += co;
      e.back() += ce;
    }
  }
  ChiSquare r;
  for (std::size_t i = 0; i < o.size(); ++i) r.stat += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
  r.dof = int(o.size()) - 1;
  r.p = r.dof > 0 ? chi_square_pvalue(r.stat, r.dof) : 1.0;
  return r;
}

}  // namespace gwrw::stats
