#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "trap.hpp"

namespace gwrw {

struct ZInfinityModel {
  std::vector<double> w_law;  // pmf of W_∞
  std::vector<double> w_cdf;
  std::shared_ptr<const TrapModel> traps;
  double s_tol = 1e-6;
  double beta = 0, gamma = 0, p_inf = 0;

  ZInfinityModel(std::vector<double> w, std::shared_ptr<const TrapModel> t, double gamma_, double s_tol_ = 1e-6)
      : w_law(std::move(w)), traps(std::move(t)), s_tol(s_tol_), beta(traps->beta), gamma(gamma_),
        p_inf(1.0 - 1.0 / traps->beta) {
    double s = 0;
    for (double x : w_law) s += x;
    if (w_law.empty() || std::abs(s - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "w_law must sum to 1");
    w_cdf = cumulative(w_law);
  }

  // α_k = P[Bin(W_∞, p_∞) = k].
  std::vector<double> alpha() const {
    std::vector<double> a(w_law.size(), 0.0);
    for (std::size_t w = 0; w < w_law.size(); ++w)
      for (std::size_t k = 0; k <= w; ++k)
        a[k] += w_law[w] * binomial_coefficient(int(w), int(k)) * std::pow(p_inf, double(k)) *
                std::pow(1.0 - p_inf, double(w - k));
    return a;
  }
};

// 𝒵_∞ = S_∞/(1-β^{-1}) Σ_{i ≤ Bin(W_∞, p_∞)} e_i.
template <class Rng>
double sample_Z_infinity(const ZInfinityModel& m, Rng& rng) {
  const int W = discrete_from(rng.uniform(), m.w_cdf);
  const int B = sample_binomial(rng, W, m.p_inf);
  if (B == 0) return 0.0;
  const double S = sample_S_infinity(*m.traps, m.s_tol, rng).value;
  double e = 0;
  for (int i = 0; i < B; ++i) e += sample_exponential(rng);
  return S / m.p_inf * e;
}

inline std::vector<double> sample_Z_many(const ZInfinityModel& m, std::uint64_t seed, std::size_t n,
                                         unsigned workers = 1) {
  return parallel_map(n, workers, [&](std::size_t i) {
    Stream s(seed, i);
    return sample_Z_infinity(m, s);
  });
}

// Sorted sample shared by every evaluator below, so that identities such as
// monotonicity of ℒ_1 and ℒ_1(x) = β^γ ℒ_1(βx) hold exactly on it.
class ZCache {
 public:
  ZCache(std::vector<double> sample, double beta, double gamma)
      : z_(std::move(sample)), beta_(beta), gamma_(gamma) {
    if (z_.empty()) throw Error(ErrorCode::InvalidArgument, "empty Z sample");
    std::sort(z_.begin(), z_.end());
    double s = 0;
    for (double x : z_) s += x;
    mean_ = s / double(z_.size());
  }
  const std::vector<double>& values() const { return z_; }
  std::size_t size() const { return z_.size(); }
  double beta() const { return beta_; }
  double gamma() const { return gamma_; }
  double mean() const { return mean_; }

  // Empirical P[Z > x].
  double tail(double x) const {
    const auto it = std::upper_bound(z_.begin(), z_.end(), x);
    return double(z_.end() - it) / double(z_.size());
  }
  double atom_at_zero() const { return 1.0 - tail(0.0); }

 private:
  std::vector<double> z_;
  double beta_, gamma_, mean_;
};

struct Estimate {
  double value = 0, lo = 0, hi = 0;
};

// F̄_∞(x) with a Wilson 95% interval.
inline Estimate tail_F_infinity(const ZCache& c, double x) {
  const double n = double(c.size()), p = c.tail(x), z = 1.959963984540054;
  const double d = 1 + z * z / n, centre = (p + z * z / (2 * n)) / d;
  const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / d;
  return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct KRange {
  int lo = -40, hi = 40;
};

struct SpectralValue {
  double value = 0;
  double upper_remainder = 0;  // bound on the omitted k > hi terms (before the prefactor)
  double lower_remainder = 0;  // bound on the omitted k < lo terms
  KRange range;
};

// ℒ_1(x) = -(1-β^{-γ}) Σ_k β^{γk} F̄_∞(xβ^k), on the cached sample.
inline SpectralValue spectral_L1(const ZCache& c, double x, KRange kr = {}, bool widen = true) {
  if (!(x > 0)) throw Error(ErrorCode::InvalidArgument, "x must be positive");
  const double b = c.beta(), g = c.gamma();
  const double pre = 1.0 - std::pow(b, -g);
  for (;;) {
    double s = 0;
    for (int k = kr.lo; k <= kr.hi; ++k) s += std::pow(b, g * k) * c.tail(x * std::pow(b, k));
    SpectralValue v;
    v.range = kr;
    v.value = -pre * s;
    v.upper_remainder = c.mean() / x * std::pow(b, (g - 1) * (kr.hi + 1)) / (1.0 - std::pow(b, g - 1));
    v.lower_remainder = std::pow(b, g * (kr.lo - 1)) / (1.0 - std::pow(b, -g));
    if (!widen || s == 0 || (v.upper_remainder + v.lower_remainder) < 1e-4 * s || kr.hi - kr.lo > 4000)
      return v;
    kr.lo -= 20;
    kr.hi += 20;
  }
}

// ℒ_λ(x) = λ^γ ℒ_1(λx).
inline SpectralValue spectral_Llambda(const ZCache& c, double lambda, double x, KRange kr = {}) {
  if (!(lambda > 0)) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
  auto v = spectral_L1(c, lambda * x, kr);
  v.value *= std::pow(lambda, c.gamma());
  return v;
}

// d_λ = λ^{1+γ}(1-β^{-γ}) Σ_k β^{(1+γ)k} E[𝒵/((λβ^k)² + 𝒵²)].
inline double drift_d_lambda(const ZCache& c, double lambda, KRange kr = {}) {
  if (!(lambda > 0)) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
  const double b = c.beta(), g = c.gamma();
  double s = 0;
  const auto& z = c.values();
  for (int k = kr.lo; k <= kr.hi; ++k) {
    const double a = lambda * std::pow(b, k), a2 = a * a;
    double e = 0;
    for (double x : z)
      if (x > 0) e += x / (a2 + x * x);
    s += std::pow(b, (1 + g) * k) * e / double(z.size());
  }
  return std::pow(lambda, 1 + g) * (1.0 - std::pow(b, -g)) * s;
}

struct LevyTriple {
  double lambda = 1;
  double d_lambda = 0;
  KRange k_range;
  const ZCache* cache = nullptr;
  std::size_t mc_samples = 0;

  double spectral(double x) const {
    if (x < 0) return 0.0;
    return spectral_Llambda(*cache, lambda, x, k_range).value;
  }
};

inline LevyTriple levy_triple(const ZCache& c, double lambda, KRange kr = {}) {
  return {lambda, drift_d_lambda(c, lambda, kr), kr, &c, c.size()};
}

// exp(i d t + ∫ (e^{itx} - 1 - itx/(1+x²)) dℒ_λ) with the Lévy measure
// Σ_k (1-β^{-γ}) λ^γ β^{γk} · law(𝒵/(λβ^k)).
inline std::complex<double> char_function(const LevyTriple& T, double t) {
  const ZCache& c = *T.cache;
  const double b = c.beta(), g = c.gamma(), lam = T.lambda;
  const auto& z = c.values();
  double re = 0, im = 0;
  for (int k = T.k_range.lo; k <= T.k_range.hi; ++k) {
    const double w = (1.0 - std::pow(b, -g)) * std::pow(lam, g) * std::pow(b, g * k);
    const double scale = 1.0 / (lam * std::pow(b, k));
    double sr = 0, si = 0;
    for (double zz : z) {
      if (zz == 0) continue;
      const double x = zz * scale;
      sr += std::cos(t * x) - 1.0;
      si += std::sin(t * x) - t * x / (1.0 + x * x);
    }
    re += w * sr / double(z.size());
    im += w * si / double(z.size());
  }
  return std::exp(std::complex<double>(re, im + T.d_lambda * t));
}

// Direct sampler for 𝔍(d_λ, 0, ℒ_λ): since d_λ = ∫ x/(1+x²) dℒ_λ the law is the
// sum of the points of a Poisson process with intensity dℒ_λ, i.e. Poisson(w_k)
// atoms 𝒵/(λβ^k) per k. Scales with many tiny atoms (k > k_hi) are replaced by
// their mean.
class LimitLawSampler {
 public:
  LimitLawSampler(const ZCache& c, double lambda, double max_atoms_per_scale = 400.0)
      : c_(c), lambda_(lambda) {
    const double b = c.beta(), g = c.gamma(), pre = 1.0 - std::pow(b, -g);
    auto w = [&](int k) { return pre * std::pow(lambda, g) * std::pow(b, g * k); };
    k_hi_ = 0;
    while (w(k_hi_ + 1) < max_atoms_per_scale) ++k_hi_;
    while (w(k_hi_) >= max_atoms_per_scale) --k_hi_;
    k_lo_ = k_hi_;
    double tailmass = 0;
    while (true) {
      tailmass = w(k_lo_ - 1) / pre;  // Σ_{k<k_lo} w(k) = w(k_lo - 1)/(1-β^{-γ})
      if (tailmass < 1e-10) break;
      --k_lo_;
    }
    for (int k = k_lo_; k <= k_hi_; ++k) weights_.push_back(w(k));
    // Mean contribution of the scales above k_hi.
    remainder_ = 0;
    for (int k = k_hi_ + 1; k < k_hi_ + 400; ++k) remainder_ += w(k) * c.mean() / (lambda * std::pow(b, k));
  }

  template <class Rng>
  double operator()(Rng& rng) const {
    const auto& z = c_.values();
    double s = remainder_;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      std::poisson_distribution<long> pois(weights_[i]);
      const long n = pois(rng);
      const double scale = 1.0 / (lambda_ * std::pow(c_.beta(), k_lo_ + int(i)));
      for (long j = 0; j < n; ++j) {
        const std::size_t idx = std::min(z.size() - 1, std::size_t(rng.uniform() * double(z.size())));
        s += z[idx] * scale;
      }
    }
    return s;
  }

  int k_lo() const { return k_lo_; }
  int k_hi() const { return k_hi_; }
  double remainder_mean() const { return remainder_; }

 private:
  const ZCache& c_;
  double lambda_;
  int k_lo_ = 0, k_hi_ = 0;
  std::vector<double> weights_;
  double remainder_ = 0;
};

struct Density {
  std::vector<double> v, psi;
  double alpha0 = 0;
  double mass = 0;   // ∫ ψ over the grid plus the tail estimate
  double mean = 0;   // ∫ v ψ(v) dv
};

// ψ(v) = Σ_{k≥1} α_k v^{k-1}/(k-1)! E[e^{-v/S̃} S̃^{-k}], S̃ = S_∞/p_∞, averaged
// over a sample of S_∞.
inline Density density_psi(const ZInfinityModel& m, const std::vector<double>& s_sample,
                           const std::vector<double>& grid) {
  if (grid.size() < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least two points");
  Density d;
  const auto alpha = m.alpha();
  d.alpha0 = alpha[0];
  d.v = grid;
  d.psi.assign(grid.size(), 0.0);
  std::vector<double> st;
  for (double s : s_sample) st.push_back(s / m.p_inf);
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    const double v = grid[gi];
    double acc = 0;
    for (double S : st) {
      const double lS = std::log(S);
      double inner = 0;
      for (std::size_t k = 1; k < alpha.size(); ++k) {
        if (alpha[k] == 0) continue;
        const double lv = v > 0 ? (double(k) - 1) * std::log(v) : (k == 1 ? 0.0 : -INFINITY);
        inner += alpha[k] * std::exp(lv - std::lgamma(double(k)) - v / S - double(k) * lS);
      }
      acc += inner;
    }
    d.psi[gi] = acc / double(st.size());
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double h = grid[i] - grid[i - 1];
    d.mass += 0.5 * h * (d.psi[i] + d.psi[i - 1]);
    d.mean += 0.5 * h * (grid[i] * d.psi[i] + grid[i - 1] * d.psi[i - 1]);
  }
  return d;
}

// E[𝒵_∞^r] with a normal-approximation 95% interval.
inline Estimate moment(const ZCache& c, double r) {
  if (r == 0) return {1, 1, 1};
  if (!(r > 0)) throw Error(ErrorCode::InvalidArgument, "r must be positive");
  double s = 0, s2 = 0;
  for (double z : c.values()) {
    const double x = z > 0 ? std::pow(z, r) : 0.0;
    s += x;
    s2 += x * x;
  }
  const double n = double(c.size()), m = s / n, var = std::max(0.0, s2 / n - m * m);
  const double half = 1.959963984540054 * std::sqrt(var / n);
  return {m, m - half, m + half};
}

}  // namespace gwrw
