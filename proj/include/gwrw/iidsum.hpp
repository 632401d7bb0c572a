#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "error.hpp"
#include "limitlaw.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace gwrw {

inline double toy_alpha(double beta, double a) { return -std::log1p(-a) / std::log(beta); }

// One draw of Σ_{i≤n} β^{G_i}, P[G ≥ k] = (1-a)^{k-1}. The level counts are drawn
// as a binomial cascade: #{G = k} ~ Bin(#{G ≥ k}, a).
template <class Rng>
double geometric_power_sum(double beta, double a, std::int64_t n, Rng& rng) {
  double s = 0, bk = beta;
  std::int64_t left = n;
  while (left > 0) {
    std::int64_t here = left;
    if (a < 1.0) {
      std::binomial_distribution<std::int64_t> bin(left, a);
      here = bin(rng);
    }
    s += double(here) * bk;
    left -= here;
    bk *= beta;
  }
  return s;
}

inline void check_toy(double beta, double a) {
  if (!(beta > 1)) throw Error(ErrorCode::InvalidArgument, "beta must exceed 1");
  if (!(a > 0 && a < 1)) throw Error(ErrorCode::InvalidArgument, "a must lie in (0,1)");
  if (toy_alpha(beta, a) >= 1) throw Error(ErrorCode::AlphaOutOfRange, "alpha = -log(1-a)/log(beta) must be < 1");
}

// Replica r uses Stream(seed, r).
inline std::vector<double> toy_sum(double beta, double a, std::int64_t n, std::size_t replicas,
                                   std::uint64_t seed, unsigned workers = 1) {
  check_toy(beta, a);
  return parallel_map(replicas, workers, [&](std::size_t r) {
    Stream s(seed, r);
    return geometric_power_sum(beta, a, n, s);
  });
}

// n_λ(k) = ⌊λ β^{αk}⌋.
inline std::int64_t toy_subsequence(double beta, double alpha, double lambda, int k) {
  return std::int64_t(std::floor(lambda * std::pow(beta, alpha * k) + 1e-9));
}

struct ArraySpec {
  double beta = 2, gamma = 0.5, lambda = 1;
  std::function<int(int)> f;                             // cutoff, l - f(l) → ∞
  std::function<double(int)> lambda_seq;                 // λ_l, defaults to λ
  std::function<int(int, Stream&)> x_sampler;            // X | X ≥ f(l)
  std::function<double(int, int, Stream&)> z_sampler;    // Z given (l, X)
  std::function<double(Stream&)> z_limit;                // Z_∞

  double lambda_at(int l) const { return lambda_seq ? lambda_seq(l) : lambda; }
  std::int64_t N(int l) const {
    return std::int64_t(std::floor(std::pow(lambda_at(l), gamma) * std::pow(beta, gamma * (l - f(l))) + 1e-9));
  }
  double K(int l) const { return lambda * std::pow(beta, l); }
};

// X geometric with P[X ≥ n] = β^{-γ(n-1)}, Z ~ Exp(1) (or Z ≡ 1), f(l) = l - ⌈c ln l⌉.
inline ArraySpec toy_spec(double beta, double gamma, double lambda, bool exponential_z = true, double c = 3.0) {
  ArraySpec s;
  s.beta = beta;
  s.gamma = gamma;
  s.lambda = lambda;
  s.f = [c](int l) { return l - int(std::ceil(c * std::log(double(std::max(l, 2))))); };
  const double a = 1.0 - std::pow(beta, -gamma);
  auto f = s.f;
  s.x_sampler = [f, a](int l, Stream& r) { return f(l) - 1 + int(sample_geometric(r, a)); };
  if (exponential_z) {
    s.z_sampler = [](int, int, Stream& r) { return sample_exponential(r); };
    s.z_limit = [](Stream& r) { return sample_exponential(r); };
  } else {
    s.z_sampler = [](int, int, Stream&) { return 1.0; };
    s.z_limit = [](Stream&) { return 1.0; };
  }
  return s;
}

// Samples of S_{N_l}/K_l.
inline std::vector<double> triangular_sum(const ArraySpec& spec, int l, std::size_t replicas, std::uint64_t seed,
                                          unsigned workers = 1) {
  const std::int64_t N = spec.N(l);
  const double K = spec.K(l);
  return parallel_map(replicas, workers, [&](std::size_t r) {
    Stream s(seed, r);
    double acc = 0;
    for (std::int64_t i = 0; i < N; ++i) {
      const int x = spec.x_sampler(l, s);
      acc += spec.z_sampler(l, x, s) * std::pow(spec.beta, x - l);
    }
    return acc * std::pow(spec.beta, l) / K;
  });
}

inline ZCache z_limit_cache(const ArraySpec& spec, std::size_t n, std::uint64_t seed) {
  std::vector<double> z(n);
  Stream s(seed, 0x21);
  for (auto& v : z) v = spec.z_limit(s);
  return ZCache(std::move(z), spec.beta, spec.gamma);
}

inline LevyTriple theoretical_triple(const ArraySpec& spec, const ZCache& cache, KRange kr = {}) {
  return levy_triple(cache, spec.lambda, kr);
}

// N_l/K_l² · Var(Y 1{Y ≤ τK_l}) in closed form for Z ≡ 1 and the toy X law.
inline double truncated_variance_exact(const ArraySpec& spec, int l, double tau) {
  const double b = spec.beta, g = spec.gamma, K = spec.K(l);
  const int f = spec.f(l);
  const double lim = std::log(tau * K) / std::log(b);
  const int xmax = int(std::floor(lim + 1e-9));
  if (xmax < f) return 0.0;
  // P[X = x | X ≥ f] = (1-β^{-γ}) β^{-γ(x-f)}; moments relative to β^{xmax}.
  double m1 = 0, m2 = 0;
  for (int x = f; x <= xmax; ++x) {
    const double p = (1 - std::pow(b, -g)) * std::pow(b, -g * (x - f));
    const double y = std::pow(b, x - xmax);
    m1 += p * y;
    m2 += p * y * y;
  }
  const double scale = std::pow(b, xmax) / K;
  return double(spec.N(l)) * (m2 - m1 * m1) * scale * scale;
}

inline double truncated_variance_mc(const ArraySpec& spec, int l, double tau, std::size_t samples,
                                    std::uint64_t seed) {
  const double K = spec.K(l);
  Stream s(seed, 0x7A);
  double m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const int x = spec.x_sampler(l, s);
    const double y = spec.z_sampler(l, x, s) * std::pow(spec.beta, x) / K;
    if (y <= tau) {
      m1 += y;
      m2 += y * y;
    }
  }
  m1 /= double(samples);
  m2 /= double(samples);
  return double(spec.N(l)) * (m2 - m1 * m1);
}

}  // namespace gwrw
