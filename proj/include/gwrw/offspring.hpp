#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "error.hpp"

namespace gwrw {

// Probability vector over child counts, p[k] = P[Z = k], finite support.
class OffspringLaw {
 public:
  OffspringLaw() = default;

  explicit OffspringLaw(std::vector<double> probs) : p_(std::move(probs)) {
    while (!p_.empty() && p_.back() == 0.0) p_.pop_back();
    if (p_.empty()) throw Error(ErrorCode::InvalidLaw, "empty probability vector");
    double s = 0;
    for (std::size_t k = 0; k < p_.size(); ++k) {
      if (!(p_[k] >= 0.0) || !std::isfinite(p_[k]))
        throw Error(ErrorCode::InvalidLaw, "p_" + std::to_string(k) + " is not a probability");
      s += p_[k];
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw Error(ErrorCode::InvalidLaw, "probabilities sum to " + std::to_string(s) + ", not 1");
  }

  static OffspringLaw from_map(const std::map<int, double>& m) {
    if (m.empty()) throw Error(ErrorCode::InvalidLaw, "empty offspring map");
    if (m.begin()->first < 0) throw Error(ErrorCode::InvalidLaw, "negative child count");
    std::vector<double> v(std::size_t(m.rbegin()->first) + 1, 0.0);
    for (auto [k, pk] : m) v[std::size_t(k)] = pk;
    return OffspringLaw(std::move(v));
  }

  int max_k() const { return int(p_.size()) - 1; }
  double operator[](int k) const { return k >= 0 && k <= max_k() ? p_[std::size_t(k)] : 0.0; }
  const std::vector<double>& probs() const { return p_; }

  double mean() const {
    double m = 0;
    for (int k = 1; k <= max_k(); ++k) m += k * p_[std::size_t(k)];
    return m;
  }

  // f(z) by Horner.
  double pgf(double z) const {
    double r = 0;
    for (int k = max_k(); k >= 0; --k) r = r * z + p_[std::size_t(k)];
    return r;
  }

  double pgf_prime(double z) const {
    double r = 0;
    for (int k = max_k(); k >= 1; --k) r = r * z + k * p_[std::size_t(k)];
    return r;
  }

  // 1 - f(1 - t), accurate for small t.
  double one_minus_pgf_at_one_minus(double t) const {
    const double l = std::log1p(-t);
    double r = 0;
    for (int k = 1; k <= max_k(); ++k) r += p_[std::size_t(k)] * -std::expm1(k * l);
    return r;
  }

  std::map<int, double> to_map() const {
    std::map<int, double> m;
    for (int k = 0; k <= max_k(); ++k)
      if (p_[std::size_t(k)] > 0) m[k] = p_[std::size_t(k)];
    return m;
  }

 private:
  std::vector<double> p_;
};

inline double binomial_coefficient(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline void require_supercritical(const OffspringLaw& law) {
  if (!(law[0] > 0.0)) throw Error(ErrorCode::NoLeaves, "p_0 must be positive");
  if (!(law.mean() > 1.0))
    throw Error(ErrorCode::NotSupercritical,
                "mean " + std::to_string(law.mean()) + " must exceed 1");
}

// Smallest root of f(q) = q in (0,1) by bisection on [0, 1-eps].
inline double extinction_probability(const OffspringLaw& law) {
  require_supercritical(law);
  // f(s) - s is positive at 0, convex, and negative just below 1 when m > 1.
  double lo = 0.0, hi = 1.0;
  // Pull hi inside (q, 1) where f(s) - s < 0.
  double eps = 0.5;
  while (!(law.pgf(1.0 - eps) - (1.0 - eps) < 0.0)) {
    eps *= 0.5;
    if (eps < 1e-15) throw Error(ErrorCode::NotSupercritical, "no root below 1 found");
  }
  hi = 1.0 - eps;
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    if (law.pgf(mid) - mid > 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Fixed-point iteration q_{t+1} = f(q_t) from 0; used as an independent check.
inline double extinction_probability_fixed_point(const OffspringLaw& law, int max_iter = 100000) {
  require_supercritical(law);
  double s = 0.0;
  for (int i = 0; i < max_iter; ++i) {
    const double t = law.pgf(s);
    if (std::abs(t - s) < 1e-16) return t;
    s = t;
  }
  return s;
}

struct DerivedParams {
  double q = 0, m = 0, fprime_q = 0, beta_c = 0, beta = 0, gamma = 0, p_inf = 0;
};

inline double gamma_exponent(double fprime_q, double beta) {
  const double beta_c = 1.0 / fprime_q;
  if (!(beta > beta_c))
    throw Error(ErrorCode::NotSubballistic,
                "beta = " + std::to_string(beta) + " must exceed beta_c = " + std::to_string(beta_c));
  return std::log(beta_c) / std::log(beta);
}

inline double gamma_exponent(const DerivedParams& p) { return gamma_exponent(p.fprime_q, p.beta); }

inline DerivedParams derive_params(const OffspringLaw& law, double beta) {
  DerivedParams d;
  d.q = extinction_probability(law);
  d.m = law.mean();
  d.fprime_q = law.pgf_prime(d.q);
  d.beta_c = 1.0 / d.fprime_q;
  d.beta = beta;
  d.gamma = gamma_exponent(d.fprime_q, beta);
  d.p_inf = 1.0 - 1.0 / beta;
  return d;
}

// q_k = p_k q^{k-1}: offspring law of a trap (subcritical, mean f'(q)).
inline OffspringLaw h_law(const OffspringLaw& law, double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::InvalidArgument, "q must lie in (0,1)");
  std::vector<double> v(std::size_t(law.max_k()) + 1);
  for (int k = 0; k <= law.max_k(); ++k) v[std::size_t(k)] = law[k] * std::pow(q, k - 1);
  // Σ p_k q^{k-1} = f(q)/q = 1 up to the accuracy of q; renormalise the round-off.
  double s = 0;
  for (double x : v) s += x;
  for (double& x : v) x /= s;
  return OffspringLaw(std::move(v));
}

// g_j = Σ_{k≥j} p_k C(k,j) (1-q)^{j-1} q^{k-j}: backbone offspring law.
inline OffspringLaw g_law(const OffspringLaw& law, double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::InvalidArgument, "q must lie in (0,1)");
  std::vector<double> v(std::size_t(law.max_k()) + 1, 0.0);
  for (int j = 1; j <= law.max_k(); ++j) {
    double s = 0;
    for (int k = j; k <= law.max_k(); ++k)
      s += law[k] * binomial_coefficient(k, j) * std::pow(q, k - j);
    v[std::size_t(j)] = s * std::pow(1.0 - q, j - 1);
  }
  double s = 0;
  for (double x : v) s += x;
  for (double& x : v) x /= s;
  return OffspringLaw(std::move(v));
}

struct BudLaw {
  std::vector<double> pmf;  // pmf[i] = P[#buds = i | Z* = j]
  double normalizer = 0;    // Σ_i p_{i+j} C(i+j,j) q^i (1-q)^j = (1-q) g_j
};

inline BudLaw backbone_bud_law(const OffspringLaw& law, double q, int j) {
  if (j < 1) throw Error(ErrorCode::InvalidArgument, "backbone degree must be >= 1");
  BudLaw b;
  for (int i = 0; i + j <= law.max_k(); ++i) {
    const double w = law[i + j] * binomial_coefficient(i + j, j) * std::pow(q, i) * std::pow(1.0 - q, j);
    b.pmf.push_back(w);
    b.normalizer += w;
  }
  if (!(b.normalizer > 0.0))
    throw Error(ErrorCode::DegreeImpossible, "g_" + std::to_string(j) + " = 0");
  for (double& x : b.pmf) x /= b.normalizer;
  return b;
}

struct HeightTail {
  std::vector<double> values;      // Q[H >= n]
  std::vector<double> log_values;  // ln Q[H >= n], finite below the double range
  double alpha_estimate = 0;
  double alpha_error = 0;
  double fprime_q = 0;

  // Q[H = n].
  double point(int n) const { return values[std::size_t(n)] - values[std::size_t(n) + 1]; }
};

// Iterates t_{n+1} = 1 - h(1 - t_n) directly on the tail so that small tails
// keep full relative precision; switches to log tracking below 1e-300.
inline HeightTail height_tail(const OffspringLaw& h, int N = 200) {
  if (!(h.mean() < 1.0)) throw Error(ErrorCode::InvalidArgument, "h law must be subcritical");
  if (N < 2) throw Error(ErrorCode::InvalidArgument, "N must be at least 2");
  HeightTail r;
  r.fprime_q = h.mean();
  r.values.assign(std::size_t(N) + 1, 0.0);
  r.log_values.assign(std::size_t(N) + 1, 0.0);
  r.values[0] = 1.0;
  double t = 1.0, logt = 0.0;
  for (int n = 1; n <= N; ++n) {
    if (t > 1e-300) {
      const double next = h.one_minus_pgf_at_one_minus(t);
      logt = std::log(next);
      t = next;
    } else {
      // (1 - (1-t)^k)/t = k exactly at this magnitude, so t_{n+1}/t_n = h'(1).
      logt += std::log(h.mean());
      t = std::exp(logt);
    }
    r.values[std::size_t(n)] = t;
    r.log_values[std::size_t(n)] = logt;
  }
  const double lf = std::log(r.fprime_q);
  const double rN = std::exp(r.log_values[std::size_t(N)] - N * lf);
  const double rN1 = std::exp(r.log_values[std::size_t(N) - 1] - (N - 1) * lf);
  r.alpha_estimate = rN;
  r.alpha_error = std::abs(rN - rN1);
  return r;
}

// c_n = Q[H=n]/Q[H=n+1]; needs tail.values up to n+2.
inline double geiger_cn(const HeightTail& tail, int n) {
  if (n < 0 || std::size_t(n) + 2 >= tail.values.size())
    throw Error(ErrorCode::InvalidArgument, "n outside the computed tail");
  return tail.point(n) / tail.point(n + 1);
}

struct BigTrapProbability {
  double exact = 0;
  double asymptotic = 0;
};

// P[K_0 >= h]: probability that the root carries a trap of height >= h.
inline BigTrapProbability big_trap_root_probability(const OffspringLaw& law, const DerivedParams& p,
                                                    const HeightTail& tail, int h) {
  if (h < 1) throw Error(ErrorCode::InvalidArgument, "h must be >= 1");
  const double q = p.q;
  BigTrapProbability r;
  if (std::size_t(h) >= tail.values.size()) {
    r.exact = 0;
  } else {
    // 1 - [f(1-ηq) - f(q-ηq)]/(1-q) rewritten termwise without cancellation:
    // Σ_k p_k [(1-(1-ηq)^k) - q^k (1-(1-η)^k)] / (1-q).
    const double eta = tail.values[std::size_t(h)];
    const double la = std::log1p(-eta * q), lb = std::log1p(-eta);
    double s = 0;
    for (int k = 1; k <= law.max_k(); ++k)
      s += law[k] * (-std::expm1(k * la) - std::pow(q, k) * -std::expm1(k * lb));
    r.exact = s / (1.0 - q);
  }
  const double Ca = tail.alpha_estimate * q * (p.m - p.fprime_q) / (1.0 - q);
  r.asymptotic = Ca * std::pow(p.fprime_q, h);
  return r;
}

inline double constant_Ca(const DerivedParams& p, const HeightTail& tail) {
  return tail.alpha_estimate * p.q * (p.m - p.fprime_q) / (1.0 - p.q);
}

}  // namespace gwrw
