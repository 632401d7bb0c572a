#pragma once

// Counter-based random streams. Every draw is a pure function of
// (seed, stream id, counter), so replicas and vertices can be generated in
// any order and on any thread with identical results.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

namespace gwrw {

using Philox4x32Block = std::array<std::uint32_t, 4>;

// Philox4x32 with 10 rounds (Salmon et al. constants).
inline Philox4x32Block philox4x32(Philox4x32Block ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += W0;
      key[1] += W1;
    }
    const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
    ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
           std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Deterministic derivation of a child seed from a parent seed and a tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag + 0x632BE59BD9B4E019ull));
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t(hi) << 32) | lo) >> 11;
  return double(bits) * 0x1.0p-53;
}

// Stream keyed by (seed, stream id). Each counter value yields one Philox
// block, i.e. two doubles in [0,1) with 53 random bits each.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream() = default;
  Stream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t id() const { return id_; }

  Philox4x32Block block(std::uint64_t counter) const {
    return philox4x32({std::uint32_t(counter), std::uint32_t(counter >> 32), std::uint32_t(id_),
                       std::uint32_t(id_ >> 32)},
                      {std::uint32_t(seed_), std::uint32_t(seed_ >> 32)});
  }

  // Random access: the i-th uniform of the stream.
  double at(std::uint64_t i) const {
    const auto b = block(i >> 1);
    return (i & 1) ? to_unit(b[2], b[3]) : to_unit(b[0], b[1]);
  }

  double uniform() {
    if (!(pos_ & 1)) {
      buf_ = block(pos_ >> 1);
      ++pos_;
      return to_unit(buf_[0], buf_[1]);
    }
    ++pos_;
    return to_unit(buf_[2], buf_[3]);
  }

  // Uniform in (0,1), for logarithms.
  double open_uniform() {
    double u;
    do u = uniform();
    while (u == 0.0);
    return u;
  }

  std::uint64_t consumed() const { return pos_; }

  // UniformRandomBitGenerator interface.
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    const auto b = block(0x8000000000000000ull | bitpos_++);
    return (std::uint64_t(b[0]) << 32) | b[1];
  }

 private:
  std::uint64_t seed_ = 0, id_ = 0;
  std::uint64_t pos_ = 0, bitpos_ = 0;
  Philox4x32Block buf_{};
};

// Samplers by inverse CDF so that one uniform maps to one draw.

inline double exponential_from(double u) { return -std::log1p(-u); }

template <class Rng>
double sample_exponential(Rng& rng) {
  return exponential_from(rng.uniform());
}

// P[G >= k] = (1-a)^{k-1}, k >= 1.
inline std::int64_t geometric_from(double u, double a) {
  if (a >= 1.0) return 1;
  const double x = std::log1p(-u) / std::log1p(-a);
  if (!(x < 9.0e18)) return std::numeric_limits<std::int64_t>::max();
  return 1 + std::int64_t(std::floor(x));
}

template <class Rng>
std::int64_t sample_geometric(Rng& rng, double a) {
  return geometric_from(rng.uniform(), a);
}

template <class Rng>
int sample_binomial(Rng& rng, int trials, double p) {
  int s = 0;
  for (int i = 0; i < trials; ++i) s += rng.uniform() < p;
  return s;
}

template <class Rng>
double sample_normal(Rng& rng) {
  const double u1 = rng.open_uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Inverse CDF on a finite pmf; cdf must be nondecreasing with back() ~ 1.
inline int discrete_from(double u, const std::vector<double>& cdf) {
  const int n = int(cdf.size());
  for (int i = 0; i < n; ++i)
    if (u < cdf[i]) return i;
  // Round-off in the last bin: return the last index with positive mass.
  for (int i = n - 1; i > 0; --i)
    if (cdf[i] > cdf[i - 1]) return i;
  return 0;
}

inline std::vector<double> cumulative(const std::vector<double>& pmf) {
  std::vector<double> cdf(pmf.size());
  double s = 0;
  for (std::size_t i = 0; i < pmf.size(); ++i) cdf[i] = (s += pmf[i]);
  return cdf;
}

}  // namespace gwrw
