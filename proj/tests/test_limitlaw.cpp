#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include <gwrw/limitlaw.hpp>
#include <gwrw/stats.hpp>

using namespace gwrw;

namespace {
const double kBeta = 5.0;
const double kGamma = std::log(2.5) / std::log(5.0);

const ZInfinityModel& zmodel() {
  static const ZInfinityModel m({0.3, 0.4, 0.3},
                                std::make_shared<TrapModel>(OffspringLaw::from_map({{0, 0.8}, {2, 0.2}}), kBeta, 60),
                                kGamma, 1e-6);
  return m;
}

const ZCache& cache() {
  static const ZCache c(sample_Z_many(zmodel(), 77, 20000), kBeta, kGamma);
  return c;
}
}  // namespace

TEST(LimitLaw, AlphaIsBinomialThinning) {
  const auto a = zmodel().alpha();
  EXPECT_NEAR(a[0], 0.3 + 0.4 * 0.2 + 0.3 * 0.04, 1e-12);
  double s = 0;
  for (double x : a) s += x;
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_NEAR(cache().atom_at_zero(), a[0], 0.012);
}

TEST(LimitLaw, SpectralMonotoneAndSelfSimilar) {
  const auto& c = cache();
  double prev = -INFINITY;
  for (double x = 0.05; x < 50; x *= 1.13) {
    const double v = spectral_L1(c, x).value;
    EXPECT_LE(v, 0.0);
    EXPECT_GE(v, prev);
    prev = v;
    const double w = std::pow(kBeta, kGamma) * spectral_L1(c, kBeta * x).value;
    EXPECT_NEAR(v / w, 1.0, 1e-6);
  }
}

TEST(LimitLaw, SpectralBounds) {
  const auto& c = cache();
  const double mg = moment(c, kGamma).value;
  for (double x : {0.5, 1.0, 2.0, 5.0}) {
    const double v = -spectral_L1(c, x).value;
    EXPECT_LE(v, mg / std::pow(x, kGamma) * 1.02);
    EXPECT_GE(v, std::pow(kBeta, -kGamma) * mg / std::pow(x, kGamma) * 0.98);
  }
}

TEST(LimitLaw, LambdaScaling) {
  const auto& c = cache();
  for (double lam : {0.3, 1.0, 2.7})
    for (double x : {0.4, 3.0})
      EXPECT_NEAR(spectral_Llambda(c, lam, x).value, std::pow(lam, kGamma) * spectral_L1(c, lam * x).value, 1e-12);
}

TEST(LimitLaw, DriftAndCharacteristicFunction) {
  const auto& c = cache();
  const auto T = levy_triple(c, 1.0);
  EXPECT_GT(T.d_lambda, 0.0);
  EXPECT_NEAR(std::abs(char_function(T, 0.0) - 1.0), 0.0, 1e-12);
  for (double t : {-3.0, -0.5, 0.7, 2.0}) EXPECT_LE(std::abs(char_function(T, t)), 1.0 + 1e-12);
  // Ỹ_{βλ} has the same law as Ỹ_λ.
  const auto Tb = levy_triple(c, kBeta);
  for (double t : {0.3, 1.0, 4.0}) EXPECT_LT(std::abs(char_function(T, t) - char_function(Tb, t)), 1e-6);
}

TEST(LimitLaw, PoissonSamplerMatchesCharacteristicFunction) {
  const auto& c = cache();
  const double lam = 1.7;
  const auto T = levy_triple(c, lam);
  LimitLawSampler samp(c, lam);
  Stream rng(5, 0);
  std::vector<double> y(20000);
  for (auto& v : y) v = samp(rng);
  double worst = 0;
  for (double t = -5; t <= 5; t += 0.25) worst = std::max(worst, std::abs(stats::empirical_cf(y, t) - char_function(T, t)));
  EXPECT_LT(worst, 0.03);
}

TEST(LimitLaw, DensityIntegratesToOne) {
  Stream rng(6, 0);
  std::vector<double> s;
  for (int i = 0; i < 400; ++i) s.push_back(sample_S_infinity(*zmodel().traps, 1e-6, rng).value);
  const double top = stats::quantile(cache().values(), 0.9999) * 3;
  std::vector<double> grid;
  for (int i = 0; i <= 3000; ++i) grid.push_back(top * i / 3000.0);
  const auto d = density_psi(zmodel(), s, grid);
  EXPECT_NEAR(d.alpha0 + d.mass, 1.0, 0.01);
  const auto m = moment(cache(), 1.0);
  EXPECT_NEAR(d.mean, m.value, 3 * (m.hi - m.value) + 0.02 * m.value);
}

TEST(LimitLaw, Errors) {
  EXPECT_THROW(spectral_L1(cache(), 0.0), Error);
  EXPECT_THROW(moment(cache(), -1.0), Error);
  EXPECT_THROW(ZInfinityModel({0.5}, zmodel().traps, kGamma), Error);
}
