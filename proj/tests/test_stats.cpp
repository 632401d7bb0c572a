#include <gtest/gtest.h>

#include <gwrw/stats.hpp>

using namespace gwrw;

TEST(Stats, KsTrivialCases) {
  std::vector<double> a{1, 2, 3, 4}, b{10, 11};
  EXPECT_EQ(stats::ks_two_sample(a, a).D, 0.0);
  EXPECT_EQ(stats::ks_two_sample(a, b).D, 1.0);
  EXPECT_THROW(stats::ks_two_sample(a, {}), Error);
}

TEST(Stats, KsUniformSamples) {
  int ok = 0;
  for (int r = 0; r < 20; ++r) {
    Stream s1(r, 1), s2(r, 2);
    std::vector<double> a(10000), b(10000);
    for (auto& x : a) x = s1.uniform();
    for (auto& x : b) x = s2.uniform();
    ok += stats::ks_two_sample(a, b).D < 0.03;
  }
  EXPECT_GE(ok, 19);
}

TEST(Stats, KsTies) {
  std::vector<double> a{0, 0, 1, 1}, b{0, 1, 1, 1};
  EXPECT_NEAR(stats::ks_two_sample(a, b).D, 0.25, 1e-15);
}

TEST(Stats, KolmogorovDistribution) {
  EXPECT_NEAR(stats::kolmogorov_q(1.3581), 0.05, 1e-3);
  EXPECT_NEAR(stats::kolmogorov_q(1.6276), 0.01, 1e-3);
}

TEST(Stats, ChiSquare) {
  EXPECT_NEAR(stats::chi_square_pvalue(3.841458820694124, 1), 0.05, 1e-9);
  const auto r = stats::chi_square_gof({50, 50}, {0.5, 0.5});
  EXPECT_NEAR(r.p, 1.0, 1e-12);
}

TEST(Stats, LinearFit) {
  const auto f = stats::linear_fit({1, 2, 3, 4}, {3, 5, 7, 9});
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
}

TEST(Stats, BootstrapPValue) {
  std::vector<double> a, b;
  Stream s(1, 0);
  for (int i = 0; i < 500; ++i) a.push_back(s.uniform());
  for (int i = 0; i < 500; ++i) b.push_back(s.uniform() + 0.3);
  EXPECT_LT(stats::ks_bootstrap_pvalue(a, b, 200, 3), 0.01);
}
