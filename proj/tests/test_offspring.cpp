#include <gtest/gtest.h>

#include <cmath>

#include <gwrw/offspring.hpp>

using namespace gwrw;

namespace {
OffspringLaw reference() { return OffspringLaw::from_map({{0, 0.2}, {2, 0.8}}); }
}  // namespace

TEST(Offspring, ReferenceParameters) {
  const auto law = reference();
  const auto p = derive_params(law, 5.0);
  EXPECT_NEAR(p.q, 0.25, 1e-12);
  EXPECT_NEAR(p.m, 1.6, 1e-12);
  EXPECT_NEAR(p.fprime_q, 0.4, 1e-12);
  EXPECT_NEAR(p.beta_c, 2.5, 1e-12);
  EXPECT_NEAR(p.gamma, std::log(2.5) / std::log(5.0), 1e-12);
  EXPECT_NEAR(p.gamma, 0.56932, 1e-5);
  EXPECT_NEAR(1.0 / p.gamma, 1.7565, 1e-4);
  EXPECT_NEAR(p.p_inf, 0.8, 1e-15);
  EXPECT_NEAR(derive_params(law, 20.0).gamma, 0.30587, 1e-5);
}

TEST(Offspring, TwoRootFindersAgree) {
  for (auto m : {std::map<int, double>{{0, 0.2}, {2, 0.8}}, std::map<int, double>{{0, 0.5}, {3, 0.5}},
                 std::map<int, double>{{0, 0.1}, {1, 0.3}, {4, 0.6}}}) {
    const auto law = OffspringLaw::from_map(m);
    EXPECT_NEAR(extinction_probability(law), extinction_probability_fixed_point(law), 1e-10);
  }
  EXPECT_NEAR(extinction_probability(OffspringLaw::from_map({{0, 0.5}, {3, 0.5}})), (std::sqrt(5.0) - 1) / 2,
              1e-12);
}

TEST(Offspring, TransformedLaws) {
  const auto law = reference();
  const auto h = h_law(law, 0.25);
  EXPECT_NEAR(h[0], 0.8, 1e-12);
  EXPECT_NEAR(h[2], 0.2, 1e-12);
  EXPECT_NEAR(h.mean(), 0.4, 1e-12);
  const auto g = g_law(law, 0.25);
  EXPECT_NEAR(g[0], 0.0, 1e-15);
  EXPECT_NEAR(g[1], 0.4, 1e-12);
  EXPECT_NEAR(g[2], 0.6, 1e-12);

  const auto law2 = OffspringLaw::from_map({{0, 0.5}, {3, 0.5}});
  const auto h2 = h_law(law2, extinction_probability(law2));
  EXPECT_NEAR(h2[0], 0.80902, 1e-5);
  EXPECT_NEAR(h2[3], 0.19098, 1e-5);
}

TEST(Offspring, BudLawForcedByDegree) {
  const auto law = reference();
  const auto b1 = backbone_bud_law(law, 0.25, 1);
  ASSERT_GE(b1.pmf.size(), 2u);
  EXPECT_NEAR(b1.pmf[1], 1.0, 1e-12);
  const auto b2 = backbone_bud_law(law, 0.25, 2);
  EXPECT_NEAR(b2.pmf[0], 1.0, 1e-12);
  EXPECT_THROW(backbone_bud_law(law, 0.25, 3), Error);
}

TEST(Offspring, HeightTailOracle) {
  const auto tail = height_tail(h_law(reference(), 0.25), 60);
  EXPECT_NEAR(tail.values[0], 1.0, 1e-15);
  EXPECT_NEAR(tail.values[1], 0.2, 1e-12);
  EXPECT_NEAR(tail.values[2], 0.072, 1e-12);
  EXPECT_NEAR(tail.values[3], 0.0277632, 1e-12);
  EXPECT_NEAR(geiger_cn(tail, 0), 6.25, 1e-10);
  // Q[H ≥ n] ~ α f'(q)^n.
  EXPECT_NEAR(tail.values[50] / tail.values[49], 0.4, 1e-6);
  EXPECT_GT(tail.alpha_estimate, 0.0);
}

TEST(Offspring, TailIsMonotoneAndPositiveFarOut) {
  const auto tail = height_tail(h_law(reference(), 0.25), 200);
  for (std::size_t n = 1; n < tail.values.size(); ++n) {
    EXPECT_LT(tail.values[n], tail.values[n - 1]);
    EXPECT_LT(tail.log_values[n], tail.log_values[n - 1]);
  }
  EXPECT_TRUE(std::isfinite(tail.log_values.back()));
}

TEST(Offspring, Errors) {
  EXPECT_THROW(OffspringLaw::from_map({{0, 0.5}, {1, 0.4}}), Error);
  try {
    derive_params(OffspringLaw::from_map({{0, 0.5}, {2, 0.5}}), 5.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSupercritical);
  }
  try {
    derive_params(OffspringLaw::from_map({{1, 0.5}, {2, 0.5}}), 5.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoLeaves);
  }
  try {
    derive_params(reference(), 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSubballistic);
  }
}

TEST(Offspring, BigTrapProbabilityMatchesAsymptotic) {
  const auto law = reference();
  const auto p = derive_params(law, 5.0);
  const auto h = h_law(law, p.q);
  const auto tail = height_tail(h, 200);
  const double ca = constant_Ca(p, tail);
  EXPECT_GT(ca, 0.0);
  // P[K ≥ 30] ≈ C_a f'(q)^30.
  const auto r = big_trap_root_probability(law, p, tail, 30);
  EXPECT_NEAR(r.exact / r.asymptotic, 1.0, 1e-3);
}
