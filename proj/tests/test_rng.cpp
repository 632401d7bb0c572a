#include <gtest/gtest.h>

#include <gwrw/rng.hpp>

using namespace gwrw;

TEST(Philox, KnownAnswerVectors) {
  auto z = philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(z[0], 0x6627e8d5u);
  EXPECT_EQ(z[1], 0xe169c58du);
  EXPECT_EQ(z[2], 0xbc57ac4cu);
  EXPECT_EQ(z[3], 0x9b00dbd8u);

  auto f = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(f[0], 0x408f276du);
  EXPECT_EQ(f[1], 0x41c83b0eu);
  EXPECT_EQ(f[2], 0xa20bc7c6u);
  EXPECT_EQ(f[3], 0x6d5451fdu);

  auto p = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(p[0], 0xd16cfe09u);
  EXPECT_EQ(p[1], 0x94fdccebu);
  EXPECT_EQ(p[2], 0x5001e420u);
  EXPECT_EQ(p[3], 0x24126ea1u);
}

TEST(Stream, SequentialMatchesRandomAccess) {
  Stream s(42, 7);
  for (std::uint64_t i = 0; i < 101; ++i) EXPECT_EQ(s.uniform(), Stream(42, 7).at(i));
  EXPECT_EQ(s.consumed(), 101u);
}

TEST(Stream, DistinctIdsGiveDistinctStreams) {
  EXPECT_NE(Stream(1, 0).at(0), Stream(1, 1).at(0));
  EXPECT_NE(Stream(1, 0).at(0), Stream(2, 0).at(0));
}

TEST(Stream, UniformMoments) {
  Stream s(3, 0);
  double m = 0, m2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    m += u;
    m2 += u * u;
  }
  EXPECT_NEAR(m / n, 0.5, 0.003);
  EXPECT_NEAR(m2 / n, 1.0 / 3.0, 0.003);
}

TEST(Samplers, GeometricTail) {
  Stream s(5, 0);
  const double a = 0.3;
  int ge3 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) ge3 += sample_geometric(s, a) >= 3;
  EXPECT_NEAR(double(ge3) / n, 0.49, 0.005);  // (1-a)^2
  EXPECT_EQ(geometric_from(0.999, 1.0), 1);
}

TEST(Samplers, DiscreteInverseCdf) {
  const auto cdf = cumulative({0.2, 0.0, 0.8});
  EXPECT_EQ(discrete_from(0.1, cdf), 0);
  EXPECT_EQ(discrete_from(0.2, cdf), 2);
  EXPECT_EQ(discrete_from(0.9999999, cdf), 2);
}

TEST(DeriveSeed, Deterministic) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
}
