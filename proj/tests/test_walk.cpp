#include <gtest/gtest.h>

#include <algorithm>
#include <memory>

#include <gwrw/stats.hpp>
#include <gwrw/walk.hpp>

using namespace gwrw;

namespace {
std::shared_ptr<const EnvironmentModel> model(double beta = 5.0) {
  return std::make_shared<EnvironmentModel>(OffspringLaw::from_map({{0, 0.2}, {2, 0.8}}), beta);
}

// Hitting time driven by the single-uniform rule only.
std::int64_t hitting_by_step(Environment& env, std::int64_t n, Stream& s) {
  WalkState st;
  while (env[st.position].depth < n) st = step(env, st, s.uniform());
  return st.steps;
}
}  // namespace

TEST(Walk, StepProbabilities) {
  auto m = model();
  Environment env(m, 3);
  env.expand(env.root());
  const Index v = env[env.root()].first_child;
  env.expand(v);
  const int k = env[v].n_children;
  ASSERT_GT(k, 0);
  Stream s(1, 0);
  int up = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    WalkState st{v, 0, 0};
    up += step(env, st, s.uniform()).position == env[v].parent;
  }
  EXPECT_NEAR(double(up) / n, 1.0 / (1.0 + 5.0 * k), 0.004);
}

TEST(Walk, DecomposedWalkerMatchesSingleUniformRule) {
  auto m = model();
  const std::int64_t n = 6;
  std::vector<double> a, b;
  for (int r = 0; r < 3000; ++r) {
    Environment e1(m, derive_seed(7, r));
    a.push_back(double(try_run_hitting(e1, n, derive_seed(8, r)).delta_n));
    Environment e2(m, derive_seed(9, r));
    Stream s(derive_seed(10, r), 0);
    b.push_back(double(hitting_by_step(e2, n, s)));
  }
  const auto ks = stats::ks_two_sample(a, b);
  EXPECT_GT(ks.p, 1e-3) << "D=" << ks.D;
  EXPECT_NEAR(stats::median(a) / stats::median(b), 1.0, 0.15);
}

TEST(Walk, InstrumentationMatchesTrajectoryPass) {
  auto m = model();
  for (int r = 0; r < 40; ++r) {
    Environment env(m, derive_seed(21, r));
    std::vector<Index> traj;
    HittingOptions opt;
    opt.trajectory = &traj;
    const auto rec = run_hitting(env, 60, derive_seed(22, r), opt);
    ASSERT_EQ(std::int64_t(traj.size()), rec.delta_n + 1);
    EXPECT_EQ(env[traj.back()].depth, 60);
    EXPECT_EQ(rec.chi_n, chi_from_trajectory(env, traj, rec.h_n));
    EXPECT_EQ(rec.delta_n_Y, embedded_backbone(env, traj, rec.delta_n).delta_n_Y);
    EXPECT_LE(rec.chi_n, rec.offbackbone_steps);
    EXPECT_LE(rec.chi_star_n, rec.chi_n);
    for (std::size_t i = 1; i < traj.size(); ++i) {
      const auto& x = env[traj[i]];
      const auto& y = env[traj[i - 1]];
      EXPECT_TRUE(x.parent == traj[i - 1] || y.parent == traj[i]);
    }
  }
}

TEST(Walk, Deterministic) {
  auto m = model();
  Environment e1(m, 5), e2(m, 5);
  const auto a = run_hitting(e1, 80, 6), b = run_hitting(e2, 80, 6);
  EXPECT_EQ(a.delta_n, b.delta_n);
  EXPECT_EQ(a.chi_n, b.chi_n);
  EXPECT_EQ(a.chi_star_n, b.chi_star_n);
}

TEST(Walk, BudgetAndEpsilonErrors) {
  auto m = model();
  Environment env(m, 5);
  HittingOptions opt;
  opt.step_budget = 10;
  EXPECT_FALSE(try_run_hitting(env, 1000, 1, opt).complete);
  try {
    run_hitting(env, 1000, 1, opt);
    FAIL();
  } catch (const BudgetExceeded& e) {
    EXPECT_EQ(e.code(), ErrorCode::BudgetExceeded);
    EXPECT_EQ(e.partial().delta_n, 10);
  }
  opt = {};
  opt.epsilon = 0.5;
  EXPECT_THROW(try_run_hitting(env, 10, 1, opt), Error);
}

TEST(Walk, Thresholds) {
  EXPECT_EQ(big_trap_threshold(1000, 0.1, 0.4), 7);
  EXPECT_EQ(trap_height_scale(1000, 0.4), 8);
  EXPECT_NEAR(max_epsilon(0.56932), 0.25, 1e-12);
  EXPECT_NEAR(max_epsilon(0.3), 0.2, 1e-12);
}

TEST(Walk, SuperRegenerationsAgreeWithBruteForce) {
  UniformTape tape = walk_tape(1234);
  const std::int64_t horizon = 3000, window = 40;
  const double beta = 3.0;
  const auto tr = detect_super_regenerations(tape, horizon, window, beta);
  std::vector<std::int64_t> brute;
  for (std::int64_t t = 0; t + window <= horizon; ++t) {
    bool rec = true;
    for (std::int64_t s = 0; s < t; ++s) rec &= tr.path[std::size_t(s)] < tr.path[std::size_t(t)];
    bool clear = true;
    for (std::int64_t s = t + 1; s <= t + window; ++s) clear &= tr.path[std::size_t(s)] > tr.path[std::size_t(t)];
    if (rec && clear) brute.push_back(t);
  }
  EXPECT_EQ(tr.confirmed, brute);
  EXPECT_FALSE(brute.empty());
}

TEST(Walk, WSamplerBasics) {
  auto m = model();
  WOptions opt;
  opt.window = 40;
  const auto s = sample_Wn(m, 200, 17, 300, 2, opt);
  const auto s1 = sample_Wn(m, 200, 17, 300, 1, opt);
  int pos = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s[i].W, s1[i].W);
    EXPECT_TRUE(s[i].complete);
    EXPECT_GE(s[i].K, 0);
    pos += s[i].W >= 1;
  }
  EXPECT_GT(pos, 30);
  const auto p = w_pmf(s);
  double tot = 0;
  for (double x : p) tot += x;
  EXPECT_NEAR(tot, 1.0, 1e-12);
}

TEST(Walk, RhoBounds) {
  for (double beta : {5.0, 20.0}) {
    const auto e = rho_estimate(model(beta), 3, 50, 5000, 2, 100);
    EXPECT_GE(e.rho, 1.0);
    EXPECT_LE(e.rho, (beta + 1) / (beta - 1));
    EXPECT_LE(e.lo, e.rho);
    EXPECT_GE(e.hi, e.rho);
    const auto again = rho_estimate(model(beta), 3, 50, 5000, 1, 100);
    EXPECT_EQ(e.rho, again.rho);
    EXPECT_EQ(e.lo, again.lo);
  }
  EXPECT_THROW(rho_estimate(model(), 3, 10, 99), Error);
}
