#include <gtest/gtest.h>

#include <gwrw/harness.hpp>
#include <gwrw/parallel.hpp>
#include <gwrw/rng.hpp>
#include <gwrw/stats.hpp>

using namespace gwrw;
using namespace gwrw::harness;

namespace {

const char* kSmall = R"(
[model]
offspring = { 0 = 0.2, 2 = 0.8 }
beta = 5.0

[run]
seed = 11

[w-law]
n = [40, 80]
replicas = 200

[toy-iid]
k_min = 1
k_max = 2
replicas = 500
compare_betas = [20.0]
)";

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const auto c = parse_config(kSmall);
  EXPECT_EQ(c.offspring.size(), 2u);
  EXPECT_DOUBLE_EQ(c.offspring.at(2), 0.8);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.w_law.n, (std::vector<std::int64_t>{40, 80}));
  EXPECT_DOUBLE_EQ(c.epsilon, 0.1);
  EXPECT_EQ(c.scaling.replicas, 2000u);
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_THROW(parse_config("[model\nbeta = 5"), Error);
  EXPECT_THROW(parse_config("[model]\nbeta = \"five\""), Error);
  EXPECT_THROW(parse_config("[model]\noffspring = { a = 0.5 }"), Error);
  EXPECT_THROW(parse_config("[w-law]\nreplicas = -3"), Error);
  EXPECT_THROW(load_config("/nonexistent/config.toml"), Error);
}

TEST(Config, ValidationBeforeSampling) {
  auto c = parse_config(kSmall);
  c.experiment = "w-law";
  EXPECT_NO_THROW(validate(c));
  auto slow = c;
  slow.beta = 2.0;  // below β_c = 2.5
  try {
    validate(slow);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSubballistic);
  }
  auto eps = c;
  eps.epsilon = 0.3;
  EXPECT_THROW(validate(eps), Error);
  auto unknown = c;
  unknown.experiment = "nope";
  EXPECT_THROW(run_experiment(unknown), Error);
  auto law = c;
  law.offspring = {{1, 1.0}};
  EXPECT_THROW(validate(law), Error);
}

TEST(Config, HashTracksContent) {
  const auto a = parse_config(kSmall);
  auto b = a;
  EXPECT_EQ(canonical_json(a), canonical_json(b));
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.w_law.replicas = 201;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Config, SetReplicasTargetsSuite) {
  auto c = parse_config(kSmall);
  set_replicas(c, "w-law", 17);
  EXPECT_EQ(c.w_law.replicas, 17u);
  set_replicas(c, "toy-iid", 9);
  EXPECT_EQ(c.toy.replicas, 9u);
  EXPECT_EQ(c.w_law.replicas, 17u);
}

TEST(Table, CsvAndJsonLayout) {
  ResultTable t;
  t.suite = "demo";
  t.citation = "none";
  t.metadata["seed"] = "1";
  t.add("x", {{"n", 10}, {"k", 2}}, 0.5, 0.25, 0.75);
  t.add("y", {}, INFINITY);
  t.check("ok", true, "fine");
  EXPECT_EQ(t.csv(), "# schema_version=1 suite=demo\nsuite,name,params,value,lo,hi\n"
                     "demo,x,n=10;k=2,0.5,0.25,0.75\ndemo,y,,inf,inf,inf\n");
  const auto j = t.json();
  EXPECT_NE(j.find("\"schema_version\": 1"), std::string::npos);
  EXPECT_NE(j.find("\"value\": \"inf\""), std::string::npos);
  EXPECT_TRUE(t.all_pass());
  t.check("bad", false, "");
  EXPECT_FALSE(t.all_pass());
}

TEST(Parallel, ZeroReplicasIsEmpty) {
  const auto v = parallel_map(0, 4, [](std::size_t) { return 1.0; });
  EXPECT_TRUE(v.empty());
  auto c = parse_config(kSmall);
  c.experiment = "toy-iid";
  c.toy.replicas = 0;
  const auto t = run_experiment(c);
  EXPECT_TRUE(t.rows.empty());
  EXPECT_TRUE(t.checks.empty());
}

TEST(Parallel, OrderIndependentOfWorkers) {
  auto task = [](std::size_t i) {
    Stream s(5, i);
    double acc = 0;
    for (int k = 0; k < 100; ++k) acc += s.uniform();
    return acc;
  };
  EXPECT_EQ(parallel_map(1000, 1, task), parallel_map(1000, 7, task));
}

TEST(Parallel, FailureReportsReplica) {
  try {
    parallel_map(50, 3, [](std::size_t i) -> int {
      if (i == 13 || i == 40) throw Error(ErrorCode::InvalidArgument, "boom");
      return int(i);
    });
    FAIL();
  } catch (const PartialResultError& e) {
    EXPECT_NE(std::string(e.what()).find("replica 13"), std::string::npos);
    EXPECT_LE(e.completed(), 48u);
  }
}

TEST(Ks, TrivialCases) {
  const std::vector<double> a{1, 2, 3, 4}, b{10, 11, 12};
  EXPECT_DOUBLE_EQ(stats::ks_two_sample(a, a).D, 0.0);
  EXPECT_DOUBLE_EQ(stats::ks_two_sample(a, b).D, 1.0);
  EXPECT_THROW(stats::ks_two_sample({}, a), Error);
}

TEST(Ks, UniformSamplesAgree) {
  int hits = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    Stream s(77, r);
    std::vector<double> x(10000), y(10000);
    for (auto& v : x) v = s.uniform();
    for (auto& v : y) v = s.uniform();
    hits += stats::ks_two_sample(x, y).D < 0.03;
  }
  EXPECT_GE(hits, 19);
}

TEST(Determinism, SuitesIndependentOfWorkers) {
  for (const char* e : {"toy-iid", "w-law"}) {
    auto c = parse_config(kSmall);
    c.experiment = e;
    c.workers = 1;
    clear_caches();
    const auto a = run_experiment(c);
    c.workers = 3;
    clear_caches();
    const auto b = run_experiment(c);
    EXPECT_EQ(a.csv(), b.csv()) << e;
    EXPECT_EQ(a.json(), b.json()) << e;
    EXPECT_FALSE(a.rows.empty()) << e;
  }
}
