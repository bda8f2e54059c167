#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "ehcs/config.hpp"
#include "ehcs/design.hpp"
#include "test_support.hpp"

namespace ehcs {
namespace {

using testing::random_ehcs;

ProblemConfig load(const std::string& name) {
  std::ifstream in(testing::repo_path("configs/" + name));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

ValidatedEhcs with_capacity(EhcsSpec spec, int cap) {
  spec.battery_capacity = cap;
  return validate_ehcs(spec);
}

TEST(CriticalCapacity, WindExample) {
  const auto cfg = load("wind.json");
  const auto res = critical_battery_capacity(validate_ehcs(cfg.spec), 10);
  ASSERT_TRUE(res.critical);
  EXPECT_EQ(*res.critical, 3);
  ASSERT_EQ(res.scan.size(), 4u);
  EXPECT_EQ(res.scan[3].verdict, Verdict::stable);
  EXPECT_EQ(res.scan[2].verdict, Verdict::unstable);
}

TEST(CriticalCapacity, SolarExample) {
  const auto cfg = load("solar.json");
  const auto res = critical_battery_capacity(validate_ehcs(cfg.spec), 4);
  ASSERT_TRUE(res.critical);
  EXPECT_EQ(*res.critical, 1);
}

TEST(CriticalCapacity, ScanPropertyOnRandomScalars) {
  // At B the greedy verdict is stable and at B - 1 it is unstable.
  std::mt19937_64 rng(7);
  testing::RandomInstanceOptions o;
  o.max_dim = 1;
  int found = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const auto sys = random_ehcs(rng, o);
    const auto res = critical_battery_capacity(sys, 8);
    EXPECT_EQ(static_cast<int>(res.scan.size()) - 1,
              res.critical ? *res.critical : res.b_max);
    if (!res.critical) continue;
    ++found;
    const int b = *res.critical;
    EXPECT_EQ(certify(with_capacity(sys.spec(), b), greedy_policy(with_capacity(sys.spec(), b)))
                  .verdict,
              Verdict::stable);
    if (b >= 1) {
      const auto below = with_capacity(sys.spec(), b - 1);
      EXPECT_NE(certify(below, greedy_policy(below)).verdict, Verdict::stable);
    }
  }
  EXPECT_GT(found, 5);
}

TEST(CriticalCapacity, FullScanKeepsGoing) {
  const auto cfg = load("wind.json");
  const auto res = critical_battery_capacity(validate_ehcs(cfg.spec), 5, true);
  EXPECT_EQ(res.scan.size(), 6u);
  EXPECT_EQ(*res.critical, 3);
}

TEST(CriticalCapacity, RejectsBadArguments) {
  const auto cfg = load("two_dim.json");
  EXPECT_THROW(critical_battery_capacity(validate_ehcs(cfg.spec), 3), std::invalid_argument);
  const auto scalar = load("wind.json");
  EXPECT_THROW(critical_battery_capacity(validate_ehcs(scalar.spec), -1), std::invalid_argument);
}

TEST(ScalarStabilizability, RejectsVectorPlant) {
  const auto cfg = load("two_dim.json");
  EXPECT_THROW(scalar_stabilizability(validate_ehcs(cfg.spec)), std::invalid_argument);
}

TEST(ScalarStabilizability, StableOpenLoopIsStabilizable) {
  std::mt19937_64 rng(8);
  testing::RandomInstanceOptions o;
  o.max_dim = 1;
  for (int rep = 0; rep < 20; ++rep) {
    EhcsSpec spec = random_ehcs(rng, o).spec();
    spec.plant = PlantModel::scalar(0.3, 0.9);
    EXPECT_EQ(scalar_stabilizability(validate_ehcs(spec)), Stabilizability::stabilizable);
  }
}

TEST(ScalarStabilizability, AgreesWithGreedyCertification) {
  std::mt19937_64 rng(9);
  testing::RandomInstanceOptions o;
  o.max_dim = 1;
  for (int rep = 0; rep < 100; ++rep) {
    const auto sys = random_ehcs(rng, o);
    const auto v = certify(sys, greedy_policy(sys)).verdict;
    const auto s = scalar_stabilizability(sys);
    const auto expect = v == Verdict::stable     ? Stabilizability::stabilizable
                        : v == Verdict::unstable ? Stabilizability::not_stabilizable
                                                 : Stabilizability::marginal;
    EXPECT_EQ(s, expect) << "rep " << rep;
  }
}

TEST(DwellIntervals, CountBoundedByDistinctValues) {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 30; ++rep) {
    const auto sys = random_ehcs(rng);
    for (int k = 1; k <= 4; ++k) {
      const auto phi = dwell_probabilities(sys, k);
      std::set<double> distinct;
      for (int b = 0; b <= sys.battery_capacity(); ++b)
        for (int l = 0; l < sys.num_latent(); ++l)
          if (b + sys.source().energy(l) >= sys.tx_threshold()) distinct.insert(phi(b, l));
      const auto iv = dwell_intervals(sys, phi);
      EXPECT_LE(iv.size(), distinct.size() + 1);
      EXPECT_GE(iv.size(), 1u);
      // The ranges tile [0, 1].
      EXPECT_TRUE(iv.front().closed_low);
      EXPECT_EQ(iv.front().p_low, 0.0);
      EXPECT_EQ(iv.back().p_high, 1.0);
      for (std::size_t i = 1; i < iv.size(); ++i) EXPECT_EQ(iv[i].p_low, iv[i - 1].p_high);
    }
  }
}

TEST(DwellIntervals, SameRangeSamePolicy) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    const auto sys = random_ehcs(rng);
    for (int k = 1; k <= 3; ++k) {
      const auto phi = dwell_probabilities(sys, k);
      for (const auto& c : dwell_intervals(sys, phi)) {
        if (c.p_high - c.p_low < 1e-12) continue;
        const double p1 = c.p_low + (c.p_high - c.p_low) * (0.001 + 0.998 * u(rng));
        const auto a = build_dwell_policy(sys, k, c.p);
        const auto b = build_dwell_policy(sys, k, p1);
        EXPECT_EQ(a, b) << "rep " << rep << " k " << k << " p " << c.p << " vs " << p1;
      }
    }
  }
}

TEST(SearchDwell, KMaxOneIsGreedy) {
  std::mt19937_64 rng(12);
  testing::RandomInstanceOptions o;
  o.max_dim = 1;
  for (int rep = 0; rep < 20; ++rep) {
    const auto sys = random_ehcs(rng, o);
    const auto res = search_dwell_policies(sys, 1);
    ASSERT_FALSE(res.candidates.empty());
    const auto greedy = scalar_stabilizability(sys);
    for (const auto& c : res.candidates) {
      EXPECT_EQ(c.k, 1);
      EXPECT_EQ(build_dwell_policy(sys, 1, c.p), greedy_policy(sys));
      const auto expect = greedy == Stabilizability::stabilizable       ? Verdict::stable
                          : greedy == Stabilizability::not_stabilizable ? Verdict::unstable
                                                                         : Verdict::marginal;
      EXPECT_EQ(c.verdict, expect);
    }
  }
}

TEST(SearchDwell, FirstStableIsFlagged) {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const auto sys = random_ehcs(rng);
    const auto res = search_dwell_policies(sys, 3);
    if (res.first_stable) {
      EXPECT_EQ(res.candidates[*res.first_stable].verdict, Verdict::stable);
      for (std::size_t i = 0; i < *res.first_stable; ++i)
        EXPECT_NE(res.candidates[i].verdict, Verdict::stable);
    } else {
      for (const auto& c : res.candidates) EXPECT_NE(c.verdict, Verdict::stable);
    }
  }
  EXPECT_THROW(search_dwell_policies(random_ehcs(rng), 0), std::invalid_argument);
}

TEST(PolicySplitGrid, CoversRequestedPairs) {
  const auto cfg = load("two_dim.json");
  const auto grid = policy_split_grid(cfg.spec, {1, 2}, {1, 2}, 2, 0.5);
  ASSERT_EQ(grid.size(), 4u);
  for (const auto& e : grid) {
    auto spec = cfg.spec;
    spec.channel.tx_threshold = e.tx_threshold;
    spec.battery_capacity = e.battery_capacity;
    const auto sys = validate_ehcs(spec);
    EXPECT_NEAR(e.greedy_rho, certify(sys, greedy_policy(sys)).rho, 1e-12);
    EXPECT_NEAR(e.dwell_rho, certify(sys, build_dwell_policy(sys, 2, 0.5)).rho, 1e-12);
  }
}

}  // namespace
}  // namespace ehcs
