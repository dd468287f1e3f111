#include <gtest/gtest.h>

#include <cmath>

#include "upcross/levels.hpp"
#include "upcross/oracle.hpp"

using namespace upcross;

TEST(Levels, LevelsFromTauPrime) {
  const std::vector<double> tp{1.0, 2.5};
  const LevelVector lv = levels_from_tau_prime(tp, 100);
  EXPECT_EQ(lv.n, 100u);
  EXPECT_DOUBLE_EQ(lv.u[0], 0.99);
  EXPECT_DOUBLE_EQ(lv.u[1], 0.975);
}

TEST(Levels, RejectsTauPrimeOutsideOpenInterval) {
  for (double bad : {0.0, -1.0, 10.0, 11.0}) {
    const std::vector<double> tp{bad};
    EXPECT_THROW(levels_from_tau_prime(tp, 10), std::invalid_argument) << bad;
  }
}

TEST(Levels, UpcrossingRunsCountsLagRuns) {
  EXPECT_EQ(upcrossing_runs(std::vector<int>{0}), 1u);
  EXPECT_EQ(upcrossing_runs(std::vector<int>{-3, -2, 0}), 2u);
  EXPECT_EQ(upcrossing_runs(std::vector<int>{-2, -1, 0}), 1u);
  EXPECT_EQ(upcrossing_runs(std::vector<int>{-6, -4, -2, 0}), 4u);
}

TEST(Levels, Ex61Rates) {
  const std::vector<double> tp{1.0, 1.0};
  const RateSummary r = limiting_rates(builtin_process("ex61"), tp);
  EXPECT_EQ(r.tau, (std::vector<double>{3.0, 1.0}));
  EXPECT_EQ(r.nu, (std::vector<double>{2.0, 1.0}));
  EXPECT_DOUBLE_EQ(*r.nu_union, 3.0);
  EXPECT_DOUBLE_EQ(*r.tau_union, 4.0);
}

TEST(Levels, Ex62UnionRateIsPiecewise) {
  const ProcessSpec ex62 = builtin_process("ex62");
  const std::vector<double> balanced{1.0, 2.0};   // nu = (2, 2)
  const std::vector<double> dominant{2.0, 1.0};   // nu = (4, 1)
  EXPECT_DOUBLE_EQ(*limiting_rates(ex62, balanced).nu_union, 3.0);
  EXPECT_DOUBLE_EQ(*limiting_rates(ex62, dominant).nu_union, 4.0);
  EXPECT_FALSE(limiting_rates(ex62, balanced).tau_union.has_value());
}

TEST(Levels, IidUnionRateIsLowestLevel) {
  const std::vector<double> tp{0.5, 2.0};
  const RateSummary r = limiting_rates(builtin_process("iid", 2), tp);
  EXPECT_DOUBLE_EQ(*r.nu_union, 2.0);
  EXPECT_DOUBLE_EQ(*r.tau_union, 2.0);
}

TEST(Levels, CustomSpecsHaveNoClosedForm) {
  const std::vector<double> tp{1.0};
  const RateSummary r = limiting_rates(make_process({{0, -1}}), tp);
  EXPECT_FALSE(r.nu_union.has_value());
  EXPECT_EQ(r.nu, (std::vector<double>{1.0}));
  EXPECT_EQ(r.tau, (std::vector<double>{2.0}));
}

TEST(Levels, ScaledLevelsAtOneAreTheBaseLevels) {
  const std::vector<double> tp{1.0, 1.0};
  EXPECT_EQ(scaled_levels(builtin_process("ex61"), tp, 1000, 1.0), levels_from_tau_prime(tp, 1000));
}

TEST(Levels, ScaledLevelsUseTheShorterWindow) {
  const std::vector<double> tp{1.0};
  const LevelVector lv = scaled_levels(builtin_process("iid"), tp, 1000, 2.0);
  EXPECT_EQ(lv.n, 1000u);
  EXPECT_DOUBLE_EQ(lv.u[0], 1.0 - 1.0 / 500);
  EXPECT_THROW(scaled_levels(builtin_process("iid"), tp, 3, 2.0), std::invalid_argument);
  EXPECT_THROW(scaled_levels(builtin_process("iid"), tp, 100, 0.0), std::invalid_argument);
}

TEST(Levels, TauPrimeForNu) {
  const std::vector<double> nu{2.0, 1.0};
  EXPECT_EQ(tau_prime_for_nu(builtin_process("ex61"), nu), (std::vector<double>{1.0, 1.0}));
}

// The process shares innovations between margins, so one large innovation
// drives both: margin 2 upcrosses at -2, margin 1 at -1 and 1.
TEST(ClusterLimits, Ex61AtEqualLevels) {
  const std::vector<double> tp{1.0, 1.0};
  const ClusterLimits cl = cluster_limits(builtin_process("ex61"), tp);
  EXPECT_DOUBLE_EQ(cl.cluster_rate, 1.0);
  EXPECT_DOUBLE_EQ(cl.nu_union, 3.0);
  EXPECT_DOUBLE_EQ(cl.tau_union, 4.0);
  EXPECT_DOUBLE_EQ(cl.eta, 1.0 / 3);
  EXPECT_DOUBLE_EQ(cl.theta, 0.25);
  EXPECT_DOUBLE_EQ(cl.runs_limit, 1.0 / 3);
  ASSERT_EQ(cl.multiplicity.size(), 1u);
  EXPECT_DOUBLE_EQ(cl.multiplicity.at({2, 1}), 1.0);
  EXPECT_DOUBLE_EQ(cl.cluster_size.at(3), 1.0);
}

TEST(ClusterLimits, Ex61UnequalLevels) {
  // nu_union = 2a + b, eta = max(a, b) / (2a + b).
  const std::vector<double> tp{1.0, 3.0};
  const ClusterLimits cl = cluster_limits(builtin_process("ex61"), tp);
  EXPECT_DOUBLE_EQ(cl.nu_union, 5.0);
  EXPECT_DOUBLE_EQ(cl.eta, 3.0 / 5);
  EXPECT_DOUBLE_EQ(cl.multiplicity.at({0, 1}), 2.0 / 3);
  EXPECT_DOUBLE_EQ(cl.multiplicity.at({2, 1}), 1.0 / 3);
}

TEST(ClusterLimits, Ex62Balanced) {
  const std::vector<double> tp{1.0, 2.0};
  const ClusterLimits cl = cluster_limits(builtin_process("ex62"), tp);
  EXPECT_DOUBLE_EQ(cl.nu_union, 3.0);
  EXPECT_DOUBLE_EQ(cl.eta, 2.0 / 3);
  EXPECT_DOUBLE_EQ(cl.phi, std::exp(-3.0));
  EXPECT_DOUBLE_EQ(cl.multiplicity.at({2, 1}), 0.5);
  EXPECT_DOUBLE_EQ(cl.multiplicity.at({0, 1}), 0.5);
  EXPECT_DOUBLE_EQ(cl.runs_limit, cl.eta);
}

TEST(ClusterLimits, Ex62Dominant) {
  const std::vector<double> tp{2.0, 1.0};
  const ClusterLimits cl = cluster_limits(builtin_process("ex62"), tp);
  EXPECT_DOUBLE_EQ(cl.nu_union, 4.0);
  EXPECT_DOUBLE_EQ(cl.eta, 0.5);
  EXPECT_DOUBLE_EQ(cl.phi, std::exp(-4.0));
  EXPECT_DOUBLE_EQ(cl.multiplicity.at({2, 0}), 0.5);
  EXPECT_DOUBLE_EQ(cl.multiplicity.at({2, 1}), 0.5);
}

TEST(ClusterLimits, IidHasNoClustering) {
  const std::vector<double> tp{1.5};
  const ClusterLimits cl = cluster_limits(builtin_process("iid"), tp);
  EXPECT_DOUBLE_EQ(cl.eta, 1.0);
  EXPECT_DOUBLE_EQ(cl.theta, 1.0);
  EXPECT_DOUBLE_EQ(cl.phi, std::exp(-1.5));
}

TEST(ClusterLimits, ClosedFormRatesAgreeWithClusterCalculus) {
  for (const auto& tp : std::vector<std::vector<double>>{{1, 1}, {1, 2}, {2, 1}, {0.5, 3}}) {
    for (auto name : {"ex61", "ex62"}) {
      const ProcessSpec spec = builtin_process(name);
      const RateSummary r = limiting_rates(spec, tp);
      const ClusterLimits cl = cluster_limits(spec, tp);
      EXPECT_NEAR(*r.nu_union, cl.nu_union, 1e-12) << name;
      if (r.tau_union) EXPECT_NEAR(*r.tau_union, cl.tau_union, 1e-12) << name;
    }
  }
}

// n P(upcrossing) at u = 1 - tau'/n for L = {0, -1, -2}: n u^3 (1 - u).
TEST(LevelsOracle, UpcrossingRateConvergesToNu) {
  const ProcessSpec spec = make_process({{0, -1, -2}});
  const std::vector<std::pair<std::size_t, double>> frozen{
      {10, 0.729}, {100, 0.970299}, {1000, 0.997002999}, {10000, 0.999700029999}};
  for (const auto& [n, expected] : frozen) {
    const double u = 1.0 - 1.0 / static_cast<double>(n);
    const double p = exact_prob(upcrossing_event(spec, 0, 1, u));
    EXPECT_NEAR(static_cast<double>(n) * p, expected, 1e-9) << n;
  }
}
