#include <gtest/gtest.h>

#include "upcross/diagnostics.hpp"

using namespace upcross;

namespace {

SimulationSettings settings(std::size_t R, std::uint64_t seed = 11) {
  return SimulationSettings{R, seed, 1};
}

}  // namespace

TEST(HSum, RejectsSingleMargin) {
  const std::vector<double> tp{1.0};
  EXPECT_THROW(h_sum(builtin_process("iid"), tp, 100, 10, settings(4)), std::invalid_argument);
}

TEST(HSum, IdenticalMarginsUpcrossTogether) {
  // Both margins are Y_i: every upcrossing is joint, n P -> tau'.
  const std::vector<double> tp{1.0, 1.0};
  const HSumEntry e = h_sum(builtin_process("iid", 2), tp, 1000, 31, settings(2000));
  EXPECT_NEAR(e.first_term.value, 1.0, 5 * *e.first_term.std_error);
  EXPECT_GT(e.forward.value, 0.9);
}

TEST(HSum, Ex62FirstTermIsMinTauPrime) {
  const std::vector<double> tp{1.0, 1.0};
  const HSumEntry e = h_sum(builtin_process("ex62"), tp, 2000, 44, settings(2000));
  EXPECT_NEAR(e.first_term.value, 1.0, 0.1);
}

// The textbook sum only sees the second margin after the first; ex61's
// second margin leads the first by two steps.
TEST(HSum, Ex61ReverseTermCarriesTheCoupling) {
  const std::vector<double> tp{1.0, 1.0};
  const HSumEntry e = h_sum(builtin_process("ex61"), tp, 2000, 44, settings(2000));
  EXPECT_LT(e.forward.value, 0.2);
  EXPECT_NEAR(e.reverse.value, 2.0, 0.2);
  EXPECT_EQ(e.first_term.value, 0.0);
}

TEST(HSum, DecreasesOnEx61) {
  const std::vector<double> tp{1.0, 1.0};
  const std::vector<std::size_t> grid{200, 800, 3200};
  const ConditionReport rep = h_sum_report(builtin_process("ex61"), tp, grid, {}, settings(3000));
  ASSERT_EQ(rep.grid.size(), 3u);
  for (std::size_t g = 1; g < rep.grid.size(); ++g) {
    const auto& a = rep.grid[g - 1];
    const auto& b = rep.grid[g];
    EXPECT_LE(b.value, a.value + 2 * (*a.std_error + *b.std_error));
    EXPECT_GE(b.value, 0.0);
  }
  EXPECT_EQ(rep.hint(), "vanishing");
}

TEST(LocalOsc, RejectsShortBlocks) {
  const std::vector<double> tp{1.0};
  EXPECT_THROW(local_osc_stat(builtin_process("iid"), tp, 40, 10, settings(4)),
               std::invalid_argument);
}

TEST(LocalOsc, NonincreasingOnBuiltins) {
  const std::vector<std::size_t> grid{250, 1000, 4000};
  for (auto name : {"iid", "ex61", "ex62"}) {
    const ProcessSpec spec = builtin_process(name);
    const std::vector<double> tp(spec.dims(), 1.0);
    const ConditionReport rep = local_osc_report(spec, tp, grid, {}, settings(2000));
    for (std::size_t g = 1; g < rep.grid.size(); ++g) {
      const auto& a = rep.grid[g - 1];
      const auto& b = rep.grid[g];
      EXPECT_GE(b.value, 0.0) << name;
      EXPECT_LE(b.value, a.value + 2 * (a.std_error.value_or(0) + b.std_error.value_or(0)))
          << name;
    }
  }
}

TEST(Conditions, GridMustIncrease) {
  const std::vector<double> tp{1.0, 1.0};
  const std::vector<std::size_t> grid{1000, 500};
  EXPECT_THROW(h_sum_report(builtin_process("ex61"), tp, grid, {}, settings(2)),
               std::invalid_argument);
}

TEST(Conditions, Hint) {
  ConditionReport r{"x", {{10, 1.0, {}, 0}, {100, 0.4, {}, 0}}};
  EXPECT_EQ(r.hint(), "vanishing");
  r.grid[1].value = 0.6;
  EXPECT_EQ(r.hint(), "stabilizing");
  EXPECT_EQ(ConditionReport{}.hint(), "");
}

TEST(Scaling, NeutralAtOne) {
  const std::vector<double> tp{1.0, 1.0};
  const ScalingReport s = scaling_check(builtin_process("ex61"), tp, 1000, 1.0, 31, settings(200));
  EXPECT_EQ(s.ratio, 1.0);
  EXPECT_EQ(s.tv_distance, 0.0);
  EXPECT_EQ(s.base_clusters, s.scaled_clusters);
}

TEST(Scaling, IidRateScalesWithC) {
  const std::vector<double> tp{0.5};
  const ScalingReport s = scaling_check(builtin_process("iid"), tp, 3000, 3.0, 54, settings(2000));
  EXPECT_NEAR(s.ratio, 3.0, 0.3);
}

TEST(Continuity, RejectsBadGrids) {
  const std::vector<double> nu{2.0, 1.0};
  const std::vector<double> rising{0.1, 0.5}, negative{0.5, -0.1};
  const ProcessSpec spec = builtin_process("ex61");
  EXPECT_THROW(continuity_check(spec, nu, 1, rising, 500, 22, settings(2)), std::invalid_argument);
  EXPECT_THROW(continuity_check(spec, nu, 1, negative, 500, 22, settings(2)),
               std::invalid_argument);
  EXPECT_THROW(continuity_check(spec, nu, 2, std::vector<double>{0.5}, 500, 22, settings(2)),
               std::invalid_argument);
}

TEST(Continuity, IidIsAlwaysOne) {
  const std::vector<double> nu{1.0, 1.0};
  const std::vector<double> eps{0.5, 0.1};
  const ContinuityReport c =
      continuity_check(builtin_process("iid", 2), nu, 1, eps, 2000, 44, settings(500));
  for (const auto& e : c.eta) EXPECT_NEAR(*e.value, 1.0, 0.03);
  EXPECT_NEAR(*c.eta_without.value, 1.0, 0.03);
  ASSERT_TRUE(c.gap.has_value());
  EXPECT_LT(*c.gap, 0.05);
}

TEST(Continuity, Ex62ApproachesFirstMargin) {
  const std::vector<double> nu{2.0, 1.0};
  const std::vector<double> eps{0.5, 0.1, 0.02};
  const ContinuityReport c =
      continuity_check(builtin_process("ex62"), nu, 1, eps, 4000, 63, settings(1000));
  EXPECT_NEAR(*c.eta_without.value, 0.5, 0.03);
  EXPECT_LT(*c.gap, 0.05);
}
