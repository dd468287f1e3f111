#include <gtest/gtest.h>

#include <cmath>

#include "upcross/estimators.hpp"

using namespace upcross;

namespace {

UpcrossingMarks single(std::vector<std::uint8_t> m) {
  const std::size_t n = m.size();
  return marks_from_matrix(n, 1, m);
}

SimulationResult run(const char* name, std::vector<double> tp, std::size_t n, std::size_t R,
                     unsigned workers = 1, std::uint64_t seed = 20070101) {
  const ProcessSpec spec = builtin_process(name);
  return simulate(spec, levels_from_tau_prime(tp, n), default_block_count(n),
                  SimulationSettings{R, seed, workers});
}

}  // namespace

TEST(Runs, UnionTallyRequiresTwoQuietSteps) {
  // i = 1..n-2: marks at 1, 3, 7; 1 is followed by 3 (lag 2), 3 and 7 are clean.
  const auto m = single({1, 0, 1, 0, 0, 0, 1, 0, 0, 0});
  EXPECT_EQ(union_runs_tally(m), (RatioTally{2, 3}));
  EXPECT_EQ(marginal_runs_tally(m, 0), (RatioTally{2, 3}));
}

TEST(Runs, MarginalTallyChecksOnlyLagTwo) {
  const UpcrossingMarks m =
      marks_from_matrix(5, 2, std::vector<std::uint8_t>{1, 0, 0, 1, 1, 0, 0, 0, 0, 0});
  // Margin 1 at 1 and 3: lag-2 pair. Margin 2 at 2.
  EXPECT_EQ(marginal_runs_tally(m, 0), (RatioTally{1, 2}));
  EXPECT_EQ(marginal_runs_tally(m, 1), (RatioTally{1, 1}));
  // Union marks 1, 2, 3: only time 3 is followed by two quiet steps.
  EXPECT_EQ(union_runs_tally(m), (RatioTally{1, 3}));
  EXPECT_THROW(marginal_runs_tally(m, 2), std::out_of_range);
}

TEST(Runs, EstimatorPoolsAndFlagsUndefined) {
  const std::vector<RatioTally> none{{0, 0}, {0, 0}};
  EXPECT_FALSE(runs_estimator(none).defined());
  const std::vector<RatioTally> some{{1, 2}, {3, 4}, {2, 2}};
  const Estimate e = runs_estimator(some);
  EXPECT_DOUBLE_EQ(*e.value, 6.0 / 8);
  EXPECT_EQ(e.event_count, 8u);
  EXPECT_TRUE(e.std_error.has_value());
  EXPECT_FALSE(e.out_of_range);
}

TEST(Runs, MultivariateAndMarginalFromMarks) {
  const std::vector<UpcrossingMarks> reps{single({1, 0, 0, 0, 0}), single({1, 0, 1, 0, 0})};
  EXPECT_DOUBLE_EQ(*runs_estimator_multivariate(reps).value, 2.0 / 3);
  EXPECT_DOUBLE_EQ(*runs_estimator_marginal(reps, 0).value, 2.0 / 3);
}

TEST(Combine, WeightsByNu) {
  const std::vector<double> eta{0.5, 1.0}, nu{2.0, 1.0};
  EXPECT_DOUBLE_EQ(combine_marginal(eta, nu), 2.0 / 3);
  const std::vector<double> zero{2.0, 0.0};
  EXPECT_THROW(combine_marginal(eta, zero), std::invalid_argument);
}

TEST(Blocks, ReciprocalMeanClusterSize) {
  ClusterSizeHistogram h;
  EXPECT_FALSE(blocks_estimator(h).defined());
  h.add_blocks(2, 3);
  h.add_blocks(1, 2);
  h.add_blocks(0, 10);
  EXPECT_DOUBLE_EQ(*blocks_estimator(h).value, 5.0 / 8);
}

TEST(EmptyWindow, DegenerateCasesAreUndefined) {
  const std::vector<std::uint8_t> all{1, 1, 1}, none{0, 0, 0}, some{1, 0, 1, 1};
  EXPECT_FALSE(eta_empty(all, 0.5).defined());
  EXPECT_FALSE(eta_empty(none, 0.5).defined());
  EXPECT_FALSE(eta_empty(some, 1.0).defined());
  EXPECT_DOUBLE_EQ(*eta_empty(some, 0.5).value, std::log(0.75) / std::log(0.5));
  EXPECT_FALSE(theta_direct(some, 0.0).defined());
  EXPECT_DOUBLE_EQ(*theta_direct(some, 2.0).value, std::log(0.75) / -2.0);
}

TEST(EmptyWindow, OutOfRangeIsFlaggedNotClamped) {
  const std::vector<std::uint8_t> rare{1, 0, 0, 0};
  const Estimate e = eta_empty(rare, 0.9);
  EXPECT_GT(*e.value, 1.0);
  EXPECT_TRUE(e.out_of_range);
}

TEST(PhiHat, ExpOfMeanUnionCount) {
  const std::vector<UpcrossingMarks> reps{single({1, 0, 1, 0}), single({0, 0, 0, 0})};
  EXPECT_DOUBLE_EQ(*phi_hat(reps).value, std::exp(-1.0));
}

TEST(ThetaFromEta, RejectsNonpositiveRates) {
  EXPECT_DOUBLE_EQ(theta_from_eta(0.5, 3.0, 4.0), 0.375);
  EXPECT_THROW(theta_from_eta(0.5, 3.0, 0.0), std::invalid_argument);
  EXPECT_THROW(theta_from_eta(0.5, 0.0, 1.0), std::invalid_argument);
}

TEST(Tally, AddAndSubtractAreInverse) {
  ReplicateTally a, b;
  a.union_runs = {1, 2};
  a.margin_runs = {{1, 2}};
  a.margin_marks = {2};
  a.margin_exceedances = {3};
  a.windows = 1;
  b = a;
  b.union_marks = 4;
  ReplicateTally sum = a;
  sum += b;
  sum -= b;
  EXPECT_EQ(sum, a);
}

TEST(Simulate, IdenticalAcrossWorkerCounts) {
  const auto one = run("ex62", {1.0, 2.0}, 500, 64, 1);
  for (unsigned w : {2u, 4u, 8u}) {
    const auto many = run("ex62", {1.0, 2.0}, 500, 64, w);
    EXPECT_EQ(one.tallies, many.tallies);
    EXPECT_EQ(one.multiplicity, many.multiplicity);
    EXPECT_EQ(one.clusters, many.clusters);
  }
}

TEST(Simulate, HistogramsPoolEveryFullBlock) {
  const auto sim = run("ex61", {1.0, 1.0}, 400, 30);
  EXPECT_EQ(sim.multiplicity.total_blocks(), 30u * 20u);
  EXPECT_EQ(sim.clusters.total_blocks(), 30u * 20u);
  EXPECT_EQ(sim.multiplicity.nonempty_blocks(), sim.clusters.nonempty_blocks());
}

TEST(Report, IidIndicesAreNearOne) {
  const auto sim = run("iid", {1.0}, 2000, 1500);
  const RateSummary rates = limiting_rates(builtin_process("iid"), std::vector<double>{1.0});
  const EstimateReport rep = estimate_report(sim.tallies, rates);
  EXPECT_NEAR(*rep.eta_runs.value, 1.0, 0.02);
  EXPECT_NEAR(*rep.eta_blocks.value, 1.0, 0.03);
  EXPECT_NEAR(*rep.eta_marginal[0].value, 1.0, 0.02);
  EXPECT_NEAR(*rep.theta_from_eta.value, 1.0, 0.02);
  EXPECT_NEAR(*rep.nu_hat.value, 1.0, 0.1);
  EXPECT_EQ(rep.replicates, 1500u);
}

TEST(Report, ClosedFormRatesTakePrecedence) {
  const auto sim = run("ex61", {1.0, 1.0}, 1000, 200);
  const RateSummary rates =
      limiting_rates(builtin_process("ex61"), std::vector<double>{1.0, 1.0});
  const EstimateReport rep = estimate_report(sim.tallies, rates);
  EXPECT_EQ(rep.nu_union_used, 3.0);
  EXPECT_EQ(rep.tau_union_used, 4.0);
}

TEST(Report, EmptyInputGivesUndefinedEstimates) {
  const EstimateReport rep = estimate_report({}, RateSummary{});
  EXPECT_FALSE(rep.eta_runs.defined());
  EXPECT_EQ(rep.replicates, 0u);
}

// Doubling R shrinks every standard error by about 1/sqrt(2).
TEST(Report, StandardErrorsScaleWithReplicates) {
  const std::vector<double> tp{1.0, 2.0};
  const RateSummary rates = limiting_rates(builtin_process("ex62"), tp);
  const auto se = [&](std::size_t R) {
    return estimate_report(run("ex62", tp, 2000, R, 1, 77).tallies, rates);
  };
  const EstimateReport small = se(1000), large = se(4000);
  const auto ratio = [](const Estimate& a, const Estimate& b) {
    return *b.std_error / *a.std_error;
  };
  // 4x the replicates: ratio 1/2; checked within 20%.
  for (const auto& [a, b] :
       {std::pair{small.eta_runs, large.eta_runs}, {small.nu_hat, large.nu_hat},
        {small.phi_hat, large.phi_hat}, {small.eta_blocks, large.eta_blocks}}) {
    EXPECT_NEAR(ratio(a, b), 0.5, 0.1);
  }
}

TEST(Decomposition, SingleComponentMassMatchesMarginals) {
  MultiplicityHistogram h(2);
  h.add_blocks({2, 0}, 50);
  h.add_blocks({0, 1}, 50);
  const std::vector<double> nu{2.0, 1.0}, eta{0.5, 1.0};
  const DecompositionCheck c = multiplicity_decomposition(h, nu, eta);
  EXPECT_EQ(c.multi_component_mass, 0.0);
  EXPECT_NEAR(c.max_deviation, 0.0, 1e-12);
  const std::vector<double> short_nu{1.0};
  EXPECT_THROW(multiplicity_decomposition(h, short_nu, eta), std::invalid_argument);
}
