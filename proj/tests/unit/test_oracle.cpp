#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "upcross/oracle.hpp"
#include "upcross/pointproc.hpp"

using namespace upcross;

namespace {

Event gt(int t, double c) { return Event::exceeds(t, c); }

// Random expression over indices [lo, hi] with thresholds from a small set.
Event random_event(std::mt19937_64& rng, int lo, int hi, int depth) {
  std::uniform_int_distribution<int> index(lo, hi);
  std::uniform_int_distribution<int> pick(0, 3);
  static constexpr double kCuts[] = {0.3, 0.55, 0.8};
  if (depth == 0) return gt(index(rng), kCuts[pick(rng) % 3]);
  switch (pick(rng)) {
    case 0: return !random_event(rng, lo, hi, depth - 1);
    case 1: return random_event(rng, lo, hi, depth - 1) && random_event(rng, lo, hi, depth - 1);
    case 2: return random_event(rng, lo, hi, depth - 1) || random_event(rng, lo, hi, depth - 1);
    default: return gt(index(rng), kCuts[pick(rng) % 3]);
  }
}

}  // namespace

TEST(Oracle, SingleAtoms) {
  EXPECT_NEAR(exact_prob(gt(1, 0.9)), 0.1, 1e-15);
  EXPECT_NEAR(exact_prob(!gt(1, 0.9) && gt(2, 0.9)), 0.09, 1e-15);
  EXPECT_EQ(exact_prob(Event::always()), 1.0);
  EXPECT_EQ(exact_prob(Event::never()), 0.0);
}

TEST(Oracle, SharedIndexUsesOneInterval) {
  EXPECT_NEAR(exact_prob(gt(1, 0.3) && !gt(1, 0.8)), 0.5, 1e-15);
  EXPECT_NEAR(exact_prob(gt(1, 0.8) && !gt(1, 0.3)), 0.0, 1e-15);
}

TEST(Oracle, RejectsThresholdsOutsideUnitInterval) {
  EXPECT_THROW(Event::exceeds(1, 0.0), std::invalid_argument);
  EXPECT_THROW(Event::exceeds(1, 1.0), std::invalid_argument);
}

TEST(Oracle, Ex61FirstMarginUpcrossing) {
  const double u = 0.9;
  const Event e = upcrossing_event(builtin_process("ex61"), 0, 1, u);
  EXPECT_NEAR(exact_prob(e), 0.13851, 1e-14);
  EXPECT_NEAR(exact_prob(e), u * u * u * (1 - u * u), 1e-14);
}

TEST(Oracle, UpcrossingEventShapes) {
  const Event iid = upcrossing_event(builtin_process("iid"), 0, 1, 0.7);
  EXPECT_EQ(iid.to_string(), "and(not(gt(1,0.7)),gt(2,0.7))");
  EXPECT_NEAR(exact_prob(iid), 0.7 * 0.3, 1e-15);
  const Event second = upcrossing_event(builtin_process("ex61"), 1, 1, 0.7);
  EXPECT_EQ(second.to_string(), "and(not(gt(2,0.7)),gt(3,0.7))");
}

TEST(Oracle, BudgetIsEnforcedWithCost) {
  std::vector<Event> terms;
  for (int t = 0; t < 30; ++t) terms.push_back(gt(t, 0.5));
  try {
    exact_prob(Event::any_of(terms));
    FAIL();
  } catch (const BudgetExceeded& e) {
    EXPECT_EQ(e.indices, 30u);
    EXPECT_EQ(e.cells, std::pow(2.0, 30));
  }
  std::vector<Event> cuts;
  for (double c : {0.1, 0.2, 0.3, 0.4, 0.5}) cuts.push_back(gt(0, c));
  EXPECT_THROW(exact_prob(Event::all_of(cuts)), BudgetExceeded);
  OracleBudget wide;
  wide.max_thresholds_per_index = 8;
  EXPECT_NEAR(exact_prob(Event::all_of(cuts), wide), 0.5, 1e-15);
}

TEST(Oracle, ComplementAndInclusionExclusion) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const Event e = random_event(rng, 0, 6, 4);
    const Event f = random_event(rng, 0, 6, 4);
    const double pe = exact_prob(e), pf = exact_prob(f);
    EXPECT_NEAR(exact_prob(!e), 1.0 - pe, 1e-12);
    EXPECT_NEAR(exact_prob(e || f) + exact_prob(e && f), pe + pf, 1e-12);
    EXPECT_GE(pe, -1e-15);
    EXPECT_LE(pe, 1.0 + 1e-15);
  }
}

TEST(Oracle, ExceedanceProbabilityFallsWithThreshold) {
  for (int t = 0; t < 3; ++t) {
    double prev = 1.0;
    for (double c = 0.05; c < 1.0; c += 0.1) {
      const double p = exact_prob(gt(0, 0.5) || gt(t, c) || (gt(1, 0.2) && gt(t + 2, c)));
      EXPECT_LE(p, prev + 1e-15);
      prev = p;
    }
  }
}

TEST(OracleWindow, IidNoUpcrossingInTwoSteps) {
  const WindowPredicate none = [](const WindowOutcome& w) { return w.union_upcrossings() == 0; };
  const double p = exact_window_prob(builtin_process("iid"), LevelVector{2, {0.9}}, 2, none);
  EXPECT_NEAR(p, 0.82, 1e-15);
}

TEST(OracleWindow, TrueHasProbabilityOne) {
  const WindowPredicate always = [](const WindowOutcome&) { return true; };
  for (auto name : {"iid", "ex61", "ex62"}) {
    const ProcessSpec spec = builtin_process(name);
    const LevelVector lv{4, std::vector<double>(spec.dims(), 0.8)};
    EXPECT_NEAR(exact_window_prob(spec, lv, 4, always), 1.0, 1e-14) << name;
  }
}

TEST(OracleWindow, Ex61ExactlyTwoFirstMarginUpcrossings) {
  const WindowPredicate two = [](const WindowOutcome& w) { return w.upcrossings(0) == 2; };
  const double p =
      exact_window_prob(builtin_process("ex61"), LevelVector{6, {0.9, 0.9}}, 6, two);
  EXPECT_NEAR(p, 0.2676218778, 1e-12);
}

TEST(OracleWindow, Ex62MarginExceedance) {
  const WindowPredicate first = [](const WindowOutcome& w) { return w.exceeds(1, 0); };
  const double u = 0.85;
  const double p = exact_window_prob(builtin_process("ex62"), LevelVector{3, {u, u}}, 3, first);
  EXPECT_NEAR(p, 1 - u * u * u, 1e-14);
}

TEST(OracleWindow, AgreesWithSimulation) {
  const ProcessSpec spec = builtin_process("ex61");
  const std::size_t n = 6;
  const LevelVector lv{n, {0.85, 0.9}};
  const std::vector<WindowPredicate> preds{
      [](const WindowOutcome& w) { return w.upcrossings(0) == 2; },
      [](const WindowOutcome& w) { return w.union_upcrossings() == 0; },
      [](const WindowOutcome& w) { return w.upcrossing(2, 1) && w.exceeds(4, 0); },
  };
  const std::vector<double> exact = exact_window_probs(spec, lv, n, preds);
  std::vector<std::uint64_t> hits(preds.size(), 0);
  const std::size_t draws = 200000;
  for (std::size_t r = 0; r < draws; ++r) {
    const WindowOutcome w = observe_window(generate_window(spec, n, replicate_seed(5, r)), lv);
    for (std::size_t k = 0; k < preds.size(); ++k) hits[k] += preds[k](w);
  }
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const double p = exact[k];
    const double freq = static_cast<double>(hits[k]) / draws;
    const double se = std::sqrt(p * (1 - p) / draws);
    EXPECT_LE(std::abs(freq - p), 4 * se + 1e-12) << k;
  }
}

TEST(OracleWindow, BudgetAppliesToWindows) {
  const WindowPredicate any = [](const WindowOutcome&) { return true; };
  EXPECT_THROW(exact_window_prob(builtin_process("ex61"), LevelVector{40, {0.9, 0.9}}, 40, any),
               BudgetExceeded);
}
