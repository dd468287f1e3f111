#pragma once

// Finite-n statistics for the side conditions behind the limit theorems:
// cross-margin independence of upcrossings, local anti-clustering, level
// rescaling and continuity in nu. Conditions are asymptotic, so these
// report trends over a grid of n rather than verdicts.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "upcross/estimators.hpp"
#include "upcross/levels.hpp"
#include "upcross/process.hpp"
#include "upcross/replicate.hpp"

namespace upcross {

/// Explicit block count, or floor(sqrt(n)) when empty.
using BlockRule = std::optional<std::size_t>;
std::size_t blocks_for(const BlockRule& rule, std::size_t n);

struct ConditionPoint {
  std::size_t n = 0;
  double value = 0;
  std::optional<double> std_error;
  std::uint64_t event_count = 0;
  friend bool operator==(const ConditionPoint&, const ConditionPoint&) = default;
};

struct ConditionReport {
  std::string name;
  std::vector<ConditionPoint> grid;  // strictly increasing n

  /// "vanishing" when the last value is below half the first, otherwise
  /// "stabilizing". Empty for fewer than two points.
  std::string hint() const;
  friend bool operator==(const ConditionReport&, const ConditionReport&) = default;
};

struct HSumEntry {
  std::size_t n = 0;
  std::size_t block_length = 0;
  /// sum_{j<j'} n sum_{i=1}^{r} P(A^(j)_1, A^(j')_i).
  ConditionPoint forward;
  /// The i = 1 term alone: sum_{j<j'} n P(A^(j)_1, A^(j')_1).
  ConditionPoint first_term;
  /// The mirror sum_{j<j'} n sum_{i=2}^{r} P(A^(j')_1, A^(j)_i), i.e. the
  /// higher margin upcrossing first. Not part of the textbook sum.
  ConditionPoint reverse;
  friend bool operator==(const HSumEntry&, const HSumEntry&) = default;
};

/// Pair probabilities are pooled over every offset inside the window
/// (stationarity) and over replicates. Requires d >= 2.
HSumEntry h_sum(const ProcessSpec& spec, std::span<const double> tau_prime, std::size_t n,
                std::size_t k, const SimulationSettings& settings);

/// n P(A_1, !A_2, !A_3, A_i for some i in [4, r]) on the union marks,
/// r = floor(n / k). Requires r >= 5.
ConditionPoint local_osc_stat(const ProcessSpec& spec, std::span<const double> tau_prime,
                              std::size_t n, std::size_t k,
                              const SimulationSettings& settings);

/// Runs the statistics over an increasing grid of n.
ConditionReport h_sum_report(const ProcessSpec& spec, std::span<const double> tau_prime,
                             std::span<const std::size_t> n_grid, const BlockRule& blocks,
                             const SimulationSettings& settings);
ConditionReport h_first_term_report(const ProcessSpec& spec, std::span<const double> tau_prime,
                                    std::span<const std::size_t> n_grid,
                                    const BlockRule& blocks,
                                    const SimulationSettings& settings);
ConditionReport local_osc_report(const ProcessSpec& spec, std::span<const double> tau_prime,
                                 std::span<const std::size_t> n_grid, const BlockRule& blocks,
                                 const SimulationSettings& settings);

struct ScalingReport {
  double c = 1;
  /// Nonempty blocks per window under the base and the rescaled levels.
  double base_rate = 0;
  double scaled_rate = 0;
  double ratio = 0;
  /// Total variation between the cluster-size histograms.
  double tv_distance = 0;
  ClusterSizeHistogram base_clusters;
  ClusterSizeHistogram scaled_clusters;
  friend bool operator==(const ScalingReport&, const ScalingReport&) = default;
};

/// Compares levels for n with levels for floor(n / c) on the same windows.
ScalingReport scaling_check(const ProcessSpec& spec, std::span<const double> tau_prime,
                            std::size_t n, double c, std::size_t k,
                            const SimulationSettings& settings);

struct ContinuityReport {
  std::size_t dropped_margin = 0;
  std::vector<double> epsilon;
  std::vector<Estimate> eta;  // union runs estimate at nu_dropped = epsilon
  /// Runs estimate for the process without the dropped margin.
  Estimate eta_without;
  /// |eta at the smallest epsilon - eta_without|; empty if either is undefined.
  std::optional<double> gap;
  friend bool operator==(const ContinuityReport&, const ContinuityReport&) = default;
};

/// nu_prime holds the upcrossing rates of the kept margins; its entry for
/// the dropped margin is ignored. epsilon must be positive and strictly
/// decreasing.
ContinuityReport continuity_check(const ProcessSpec& spec, std::span<const double> nu_prime,
                                  std::size_t dropped_margin,
                                  std::span<const double> epsilon, std::size_t n,
                                  std::size_t k, const SimulationSettings& settings);

}  // namespace upcross
