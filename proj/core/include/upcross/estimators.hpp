#pragma once

// Estimators of the upcrossings index eta(nu), the extremal index theta(tau)
// and the associated limits phi(nu), Psi(tau).
//
// Pooled quantities are built from per-replicate count tallies. Standard
// errors are delete-one jackknife over replicates (windows are i.i.d.;
// indices inside a window are not).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "upcross/levels.hpp"
#include "upcross/pointproc.hpp"
#include "upcross/process.hpp"
#include "upcross/replicate.hpp"

namespace upcross {

struct Estimate {
  /// Absent when the estimator is undefined (zero denominator, degenerate
  /// probability).
  std::optional<double> value;
  std::optional<double> std_error;
  std::uint64_t event_count = 0;
  /// Set for index estimates outside [0, 1]; the value is never clamped.
  bool out_of_range = false;

  bool defined() const noexcept { return value.has_value(); }
  friend bool operator==(const Estimate&, const Estimate&) = default;
};

struct RatioTally {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;

  RatioTally& operator+=(const RatioTally& o) noexcept {
    numerator += o.numerator;
    denominator += o.denominator;
    return *this;
  }
  RatioTally& operator-=(const RatioTally& o) noexcept {
    numerator -= o.numerator;
    denominator -= o.denominator;
    return *this;
  }
  friend bool operator==(const RatioTally&, const RatioTally&) = default;
};

/// Numerator #{i : A_i, !A_{i+1}, !A_{i+2}}, denominator #{i : A_i}, over
/// i = 1..n-2.
RatioTally union_runs_tally(const UpcrossingMarks& marks);
RatioTally union_runs_tally(std::span<const std::uint8_t> union_marks);

/// Numerator #{i : marks_j(i), !marks_j(i+2)}, denominator #{i : marks_j(i)},
/// over i = 1..n-2.
RatioTally marginal_runs_tally(const UpcrossingMarks& marks, std::size_t margin);

/// Pooled numerator / denominator with jackknife standard error.
Estimate runs_estimator(std::span<const RatioTally> per_replicate);

Estimate runs_estimator_multivariate(std::span<const UpcrossingMarks> replicates);
Estimate runs_estimator_marginal(std::span<const UpcrossingMarks> replicates,
                                 std::size_t margin);

/// sum_j nu_j eta_j / sum_j nu_j. Every nu_j must be positive.
double combine_marginal(std::span<const double> eta, std::span<const double> nu);

/// 1 / mean cluster size; undefined for an empty histogram.
Estimate blocks_estimator(const ClusterSizeHistogram& clusters);

/// exp(-n P(A_1)) with P(A_1) the pooled per-index union frequency.
Estimate phi_hat(std::span<const UpcrossingMarks> replicates);

/// log P(S_n([0,1]) = 0) / log phi, from one indicator per window.
Estimate eta_empty(std::span<const std::uint8_t> window_has_no_upcrossing, double phi);

/// log P(M_n <= u_n) / (-tau_union), from one indicator per window.
Estimate theta_direct(std::span<const std::uint8_t> window_has_no_exceedance,
                      double tau_union);

/// eta * nu_union / tau_union. tau_union must be positive.
double theta_from_eta(double eta, double nu_union, double tau_union);

/// Everything the report needs from one window.
struct ReplicateTally {
  RatioTally union_runs;
  std::vector<RatioTally> margin_runs;
  std::uint64_t union_marks = 0;
  std::vector<std::uint64_t> margin_marks;
  std::uint64_t union_exceedances = 0;
  std::vector<std::uint64_t> margin_exceedances;
  std::uint64_t windows = 0;
  std::uint64_t empty_windows = 0;          // no union upcrossing
  std::uint64_t no_exceedance_windows = 0;  // M_n <= u_n
  std::uint64_t nonempty_blocks = 0;
  std::uint64_t block_events = 0;           // union events in nonempty full blocks

  ReplicateTally& operator+=(const ReplicateTally& o);
  ReplicateTally& operator-=(const ReplicateTally& o);
  friend bool operator==(const ReplicateTally&, const ReplicateTally&) = default;
};

ReplicateTally tally_window(const UpcrossingMarks& marks, const ExceedanceCounts& exceedances,
                            const BlockCounts& blocks);

/// Sparse record of one window's nonempty full blocks, for histograms.
struct WindowBlocks {
  std::size_t total_blocks = 0;
  std::vector<std::pair<CountVector, std::uint32_t>> nonempty;  // (counts, union count)
};

WindowBlocks sparse_blocks(const BlockCounts& blocks);

struct SimulationResult {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<ReplicateTally> tallies;
  MultiplicityHistogram multiplicity;
  ClusterSizeHistogram clusters;
};

/// Simulates settings.replicates windows and collects tallies and pooled
/// block histograms.
SimulationResult simulate(const ProcessSpec& spec, const LevelVector& levels, std::size_t k,
                          const SimulationSettings& settings);

struct EstimateReport {
  Estimate eta_runs;
  std::vector<Estimate> eta_marginal;
  Estimate eta_combined;
  Estimate eta_blocks;
  Estimate eta_empty;
  Estimate theta_direct;
  Estimate theta_from_eta;
  Estimate phi_hat;
  Estimate psi_hat;
  /// Empirical n P(union upcrossing) and n P(union exceedance).
  Estimate nu_hat;
  Estimate tau_hat;
  std::vector<Estimate> nu_hat_margin;
  std::vector<Estimate> tau_hat_margin;
  /// Rates used by theta_direct / theta_from_eta (closed form when known).
  double nu_union_used = 0;
  double tau_union_used = 0;
  std::size_t replicates = 0;

  friend bool operator==(const EstimateReport&, const EstimateReport&) = default;
};

/// n P(A_1) is estimated as the mean union count per window.
EstimateReport estimate_report(std::span<const ReplicateTally> tallies,
                               const RateSummary& rates);

struct DecompositionCheck {
  /// Mass of count vectors with two or more nonzero components.
  double multi_component_mass = 0;
  /// max over j, y of |Pi(y e_j) - w_j Pi_j(y)|, w_j = nu_j eta_j / sum nu eta.
  double max_deviation = 0;
};

DecompositionCheck multiplicity_decomposition(const MultiplicityHistogram& hist,
                                              std::span<const double> nu,
                                              std::span<const double> eta_marginal);

}  // namespace upcross
