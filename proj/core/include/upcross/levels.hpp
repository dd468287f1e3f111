#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "upcross/process.hpp"

namespace upcross {

struct LevelVector {
  /// Window length the levels are applied to.
  std::size_t n = 0;
  std::vector<double> u;

  friend bool operator==(const LevelVector&, const LevelVector&) = default;
};

/// u_j = 1 - tau'_j / n. Requires 0 < tau'_j < n.
LevelVector levels_from_tau_prime(std::span<const double> tau_prime, std::size_t n);

/// Number of maximal runs of consecutive integers in { -l : l in lags }.
/// A single innovation above the level makes the margin exceed at times
/// t - l; each run of that set is entered by exactly one upcrossing.
std::size_t upcrossing_runs(std::span<const int> lags);

struct RateSummary {
  std::vector<double> tau_prime;
  /// tau_j = |L_j| tau'_j, limiting mean exceedance count.
  std::vector<double> tau;
  /// nu_j = runs(L_j) tau'_j, limiting mean upcrossing count.
  std::vector<double> nu;
  /// Limits of n P(union upcrossing) / n P(union exceedance), only where a
  /// closed form is known for the built-in process.
  std::optional<double> nu_union;
  std::optional<double> tau_union;

  friend bool operator==(const RateSummary&, const RateSummary&) = default;
};

RateSummary limiting_rates(const ProcessSpec& spec, std::span<const double> tau_prime);

/// Levels calibrated for window length floor(n / c), applied to windows of
/// length n. Requires c > 0 and floor(n / c) >= 2.
LevelVector scaled_levels(const ProcessSpec& spec, std::span<const double> tau_prime,
                          std::size_t n, double c);

/// tau'_j = nu_j / runs(L_j).
std::vector<double> tau_prime_for_nu(const ProcessSpec& spec, std::span<const double> nu);

/// Asymptotic cluster structure of a moving-maximum process.
///
/// Clusters come from single innovations above the lowest level. Sorting
/// the distinct tau'_j splits that tail into bands; inside a band the set
/// of exceeded margins is fixed, so the cluster it produces (exceedance
/// times, upcrossing times, count vector) follows from the lag sets alone.
struct ClusterLimits {
  struct Band {
    double rate = 0;                    // n P(Y in band)
    std::vector<bool> exceeded;         // margins whose level the band clears
    std::vector<unsigned> multiplicity; // upcrossings per margin
    unsigned union_upcrossings = 0;
    unsigned union_exceedances = 0;
    /// Union upcrossings not followed by another one within two steps.
    unsigned runs_heads = 0;
  };

  std::vector<Band> bands;
  double cluster_rate = 0;  // max tau'
  double nu_union = 0;
  double tau_union = 0;
  double eta = 0;           // cluster_rate / nu_union
  double theta = 0;         // cluster_rate / tau_union
  double phi = 0;           // exp(-nu_union)
  /// Limit of the lag-2 runs ratio; equals eta when no upcrossing cluster
  /// has an internal gap of three or more.
  double runs_limit = 0;
  std::map<std::vector<unsigned>, double> multiplicity;
  std::map<unsigned, double> cluster_size;
};

ClusterLimits cluster_limits(const ProcessSpec& spec, std::span<const double> tau_prime);

}  // namespace upcross
