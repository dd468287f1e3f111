#include "upcross/estimators.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace upcross {
namespace {

// Delete-one jackknife standard error of f over additive per-replicate parts.
template <class Part, class F>
std::optional<double> jackknife_se(std::span<const Part> parts, Part total, F&& f) {
  const std::size_t R = parts.size();
  if (R < 2) return std::nullopt;
  std::vector<double> loo(R);
  for (std::size_t r = 0; r < R; ++r) {
    total -= parts[r];
    const std::optional<double> v = f(total);
    total += parts[r];
    if (!v || !std::isfinite(*v)) return std::nullopt;
    loo[r] = *v;
  }
  const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / static_cast<double>(R);
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  return std::sqrt(static_cast<double>(R - 1) / static_cast<double>(R) * ss);
}

template <class Part, class F>
Estimate jackknife_estimate(std::span<const Part> parts, F&& f, std::uint64_t events,
                            bool is_index) {
  Part total{};
  for (const auto& p : parts) total += p;
  Estimate out;
  out.event_count = events;
  out.value = f(total);
  if (!out.value || !std::isfinite(*out.value)) {
    out.value.reset();
    return out;
  }
  out.std_error = jackknife_se(parts, total, f);
  if (is_index) out.out_of_range = *out.value < 0.0 || *out.value > 1.0;
  return out;
}

std::optional<double> ratio(const RatioTally& t) {
  if (t.denominator == 0) return std::nullopt;
  return static_cast<double>(t.numerator) / static_cast<double>(t.denominator);
}

// Windows-with-property counter for the one-bit-per-window estimators.
struct BitCount {
  std::uint64_t hits = 0;
  std::uint64_t windows = 0;
  BitCount& operator+=(const BitCount& o) noexcept {
    hits += o.hits;
    windows += o.windows;
    return *this;
  }
  BitCount& operator-=(const BitCount& o) noexcept {
    hits -= o.hits;
    windows -= o.windows;
    return *this;
  }
};

std::optional<double> log_fraction(std::uint64_t hits, std::uint64_t windows) {
  if (windows == 0 || hits == 0 || hits == windows) return std::nullopt;
  return std::log(static_cast<double>(hits) / static_cast<double>(windows));
}

std::vector<BitCount> bit_counts(std::span<const std::uint8_t> flags) {
  std::vector<BitCount> parts;
  parts.reserve(flags.size());
  for (auto f : flags) parts.push_back({f ? 1u : 0u, 1});
  return parts;
}

RatioTally runs_over(std::size_t n, auto&& marked, bool check_next) {
  RatioTally t;
  if (n < 3) return t;
  for (std::size_t i = 1; i + 2 <= n; ++i) {
    if (!marked(i)) continue;
    ++t.denominator;
    if ((!check_next || !marked(i + 1)) && !marked(i + 2)) ++t.numerator;
  }
  return t;
}

void add_vec(std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b, bool sub) {
  if (a.size() < b.size()) a.resize(b.size(), 0);
  for (std::size_t j = 0; j < b.size(); ++j) a[j] = sub ? a[j] - b[j] : a[j] + b[j];
}

}  // namespace

RatioTally union_runs_tally(std::span<const std::uint8_t> union_marks) {
  return runs_over(
      union_marks.size(), [&](std::size_t i) { return union_marks[i - 1] != 0; }, true);
}

RatioTally union_runs_tally(const UpcrossingMarks& marks) {
  return union_runs_tally(marks.union_marks);
}

RatioTally marginal_runs_tally(const UpcrossingMarks& marks, std::size_t margin) {
  if (margin >= marks.d) throw std::out_of_range("margin index out of range");
  return runs_over(
      marks.n, [&](std::size_t i) { return marks.at(i, margin); }, false);
}

Estimate runs_estimator(std::span<const RatioTally> per_replicate) {
  std::uint64_t events = 0;
  for (const auto& t : per_replicate) events += t.denominator;
  return jackknife_estimate(per_replicate, ratio, events, true);
}

Estimate runs_estimator_multivariate(std::span<const UpcrossingMarks> replicates) {
  std::vector<RatioTally> tallies;
  for (const auto& m : replicates) tallies.push_back(union_runs_tally(m));
  return runs_estimator(tallies);
}

Estimate runs_estimator_marginal(std::span<const UpcrossingMarks> replicates,
                                 std::size_t margin) {
  std::vector<RatioTally> tallies;
  for (const auto& m : replicates) tallies.push_back(marginal_runs_tally(m, margin));
  return runs_estimator(tallies);
}

double combine_marginal(std::span<const double> eta, std::span<const double> nu) {
  if (eta.size() != nu.size() || eta.empty()) {
    throw std::invalid_argument("eta and nu must have the same nonzero length");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < nu.size(); ++j) {
    if (!(nu[j] > 0.0)) {
      throw std::invalid_argument("nu[" + std::to_string(j + 1) + "] must be positive");
    }
    num += nu[j] * eta[j];
    den += nu[j];
  }
  return num / den;
}

Estimate blocks_estimator(const ClusterSizeHistogram& clusters) {
  Estimate out;
  out.event_count = clusters.nonempty_blocks();
  if (!clusters.defined()) return out;
  out.value = 1.0 / clusters.mean();
  out.out_of_range = *out.value > 1.0;
  return out;
}

Estimate phi_hat(std::span<const UpcrossingMarks> replicates) {
  std::vector<BitCount> parts;
  std::uint64_t events = 0;
  for (const auto& m : replicates) {
    parts.push_back({m.union_count(), 1});
    events += parts.back().hits;
  }
  if (parts.empty()) return Estimate{};
  return jackknife_estimate(
      std::span<const BitCount>(parts),
      [](const BitCount& t) -> std::optional<double> {
        if (t.windows == 0) return std::nullopt;
        return std::exp(-static_cast<double>(t.hits) / static_cast<double>(t.windows));
      },
      events, false);
}

Estimate eta_empty(std::span<const std::uint8_t> window_has_no_upcrossing, double phi) {
  const auto parts = bit_counts(window_has_no_upcrossing);
  const double log_phi = std::log(phi);
  std::uint64_t events = 0;
  for (const auto& p : parts) events += p.hits;
  if (!(phi > 0.0 && phi < 1.0)) {
    Estimate out;
    out.event_count = events;
    return out;
  }
  return jackknife_estimate(
      std::span<const BitCount>(parts),
      [&](const BitCount& t) -> std::optional<double> {
        auto lp = log_fraction(t.hits, t.windows);
        if (!lp) return std::nullopt;
        return *lp / log_phi;
      },
      events, true);
}

Estimate theta_direct(std::span<const std::uint8_t> window_has_no_exceedance,
                      double tau_union) {
  const auto parts = bit_counts(window_has_no_exceedance);
  std::uint64_t events = 0;
  for (const auto& p : parts) events += p.hits;
  if (!(tau_union > 0.0)) {
    Estimate out;
    out.event_count = events;
    return out;
  }
  return jackknife_estimate(
      std::span<const BitCount>(parts),
      [&](const BitCount& t) -> std::optional<double> {
        auto lp = log_fraction(t.hits, t.windows);
        if (!lp) return std::nullopt;
        return *lp / -tau_union;
      },
      events, true);
}

double theta_from_eta(double eta, double nu_union, double tau_union) {
  if (!(tau_union > 0.0)) throw std::invalid_argument("tau_union must be positive");
  if (!(nu_union > 0.0)) throw std::invalid_argument("nu_union must be positive");
  return eta * nu_union / tau_union;
}

ReplicateTally& ReplicateTally::operator+=(const ReplicateTally& o) {
  union_runs += o.union_runs;
  if (margin_runs.size() < o.margin_runs.size()) margin_runs.resize(o.margin_runs.size());
  for (std::size_t j = 0; j < o.margin_runs.size(); ++j) margin_runs[j] += o.margin_runs[j];
  union_marks += o.union_marks;
  add_vec(margin_marks, o.margin_marks, false);
  union_exceedances += o.union_exceedances;
  add_vec(margin_exceedances, o.margin_exceedances, false);
  windows += o.windows;
  empty_windows += o.empty_windows;
  no_exceedance_windows += o.no_exceedance_windows;
  nonempty_blocks += o.nonempty_blocks;
  block_events += o.block_events;
  return *this;
}

ReplicateTally& ReplicateTally::operator-=(const ReplicateTally& o) {
  union_runs -= o.union_runs;
  for (std::size_t j = 0; j < o.margin_runs.size(); ++j) margin_runs[j] -= o.margin_runs[j];
  union_marks -= o.union_marks;
  add_vec(margin_marks, o.margin_marks, true);
  union_exceedances -= o.union_exceedances;
  add_vec(margin_exceedances, o.margin_exceedances, true);
  windows -= o.windows;
  empty_windows -= o.empty_windows;
  no_exceedance_windows -= o.no_exceedance_windows;
  nonempty_blocks -= o.nonempty_blocks;
  block_events -= o.block_events;
  return *this;
}

ReplicateTally tally_window(const UpcrossingMarks& marks, const ExceedanceCounts& exceedances,
                            const BlockCounts& blocks) {
  ReplicateTally t;
  t.union_runs = union_runs_tally(marks);
  for (std::size_t j = 0; j < marks.d; ++j) {
    t.margin_runs.push_back(marginal_runs_tally(marks, j));
    t.margin_marks.push_back(marks.counts[j]);
    t.margin_exceedances.push_back(exceedances.margin[j]);
  }
  t.union_marks = marks.union_count();
  t.union_exceedances = exceedances.union_rows;
  t.windows = 1;
  t.empty_windows = t.union_marks == 0 ? 1 : 0;
  t.no_exceedance_windows = exceedances.union_rows == 0 ? 1 : 0;
  for (auto c : blocks.union_full) {
    if (c == 0) continue;
    ++t.nonempty_blocks;
    t.block_events += c;
  }
  return t;
}

WindowBlocks sparse_blocks(const BlockCounts& blocks) {
  WindowBlocks out;
  out.total_blocks = blocks.k;
  for (std::size_t s = 0; s < blocks.k; ++s) {
    if (blocks.union_full[s] == 0) continue;
    out.nonempty.emplace_back(blocks.block(s + 1), blocks.union_full[s]);
  }
  return out;
}

SimulationResult simulate(const ProcessSpec& spec, const LevelVector& levels, std::size_t k,
                          const SimulationSettings& settings) {
  const std::size_t n = levels.n;
  const BlockScheme scheme = partition_blocks(n, k);
  auto per_window = map_windows(spec, n, settings, [&](std::size_t, const SamplePath& path) {
    const UpcrossingMarks marks = mark_upcrossings(path, levels);
    const BlockCounts blocks = block_counts(marks, scheme);
    return std::make_pair(tally_window(marks, count_exceedances(path, levels), blocks),
                          sparse_blocks(blocks));
  });

  SimulationResult out;
  out.n = n;
  out.k = k;
  out.multiplicity = MultiplicityHistogram(spec.dims());
  out.tallies.reserve(per_window.size());
  const CountVector zero(spec.dims(), 0);
  for (auto& [tally, blocks] : per_window) {
    out.tallies.push_back(std::move(tally));
    for (const auto& [y, size] : blocks.nonempty) {
      out.multiplicity.add_block(y);
      out.clusters.add_block(size);
    }
    const std::size_t empty = blocks.total_blocks - blocks.nonempty.size();
    out.multiplicity.add_blocks(zero, empty);
    out.clusters.add_blocks(0, empty);
  }
  return out;
}

EstimateReport estimate_report(std::span<const ReplicateTally> tallies,
                               const RateSummary& rates) {
  EstimateReport rep;
  rep.replicates = tallies.size();
  if (tallies.empty()) return rep;

  ReplicateTally total;
  for (const auto& t : tallies) total += t;
  const std::size_t d = total.margin_runs.size();
  const auto per_window = [](std::uint64_t count, const ReplicateTally& t) {
    return static_cast<double>(count) / static_cast<double>(t.windows);
  };

  rep.eta_runs = jackknife_estimate(
      tallies, [](const ReplicateTally& t) { return ratio(t.union_runs); },
      total.union_runs.denominator, true);

  for (std::size_t j = 0; j < d; ++j) {
    rep.eta_marginal.push_back(jackknife_estimate(
        tallies, [j](const ReplicateTally& t) { return ratio(t.margin_runs[j]); },
        total.margin_runs[j].denominator, true));
  }

  rep.eta_combined = jackknife_estimate(
      tallies,
      [&](const ReplicateTally& t) -> std::optional<double> {
        std::vector<double> eta;
        for (std::size_t j = 0; j < d; ++j) {
          auto e = ratio(t.margin_runs[j]);
          if (!e) return std::nullopt;
          eta.push_back(*e);
        }
        return combine_marginal(eta, rates.nu);
      },
      total.union_runs.denominator, true);

  rep.eta_blocks = jackknife_estimate(
      tallies,
      [](const ReplicateTally& t) -> std::optional<double> {
        if (t.block_events == 0) return std::nullopt;
        return static_cast<double>(t.nonempty_blocks) / static_cast<double>(t.block_events);
      },
      total.nonempty_blocks, true);

  rep.nu_hat = jackknife_estimate(
      tallies,
      [&](const ReplicateTally& t) -> std::optional<double> {
        return per_window(t.union_marks, t);
      },
      total.union_marks, false);
  rep.tau_hat = jackknife_estimate(
      tallies,
      [&](const ReplicateTally& t) -> std::optional<double> {
        return per_window(t.union_exceedances, t);
      },
      total.union_exceedances, false);
  for (std::size_t j = 0; j < d; ++j) {
    rep.nu_hat_margin.push_back(jackknife_estimate(
        tallies,
        [&](const ReplicateTally& t) -> std::optional<double> {
          return per_window(t.margin_marks[j], t);
        },
        total.margin_marks[j], false));
    rep.tau_hat_margin.push_back(jackknife_estimate(
        tallies,
        [&](const ReplicateTally& t) -> std::optional<double> {
          return per_window(t.margin_exceedances[j], t);
        },
        total.margin_exceedances[j], false));
  }

  rep.phi_hat = jackknife_estimate(
      tallies,
      [&](const ReplicateTally& t) -> std::optional<double> {
        return std::exp(-per_window(t.union_marks, t));
      },
      total.union_marks, false);
  rep.psi_hat = jackknife_estimate(
      tallies,
      [&](const ReplicateTally& t) -> std::optional<double> {
        return std::exp(-per_window(t.union_exceedances, t));
      },
      total.union_exceedances, false);

  rep.eta_empty = jackknife_estimate(
      tallies,
      [&](const ReplicateTally& t) -> std::optional<double> {
        auto lp = log_fraction(t.empty_windows, t.windows);
        if (!lp || t.union_marks == 0) return std::nullopt;
        return *lp / -per_window(t.union_marks, t);
      },
      total.empty_windows, true);

  // Closed-form union rates take precedence over the empirical ones.
  const auto nu_used = [&](const ReplicateTally& t) {
    return rates.nu_union ? *rates.nu_union : per_window(t.union_marks, t);
  };
  const auto tau_used = [&](const ReplicateTally& t) {
    return rates.tau_union ? *rates.tau_union : per_window(t.union_exceedances, t);
  };
  rep.nu_union_used = nu_used(total);
  rep.tau_union_used = tau_used(total);

  rep.theta_direct = jackknife_estimate(
      tallies,
      [&](const ReplicateTally& t) -> std::optional<double> {
        auto lp = log_fraction(t.no_exceedance_windows, t.windows);
        const double tau = tau_used(t);
        if (!lp || !(tau > 0.0)) return std::nullopt;
        return *lp / -tau;
      },
      total.no_exceedance_windows, true);

  rep.theta_from_eta = jackknife_estimate(
      tallies,
      [&](const ReplicateTally& t) -> std::optional<double> {
        auto eta = ratio(t.union_runs);
        const double nu = nu_used(t);
        const double tau = tau_used(t);
        if (!eta || !(nu > 0.0) || !(tau > 0.0)) return std::nullopt;
        return theta_from_eta(*eta, nu, tau);
      },
      total.union_runs.denominator, true);

  return rep;
}

DecompositionCheck multiplicity_decomposition(const MultiplicityHistogram& hist,
                                              std::span<const double> nu,
                                              std::span<const double> eta_marginal) {
  const std::size_t d = hist.dims();
  if (nu.size() != d || eta_marginal.size() != d) {
    throw std::invalid_argument("nu and eta must have one entry per margin");
  }
  DecompositionCheck out;
  out.multi_component_mass = hist.multi_component_mass();

  double weight_total = 0.0;
  for (std::size_t j = 0; j < d; ++j) weight_total += nu[j] * eta_marginal[j];
  for (std::size_t j = 0; j < d; ++j) {
    const double w = nu[j] * eta_marginal[j] / weight_total;
    const MultiplicityHistogram marginal = hist.project(j);
    for (const auto& [y, count] : marginal.table()) {
      CountVector axis(d, 0);
      axis[j] = y[0];
      const double dev = std::abs(hist.frequency(axis) - w * marginal.frequency(y));
      out.max_deviation = std::max(out.max_deviation, dev);
    }
  }
  return out;
}

}  // namespace upcross
