#include "upcross/diagnostics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "upcross/pointproc.hpp"

namespace upcross {
namespace {

// Mean of i.i.d. per-window values with the plain standard error.
ConditionPoint summarize(std::size_t n, const std::vector<double>& values,
                         std::uint64_t events) {
  ConditionPoint p;
  p.n = n;
  p.event_count = events;
  const double R = static_cast<double>(values.size());
  if (values.empty()) return p;
  p.value = std::accumulate(values.begin(), values.end(), 0.0) / R;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - p.value) * (v - p.value);
    p.std_error = std::sqrt(ss / (R - 1.0) / R);
  }
  return p;
}

std::size_t block_length(std::size_t n, std::size_t k) { return partition_blocks(n, k).r; }

void require_increasing(std::span<const std::size_t> grid) {
  if (grid.empty()) throw std::invalid_argument("n grid is empty");
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (grid[g] <= grid[g - 1]) throw std::invalid_argument("n grid must be strictly increasing");
  }
}

struct PairSums {
  double forward = 0;
  double first = 0;
  double reverse = 0;
  std::uint64_t pairs = 0;
  std::uint64_t same_time = 0;
  std::uint64_t reverse_pairs = 0;
};

}  // namespace

std::size_t blocks_for(const BlockRule& rule, std::size_t n) {
  return rule ? *rule : default_block_count(n);
}

std::string ConditionReport::hint() const {
  if (grid.size() < 2) return {};
  return grid.back().value < 0.5 * grid.front().value ? "vanishing" : "stabilizing";
}

HSumEntry h_sum(const ProcessSpec& spec, std::span<const double> tau_prime, std::size_t n,
                std::size_t k, const SimulationSettings& settings) {
  const std::size_t d = spec.dims();
  if (d < 2) throw std::invalid_argument("h_sum needs at least two margins, got d = " +
                                         std::to_string(d));
  const LevelVector levels = levels_from_tau_prime(tau_prime, n);
  const std::size_t r = block_length(n, k);
  const double dn = static_cast<double>(n);
  // Offset delta is seen at n - delta positions of a window.
  const auto weight = [&](std::size_t delta) { return dn / static_cast<double>(n - delta); };

  const auto sums = map_windows(spec, n, settings, [&](std::size_t, const SamplePath& path) {
    const UpcrossingMarks marks = mark_upcrossings(path, levels);
    std::vector<std::vector<std::size_t>> times(d);
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (marks.at(i, j)) times[j].push_back(i);
      }
    }
    PairSums s;
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t jj = j + 1; jj < d; ++jj) {
        for (std::size_t t : times[j]) {
          for (std::size_t u : times[jj]) {
            if (u >= t && u - t < r) {
              s.forward += weight(u - t);
              ++s.pairs;
              if (u == t) {
                s.first += 1.0;
                ++s.same_time;
              }
            } else if (u < t && t - u < r) {
              s.reverse += weight(t - u);
              ++s.reverse_pairs;
            }
          }
        }
      }
    }
    return s;
  });

  std::vector<double> forward, first, reverse;
  PairSums total;
  for (const auto& s : sums) {
    forward.push_back(s.forward);
    first.push_back(s.first);
    reverse.push_back(s.reverse);
    total.pairs += s.pairs;
    total.same_time += s.same_time;
    total.reverse_pairs += s.reverse_pairs;
  }
  HSumEntry out;
  out.n = n;
  out.block_length = r;
  out.forward = summarize(n, forward, total.pairs);
  out.first_term = summarize(n, first, total.same_time);
  out.reverse = summarize(n, reverse, total.reverse_pairs);
  return out;
}

ConditionPoint local_osc_stat(const ProcessSpec& spec, std::span<const double> tau_prime,
                              std::size_t n, std::size_t k,
                              const SimulationSettings& settings) {
  const LevelVector levels = levels_from_tau_prime(tau_prime, n);
  const std::size_t r = block_length(n, k);
  if (r < 5) {
    throw std::invalid_argument("block length floor(n/k) = " + std::to_string(r) +
                                " is below 5");
  }
  const std::size_t starts = n - r + 1;

  const auto counts = map_windows(spec, n, settings, [&](std::size_t, const SamplePath& path) {
    const UpcrossingMarks marks = mark_upcrossings(path, levels);
    // prefix[i] = union marks among times 1..i
    std::vector<std::uint32_t> prefix(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) prefix[i] = prefix[i - 1] + (marks.any(i) ? 1 : 0);
    std::uint64_t hits = 0;
    for (std::size_t t = 1; t <= starts; ++t) {
      if (marks.any(t) && !marks.any(t + 1) && !marks.any(t + 2) &&
          prefix[t + r - 1] > prefix[t + 2]) {
        ++hits;
      }
    }
    return hits;
  });

  std::vector<double> values;
  std::uint64_t events = 0;
  for (auto h : counts) {
    values.push_back(static_cast<double>(n) * static_cast<double>(h) /
                     static_cast<double>(starts));
    events += h;
  }
  return summarize(n, values, events);
}

ConditionReport h_sum_report(const ProcessSpec& spec, std::span<const double> tau_prime,
                             std::span<const std::size_t> n_grid, const BlockRule& blocks,
                             const SimulationSettings& settings) {
  require_increasing(n_grid);
  ConditionReport rep{"h_sum", {}};
  for (std::size_t n : n_grid) {
    rep.grid.push_back(h_sum(spec, tau_prime, n, blocks_for(blocks, n), settings).forward);
  }
  return rep;
}

ConditionReport h_first_term_report(const ProcessSpec& spec, std::span<const double> tau_prime,
                                    std::span<const std::size_t> n_grid,
                                    const BlockRule& blocks,
                                    const SimulationSettings& settings) {
  require_increasing(n_grid);
  ConditionReport rep{"h_first_term", {}};
  for (std::size_t n : n_grid) {
    rep.grid.push_back(h_sum(spec, tau_prime, n, blocks_for(blocks, n), settings).first_term);
  }
  return rep;
}

ConditionReport local_osc_report(const ProcessSpec& spec, std::span<const double> tau_prime,
                                 std::span<const std::size_t> n_grid, const BlockRule& blocks,
                                 const SimulationSettings& settings) {
  require_increasing(n_grid);
  ConditionReport rep{"local_osc", {}};
  for (std::size_t n : n_grid) {
    rep.grid.push_back(local_osc_stat(spec, tau_prime, n, blocks_for(blocks, n), settings));
  }
  return rep;
}

ScalingReport scaling_check(const ProcessSpec& spec, std::span<const double> tau_prime,
                            std::size_t n, double c, std::size_t k,
                            const SimulationSettings& settings) {
  const LevelVector base_levels = levels_from_tau_prime(tau_prime, n);
  const LevelVector scaled = scaled_levels(spec, tau_prime, n, c);
  const SimulationResult base = simulate(spec, base_levels, k, settings);
  const SimulationResult other =
      scaled == base_levels ? base : simulate(spec, scaled, k, settings);

  const auto rate = [](const SimulationResult& s) {
    return s.tallies.empty() ? 0.0
                             : static_cast<double>(s.clusters.nonempty_blocks()) /
                                   static_cast<double>(s.tallies.size());
  };
  ScalingReport out;
  out.c = c;
  out.base_rate = rate(base);
  out.scaled_rate = rate(other);
  out.ratio = out.base_rate > 0 ? out.scaled_rate / out.base_rate : 0.0;
  out.tv_distance = total_variation(base.clusters, other.clusters);
  out.base_clusters = base.clusters;
  out.scaled_clusters = other.clusters;
  return out;
}

ContinuityReport continuity_check(const ProcessSpec& spec, std::span<const double> nu_prime,
                                  std::size_t dropped_margin,
                                  std::span<const double> epsilon, std::size_t n,
                                  std::size_t k, const SimulationSettings& settings) {
  const std::size_t d = spec.dims();
  if (d < 2) throw std::invalid_argument("continuity_check needs at least two margins");
  if (dropped_margin >= d) throw std::invalid_argument("dropped margin out of range");
  if (nu_prime.size() != d) throw std::invalid_argument("nu_prime needs one entry per margin");
  if (epsilon.empty()) throw std::invalid_argument("epsilon grid is empty");
  for (std::size_t e = 0; e < epsilon.size(); ++e) {
    if (!(epsilon[e] > 0.0)) throw std::invalid_argument("epsilon values must be positive");
    if (e > 0 && !(epsilon[e] < epsilon[e - 1])) {
      throw std::invalid_argument("epsilon grid must be strictly decreasing");
    }
  }

  const auto union_runs = [&](const ProcessSpec& s, std::span<const double> nu) {
    const std::vector<double> tp = tau_prime_for_nu(s, nu);
    const SimulationResult sim = simulate(s, levels_from_tau_prime(tp, n), k, settings);
    return estimate_report(sim.tallies, limiting_rates(s, tp)).eta_runs;
  };

  ContinuityReport out;
  out.dropped_margin = dropped_margin;
  std::vector<double> nu(nu_prime.begin(), nu_prime.end());
  for (double eps : epsilon) {
    nu[dropped_margin] = eps;
    out.epsilon.push_back(eps);
    out.eta.push_back(union_runs(spec, nu));
  }

  std::vector<std::vector<int>> kept;
  std::vector<double> kept_nu;
  for (std::size_t j = 0; j < d; ++j) {
    if (j == dropped_margin) continue;
    kept.push_back(spec.lags[j]);
    kept_nu.push_back(nu_prime[j]);
  }
  out.eta_without = union_runs(make_process(kept, spec.name + "-sub"), kept_nu);
  if (out.eta.back().value && out.eta_without.value) {
    out.gap = std::abs(*out.eta.back().value - *out.eta_without.value);
  }
  return out;
}

}  // namespace upcross
