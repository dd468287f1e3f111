#include "upcross/levels.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace upcross {
namespace {

void require_dims(const ProcessSpec& spec, std::span<const double> v, const char* what) {
  if (v.size() != spec.dims()) {
    throw std::invalid_argument(std::string(what) + " has " + std::to_string(v.size()) +
                                " entries but the process has " +
                                std::to_string(spec.dims()) + " margins");
  }
}

void require_positive(std::span<const double> v, const char* what) {
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!(v[j] > 0.0) || !std::isfinite(v[j])) {
      throw std::invalid_argument(std::string(what) + "[" + std::to_string(j + 1) +
                                  "] must be positive and finite");
    }
  }
}

}  // namespace

LevelVector levels_from_tau_prime(std::span<const double> tau_prime, std::size_t n) {
  if (tau_prime.empty()) throw std::invalid_argument("tau_prime is empty");
  require_positive(tau_prime, "tau_prime");
  LevelVector out{n, {}};
  out.u.reserve(tau_prime.size());
  for (std::size_t j = 0; j < tau_prime.size(); ++j) {
    if (tau_prime[j] >= static_cast<double>(n)) {
      throw std::invalid_argument("tau_prime[" + std::to_string(j + 1) + "] = " +
                                  std::to_string(tau_prime[j]) + " must be below n = " +
                                  std::to_string(n));
    }
    out.u.push_back(1.0 - tau_prime[j] / static_cast<double>(n));
  }
  return out;
}

std::size_t upcrossing_runs(std::span<const int> lags) {
  std::set<int> times;
  for (int l : lags) times.insert(-l);
  std::size_t runs = 0;
  for (int t : times) {
    if (!times.contains(t - 1)) ++runs;
  }
  return runs;
}

RateSummary limiting_rates(const ProcessSpec& spec, std::span<const double> tau_prime) {
  require_dims(spec, tau_prime, "tau_prime");
  require_positive(tau_prime, "tau_prime");

  RateSummary out;
  out.tau_prime.assign(tau_prime.begin(), tau_prime.end());
  for (std::size_t j = 0; j < spec.dims(); ++j) {
    out.tau.push_back(static_cast<double>(spec.lags[j].size()) * tau_prime[j]);
    out.nu.push_back(static_cast<double>(upcrossing_runs(spec.lags[j])) * tau_prime[j]);
  }

  if (spec == builtin_process("ex61")) {
    out.tau_union = out.tau[0] + out.tau[1];
    out.nu_union = out.nu[0] + out.nu[1];
  } else if (spec == builtin_process("ex62")) {
    const double nu1 = out.nu[0];
    const double nu2 = out.nu[1];
    out.nu_union = (2.0 * nu2 >= nu1) ? nu1 / 2.0 + nu2 : nu1;
  } else if (spec == builtin_process("iid", spec.dims())) {
    // Every margin is Y_i itself, so the union events are those of the
    // lowest level.
    const double top = *std::max_element(tau_prime.begin(), tau_prime.end());
    out.tau_union = top;
    out.nu_union = top;
  }
  return out;
}

LevelVector scaled_levels(const ProcessSpec& spec, std::span<const double> tau_prime,
                          std::size_t n, double c) {
  require_dims(spec, tau_prime, "tau_prime");
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw std::invalid_argument("scaling constant c must be positive");
  }
  const double shrunk = std::floor(static_cast<double>(n) / c);
  if (shrunk < 2.0) {
    throw std::invalid_argument("floor(n / c) = " + std::to_string(shrunk) +
                                " is below 2");
  }
  LevelVector out = levels_from_tau_prime(tau_prime, static_cast<std::size_t>(shrunk));
  out.n = n;
  return out;
}

std::vector<double> tau_prime_for_nu(const ProcessSpec& spec, std::span<const double> nu) {
  require_dims(spec, nu, "nu");
  require_positive(nu, "nu");
  std::vector<double> out;
  for (std::size_t j = 0; j < spec.dims(); ++j) {
    out.push_back(nu[j] / static_cast<double>(upcrossing_runs(spec.lags[j])));
  }
  return out;
}

ClusterLimits cluster_limits(const ProcessSpec& spec, std::span<const double> tau_prime) {
  require_dims(spec, tau_prime, "tau_prime");
  require_positive(tau_prime, "tau_prime");
  const std::size_t d = spec.dims();

  std::vector<double> cuts(tau_prime.begin(), tau_prime.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  ClusterLimits out;
  double below = 0.0;
  for (double cut : cuts) {
    ClusterLimits::Band band;
    band.rate = cut - below;
    below = cut;
    band.exceeded.resize(d);
    band.multiplicity.resize(d);

    std::set<int> exceed_union;
    std::set<int> up_union;
    for (std::size_t j = 0; j < d; ++j) {
      band.exceeded[j] = tau_prime[j] >= cut;
      if (!band.exceeded[j]) continue;
      std::set<int> times;
      for (int l : spec.lags[j]) times.insert(-l);
      for (int t : times) {
        exceed_union.insert(t);
        if (!times.contains(t - 1)) {
          up_union.insert(t - 1);
          ++band.multiplicity[j];
        }
      }
    }
    band.union_exceedances = static_cast<unsigned>(exceed_union.size());
    band.union_upcrossings = static_cast<unsigned>(up_union.size());
    for (int t : up_union) {
      if (!up_union.contains(t + 1) && !up_union.contains(t + 2)) ++band.runs_heads;
    }

    out.cluster_rate += band.rate;
    out.nu_union += band.rate * band.union_upcrossings;
    out.tau_union += band.rate * band.union_exceedances;
    out.runs_limit += band.rate * band.runs_heads;
    out.bands.push_back(std::move(band));
  }

  out.eta = out.cluster_rate / out.nu_union;
  out.theta = out.cluster_rate / out.tau_union;
  out.phi = std::exp(-out.nu_union);
  out.runs_limit /= out.nu_union;
  for (const auto& band : out.bands) {
    out.multiplicity[band.multiplicity] += band.rate / out.cluster_rate;
    out.cluster_size[band.union_upcrossings] += band.rate / out.cluster_rate;
  }
  return out;
}

}  // namespace upcross
