#pragma once

// Moving-maximum processes driven by a single i.i.d. Uniform(0,1) stream.
//
// Margin j at time i is max{ Y_{i+l} : l in lags[j] }. Time indices are
// 1-based (rows 1..n+1 of a window), margins are 0-based.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace upcross {

struct ProcessSpec {
  std::string name;
  /// One sorted, duplicate-free lag set per margin.
  std::vector<std::vector<int>> lags;

  std::size_t dims() const noexcept { return lags.size(); }
  int min_lag() const noexcept;
  int max_lag() const noexcept;

  /// Two specs describe the same process when their lag sets agree; the
  /// name is only a label.
  friend bool operator==(const ProcessSpec& a, const ProcessSpec& b) {
    return a.lags == b.lags;
  }
};

/// "iid" (d margins, all lag {0}), "ex61" and "ex62".
ProcessSpec builtin_process(std::string_view name, std::size_t d = 1);

/// Names accepted by builtin_process.
std::span<const std::string_view> builtin_names() noexcept;

ProcessSpec make_process(std::vector<std::vector<int>> lag_sets,
                         std::string name = "custom");

/// Splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of replicate `replicate` under `master`:
///   mix64(master ^ mix64(replicate + 0x9E3779B97F4A7C15)).
/// Depends only on (master, replicate), so replicate windows can be built
/// in any order or on any worker.
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate) noexcept;

/// Innovations Y_t for t in [first, first + values.size()).
struct InnovationStream {
  int first = 0;
  std::vector<double> values;

  int last() const noexcept { return first + static_cast<int>(values.size()) - 1; }
  double at(int t) const { return values.at(static_cast<std::size_t>(t - first)); }
};

/// Draws the innovations needed by rows 1..n+1 of `spec`: indices
/// 1 + min_lag through n + 1 + max_lag, in increasing order, from a
/// std::mt19937_64 seeded with `seed`. Each draw maps to (x >> 11) * 2^-53.
InnovationStream draw_innovations(const ProcessSpec& spec, std::size_t n,
                                  std::uint64_t seed);

struct SamplePath {
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  /// (n+1) x d, row-major; row 0 holds time 1.
  std::vector<double> values;

  double at(std::size_t time, std::size_t margin) const noexcept {
    return values[(time - 1) * d + margin];
  }
};

/// Deterministic in (spec, n, seed). Requires n >= 2.
SamplePath generate_window(const ProcessSpec& spec, std::size_t n, std::uint64_t seed);

/// Same as generate_window but reuses the storage of `path` and `scratch`.
void generate_window_into(const ProcessSpec& spec, std::size_t n, std::uint64_t seed,
                          SamplePath& path, InnovationStream& scratch);

}  // namespace upcross
