#include "upcross/process.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <sstream>
#include <stdexcept>

namespace upcross {
namespace {

constexpr std::array<std::string_view, 3> kBuiltinNames{"iid", "ex61", "ex62"};

void fill_innovations(const ProcessSpec& spec, std::size_t n, std::uint64_t seed,
                      InnovationStream& out) {
  const int first = 1 + spec.min_lag();
  const int last = static_cast<int>(n) + 1 + spec.max_lag();
  out.first = first;
  out.values.resize(static_cast<std::size_t>(last - first + 1));
  std::mt19937_64 engine(seed);
  for (double& y : out.values) {
    y = static_cast<double>(engine() >> 11) * 0x1.0p-53;
  }
}

}  // namespace

int ProcessSpec::min_lag() const noexcept {
  int lo = 0;
  bool seen = false;
  for (const auto& set : lags) {
    for (int l : set) {
      lo = seen ? std::min(lo, l) : l;
      seen = true;
    }
  }
  return lo;
}

int ProcessSpec::max_lag() const noexcept {
  int hi = 0;
  bool seen = false;
  for (const auto& set : lags) {
    for (int l : set) {
      hi = seen ? std::max(hi, l) : l;
      seen = true;
    }
  }
  return hi;
}

std::span<const std::string_view> builtin_names() noexcept { return kBuiltinNames; }

ProcessSpec builtin_process(std::string_view name, std::size_t d) {
  if (name == "iid") {
    if (d < 1) throw std::invalid_argument("builtin 'iid' needs d >= 1");
    return make_process(std::vector<std::vector<int>>(d, std::vector<int>{0}), "iid");
  }
  if (name == "ex61") return make_process({{0, -2, -3}, {1}}, "ex61");
  if (name == "ex62") return make_process({{0, -2, -3}, {0}}, "ex62");

  std::ostringstream msg;
  msg << "unknown process '" << name << "'; valid names:";
  for (auto valid : kBuiltinNames) msg << ' ' << valid;
  throw std::invalid_argument(msg.str());
}

ProcessSpec make_process(std::vector<std::vector<int>> lag_sets, std::string name) {
  if (lag_sets.empty()) throw std::invalid_argument("process needs at least one margin");
  for (std::size_t j = 0; j < lag_sets.size(); ++j) {
    auto& set = lag_sets[j];
    if (set.empty()) {
      throw std::invalid_argument("lag set of margin " + std::to_string(j + 1) + " is empty");
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
  return ProcessSpec{std::move(name), std::move(lag_sets)};
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate) noexcept {
  return mix64(master ^ mix64(replicate + 0x9E3779B97F4A7C15ULL));
}

InnovationStream draw_innovations(const ProcessSpec& spec, std::size_t n,
                                  std::uint64_t seed) {
  InnovationStream out;
  fill_innovations(spec, n, seed, out);
  return out;
}

void generate_window_into(const ProcessSpec& spec, std::size_t n, std::uint64_t seed,
                          SamplePath& path, InnovationStream& scratch) {
  if (n < 2) throw std::invalid_argument("window length n must be >= 2");
  fill_innovations(spec, n, seed, scratch);

  const std::size_t d = spec.dims();
  path.n = n;
  path.d = d;
  path.seed = seed;
  path.values.resize((n + 1) * d);

  const double* y = scratch.values.data();
  for (std::size_t j = 0; j < d; ++j) {
    const auto& lags = spec.lags[j];
    // Row for time i reads y[i + l - first].
    const std::ptrdiff_t base = 1 - scratch.first;
    for (std::size_t row = 0; row <= n; ++row) {
      const std::ptrdiff_t at = static_cast<std::ptrdiff_t>(row) + base;
      double m = y[at + lags[0]];
      for (std::size_t k = 1; k < lags.size(); ++k) m = std::max(m, y[at + lags[k]]);
      path.values[row * d + j] = m;
    }
  }
}

SamplePath generate_window(const ProcessSpec& spec, std::size_t n, std::uint64_t seed) {
  SamplePath path;
  InnovationStream scratch;
  generate_window_into(spec, n, seed, path, scratch);
  return path;
}

}  // namespace upcross
