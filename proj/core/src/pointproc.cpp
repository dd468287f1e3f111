#include "upcross/pointproc.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace upcross {

std::size_t UpcrossingMarks::union_count() const noexcept {
  std::size_t total = 0;
  for (auto m : union_marks) total += m;
  return total;
}

UpcrossingMarks mark_upcrossings(const SamplePath& path, const LevelVector& levels) {
  if (levels.n != path.n) {
    throw std::invalid_argument("levels are calibrated for n = " + std::to_string(levels.n) +
                                " but the path has n = " + std::to_string(path.n));
  }
  if (levels.u.size() != path.d) {
    throw std::invalid_argument("level vector has " + std::to_string(levels.u.size()) +
                                " entries for a " + std::to_string(path.d) + "-margin path");
  }
  const std::size_t n = path.n;
  const std::size_t d = path.d;
  UpcrossingMarks out;
  out.n = n;
  out.d = d;
  out.marks.assign(n * d, 0);
  out.union_marks.assign(n, 0);
  out.counts.assign(d, 0);

  const double* x = path.values.data();
  for (std::size_t j = 0; j < d; ++j) {
    const double u = levels.u[j];
    std::size_t count = 0;
    bool below = x[j] <= u;
    for (std::size_t row = 0; row < n; ++row) {
      const bool next_below = x[(row + 1) * d + j] <= u;
      if (below && !next_below) {
        out.marks[row * d + j] = 1;
        out.union_marks[row] = 1;
        ++count;
      }
      below = next_below;
    }
    out.counts[j] = count;
  }
  return out;
}

UpcrossingMarks marks_from_matrix(std::size_t n, std::size_t d,
                                  std::span<const std::uint8_t> matrix) {
  if (matrix.size() != n * d) throw std::invalid_argument("mark matrix is not n x d");
  UpcrossingMarks out;
  out.n = n;
  out.d = d;
  out.marks.assign(matrix.begin(), matrix.end());
  out.union_marks.assign(n, 0);
  out.counts.assign(d, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (matrix[i * d + j]) {
        out.marks[i * d + j] = 1;
        out.union_marks[i] = 1;
        ++out.counts[j];
      }
    }
  }
  return out;
}

ExceedanceCounts count_exceedances(const SamplePath& path, const LevelVector& levels) {
  if (levels.u.size() != path.d) throw std::invalid_argument("level vector dimension mismatch");
  ExceedanceCounts out;
  out.margin.assign(path.d, 0);
  for (std::size_t row = 0; row < path.n; ++row) {
    bool any = false;
    for (std::size_t j = 0; j < path.d; ++j) {
      if (path.values[row * path.d + j] > levels.u[j]) {
        ++out.margin[j];
        any = true;
      }
    }
    out.union_rows += any;
  }
  return out;
}

BlockScheme partition_blocks(std::size_t n, std::size_t k) {
  if (k < 1 || k > n) {
    throw std::invalid_argument("block count k = " + std::to_string(k) +
                                " must lie in [1, n = " + std::to_string(n) + "]");
  }
  return BlockScheme{n, k, n / k};
}

std::size_t default_block_count(std::size_t n) {
  auto k = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  while (k * k > n) --k;
  while ((k + 1) * (k + 1) <= n) ++k;
  return std::max<std::size_t>(k, 1);
}

CountVector BlockCounts::block(std::size_t s) const {
  const auto begin = full.begin() + static_cast<std::ptrdiff_t>((s - 1) * d);
  return CountVector(begin, begin + static_cast<std::ptrdiff_t>(d));
}

BlockCounts block_counts(const UpcrossingMarks& marks, const BlockScheme& scheme) {
  if (scheme.n != marks.n) {
    throw std::invalid_argument("block scheme covers n = " + std::to_string(scheme.n) +
                                " but marks have n = " + std::to_string(marks.n));
  }
  const std::size_t d = marks.d;
  BlockCounts out;
  out.k = scheme.k;
  out.d = d;
  out.full.assign(scheme.k * d, 0);
  out.union_full.assign(scheme.k, 0);
  out.remainder.assign(d, 0);

  const std::size_t covered = scheme.k * scheme.r;
  for (std::size_t row = 0; row < marks.n; ++row) {
    if (!marks.union_marks[row]) continue;
    if (row < covered) {
      const std::size_t s = row / scheme.r;
      ++out.union_full[s];
      for (std::size_t j = 0; j < d; ++j) out.full[s * d + j] += marks.marks[row * d + j];
    } else {
      ++out.union_remainder;
      for (std::size_t j = 0; j < d; ++j) out.remainder[j] += marks.marks[row * d + j];
    }
  }
  return out;
}

void MultiplicityHistogram::add_blocks(const CountVector& y, std::uint64_t count) {
  if (d_ == 0) d_ = y.size();
  if (y.size() != d_) throw std::invalid_argument("count vector dimension mismatch");
  if (count == 0) return;
  total_ += count;
  if (std::all_of(y.begin(), y.end(), [](auto c) { return c == 0; })) return;
  nonempty_ += count;
  table_[y] += count;
}

void MultiplicityHistogram::add(const BlockCounts& counts) {
  if (d_ == 0) d_ = counts.d;
  if (counts.d != d_) throw std::invalid_argument("block counts dimension mismatch");
  total_ += counts.k;
  for (std::size_t s = 0; s < counts.k; ++s) {
    if (counts.union_full[s] == 0) continue;
    ++nonempty_;
    ++table_[counts.block(s + 1)];
  }
}

void MultiplicityHistogram::merge(const MultiplicityHistogram& other) {
  if (d_ == 0) d_ = other.d_;
  if (other.d_ != 0 && other.d_ != d_) {
    throw std::invalid_argument("cannot merge histograms of different dimension");
  }
  for (const auto& [y, c] : other.table_) table_[y] += c;
  nonempty_ += other.nonempty_;
  total_ += other.total_;
}

std::uint64_t MultiplicityHistogram::block_count(const CountVector& y) const {
  auto it = table_.find(y);
  return it == table_.end() ? 0 : it->second;
}

double MultiplicityHistogram::frequency(const CountVector& y) const {
  if (!defined()) return 0.0;
  return static_cast<double>(block_count(y)) / static_cast<double>(nonempty_);
}

double MultiplicityHistogram::multi_component_mass() const {
  if (!defined()) return 0.0;
  std::uint64_t multi = 0;
  for (const auto& [y, c] : table_) {
    if (std::count_if(y.begin(), y.end(), [](auto v) { return v != 0; }) >= 2) multi += c;
  }
  return static_cast<double>(multi) / static_cast<double>(nonempty_);
}

MultiplicityHistogram MultiplicityHistogram::project(std::size_t j) const {
  if (j >= d_) throw std::out_of_range("margin index out of range");
  MultiplicityHistogram out(1);
  for (const auto& [y, c] : table_) {
    if (y[j] == 0) continue;
    out.table_[CountVector{y[j]}] += c;
    out.nonempty_ += c;
  }
  out.total_ = total_;
  return out;
}

MultiplicityHistogram multiplicity_histogram(std::span<const BlockCounts> blocks) {
  MultiplicityHistogram out;
  for (const auto& b : blocks) out.add(b);
  return out;
}

void ClusterSizeHistogram::add_blocks(std::uint32_t size, std::uint64_t count) {
  if (count == 0) return;
  total_ += count;
  if (size == 0) return;
  nonempty_ += count;
  events_ += size * count;
  table_[size] += count;
}

void ClusterSizeHistogram::add(const BlockCounts& counts) {
  for (auto size : counts.union_full) add_block(size);
}

void ClusterSizeHistogram::merge(const ClusterSizeHistogram& other) {
  for (const auto& [k, c] : other.table_) table_[k] += c;
  nonempty_ += other.nonempty_;
  total_ += other.total_;
  events_ += other.events_;
}

std::uint64_t ClusterSizeHistogram::block_count(std::uint32_t size) const {
  auto it = table_.find(size);
  return it == table_.end() ? 0 : it->second;
}

double ClusterSizeHistogram::frequency(std::uint32_t size) const {
  if (!defined()) return 0.0;
  return static_cast<double>(block_count(size)) / static_cast<double>(nonempty_);
}

double ClusterSizeHistogram::mean() const {
  if (!defined()) return 0.0;
  return static_cast<double>(events_) / static_cast<double>(nonempty_);
}

ClusterSizeHistogram cluster_size_histogram(std::span<const BlockCounts> blocks) {
  ClusterSizeHistogram out;
  for (const auto& b : blocks) out.add(b);
  return out;
}

double total_variation(const ClusterSizeHistogram& a, const ClusterSizeHistogram& b) {
  std::set<std::uint32_t> sizes;
  for (const auto& [k, c] : a.table()) sizes.insert(k);
  for (const auto& [k, c] : b.table()) sizes.insert(k);
  double tv = 0.0;
  for (auto k : sizes) tv += std::abs(a.frequency(k) - b.frequency(k));
  return tv / 2.0;
}

}  // namespace upcross
