#pragma once

// Upcrossing marks, block partitions and the block histograms built on them.
// Times are 1-based (1..n), margins 0-based.

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "upcross/levels.hpp"
#include "upcross/process.hpp"

namespace upcross {

struct UpcrossingMarks {
  std::size_t n = 0;
  std::size_t d = 0;
  /// n x d row-major; entry (i, j) is X_{i,j} <= u_j < X_{i+1,j}.
  std::vector<std::uint8_t> marks;
  /// Union event A_i over margins.
  std::vector<std::uint8_t> union_marks;
  /// Per-margin totals S_{n,j}([0,1]).
  std::vector<std::size_t> counts;

  bool at(std::size_t time, std::size_t margin) const noexcept {
    return marks[(time - 1) * d + margin] != 0;
  }
  bool any(std::size_t time) const noexcept { return union_marks[time - 1] != 0; }
  std::size_t union_count() const noexcept;
};

UpcrossingMarks mark_upcrossings(const SamplePath& path, const LevelVector& levels);

/// Builds marks from an explicit n x d indicator matrix (row-major).
UpcrossingMarks marks_from_matrix(std::size_t n, std::size_t d,
                                  std::span<const std::uint8_t> matrix);

/// Exceedance totals over rows 1..n.
struct ExceedanceCounts {
  std::vector<std::size_t> margin;  // #{i : X_{i,j} > u_j}
  std::size_t union_rows = 0;       // #{i : some margin exceeds}
};

ExceedanceCounts count_exceedances(const SamplePath& path, const LevelVector& levels);

/// Blocks C_s = ((s-1) r, s r] for s = 1..k, remainder (k r, n].
struct BlockScheme {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t r = 0;

  std::size_t first(std::size_t s) const noexcept { return (s - 1) * r + 1; }
  std::size_t last(std::size_t s) const noexcept { return s * r; }
  std::size_t remainder_size() const noexcept { return n - k * r; }
};

/// Requires 1 <= k <= n.
BlockScheme partition_blocks(std::size_t n, std::size_t k);

/// floor(sqrt(n)), at least 1.
std::size_t default_block_count(std::size_t n);

using CountVector = std::vector<std::uint32_t>;

struct BlockCounts {
  std::size_t k = 0;
  std::size_t d = 0;
  /// k x d: block s, margin j count of marked times in C_s.
  std::vector<std::uint32_t> full;
  /// Union-event count per full block.
  std::vector<std::uint32_t> union_full;
  CountVector remainder;
  std::uint32_t union_remainder = 0;

  CountVector block(std::size_t s) const;  // s is 1-based
};

BlockCounts block_counts(const UpcrossingMarks& marks, const BlockScheme& scheme);

/// Conditional distribution of the block count vector given a nonempty block,
/// pooled over every full block it is fed.
class MultiplicityHistogram {
 public:
  MultiplicityHistogram() = default;
  explicit MultiplicityHistogram(std::size_t d) : d_(d) {}

  void add(const BlockCounts& counts);
  void add_block(const CountVector& y) { add_blocks(y, 1); }
  /// Adds `count` blocks with vector y (all-zero y counts as empty).
  void add_blocks(const CountVector& y, std::uint64_t count);
  void merge(const MultiplicityHistogram& other);

  bool defined() const noexcept { return nonempty_ > 0; }
  std::size_t dims() const noexcept { return d_; }
  std::uint64_t nonempty_blocks() const noexcept { return nonempty_; }
  std::uint64_t total_blocks() const noexcept { return total_; }
  std::uint64_t block_count(const CountVector& y) const;
  /// 0 when the histogram is undefined.
  double frequency(const CountVector& y) const;
  /// Mass on vectors with two or more nonzero components.
  double multi_component_mass() const;
  /// Histogram of margin j alone, conditional on that margin being nonzero.
  MultiplicityHistogram project(std::size_t j) const;

  const std::map<CountVector, std::uint64_t>& table() const noexcept { return table_; }

  friend bool operator==(const MultiplicityHistogram&, const MultiplicityHistogram&) = default;

 private:
  std::size_t d_ = 0;
  std::map<CountVector, std::uint64_t> table_;
  std::uint64_t nonempty_ = 0;
  std::uint64_t total_ = 0;
};

MultiplicityHistogram multiplicity_histogram(std::span<const BlockCounts> blocks);

/// Distribution of the union-event count per nonempty block.
class ClusterSizeHistogram {
 public:
  void add(const BlockCounts& counts);
  void add_block(std::uint32_t size) { add_blocks(size, 1); }
  void add_blocks(std::uint32_t size, std::uint64_t count);
  void merge(const ClusterSizeHistogram& other);

  bool defined() const noexcept { return nonempty_ > 0; }
  std::uint64_t nonempty_blocks() const noexcept { return nonempty_; }
  std::uint64_t total_blocks() const noexcept { return total_; }
  /// Union events inside nonempty full blocks.
  std::uint64_t events() const noexcept { return events_; }
  std::uint64_t block_count(std::uint32_t size) const;
  double frequency(std::uint32_t size) const;
  /// events / nonempty blocks; 0 when undefined.
  double mean() const;

  const std::map<std::uint32_t, std::uint64_t>& table() const noexcept { return table_; }

  friend bool operator==(const ClusterSizeHistogram&, const ClusterSizeHistogram&) = default;

 private:
  std::map<std::uint32_t, std::uint64_t> table_;
  std::uint64_t nonempty_ = 0;
  std::uint64_t total_ = 0;
  std::uint64_t events_ = 0;
};

ClusterSizeHistogram cluster_size_histogram(std::span<const BlockCounts> blocks);

/// Total variation distance between two cluster-size histograms.
double total_variation(const ClusterSizeHistogram& a, const ClusterSizeHistogram& b);

}  // namespace upcross
