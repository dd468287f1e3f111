#pragma once

// Exact probabilities of boolean combinations of threshold events
// {Y_t > c} over independent Uniform(0,1) innovations.
//
// Each innovation's range [0,1] is cut at the thresholds that mention it;
// the probability is the sum, over joint interval assignments that satisfy
// the expression, of the product of interval lengths.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "upcross/levels.hpp"
#include "upcross/process.hpp"

namespace upcross {

class Event {
 public:
  enum class Kind { True, False, Exceeds, Not, And, Or };

  /// {Y_index > threshold}; threshold must lie in (0, 1).
  static Event exceeds(int index, double threshold);
  static Event always();
  static Event never();
  static Event all_of(std::vector<Event> terms);
  static Event any_of(std::vector<Event> terms);

  friend Event operator!(const Event& e);
  friend Event operator&&(const Event& a, const Event& b);
  friend Event operator||(const Event& a, const Event& b);

  Kind kind() const noexcept;
  int index() const;         // Exceeds only
  double threshold() const;  // Exceeds only
  std::span<const Event> children() const noexcept;

  std::string to_string() const;

 private:
  struct Node;
  explicit Event(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct OracleBudget {
  std::size_t max_indices = 24;
  std::size_t max_thresholds_per_index = 4;
  std::uint64_t max_cells = std::uint64_t{1} << 26;
};

class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(const std::string& what, double cells, std::size_t indices)
      : std::runtime_error(what), cells(cells), indices(indices) {}
  /// Interval assignments the request would have enumerated.
  double cells;
  std::size_t indices;
};

double exact_prob(const Event& event, const OracleBudget& budget = {});

/// X_{i,j} <= u < X_{i+1,j} in terms of innovations; margin 0-based, time 1-based.
Event upcrossing_event(const ProcessSpec& spec, std::size_t margin, int time, double level);

/// X_{i,j} > u.
Event exceedance_event(const ProcessSpec& spec, std::size_t margin, int time, double level);

/// Mark and exceedance pattern of one window of length n.
struct WindowOutcome {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<std::uint8_t> up;      // n x d, row-major, time 1..n
  std::vector<std::uint8_t> exceed;  // n x d, rows 1..n

  bool upcrossing(std::size_t time, std::size_t margin) const noexcept {
    return up[(time - 1) * d + margin] != 0;
  }
  bool exceeds(std::size_t time, std::size_t margin) const noexcept {
    return exceed[(time - 1) * d + margin] != 0;
  }
  std::size_t upcrossings(std::size_t margin) const noexcept;
  std::size_t union_upcrossings() const noexcept;
  bool any_exceedance() const noexcept;
};

using WindowPredicate = std::function<bool(const WindowOutcome&)>;

/// Exact probabilities of predicates over the mark/exceedance pattern of a
/// window of length n under levels.u. Marks are evaluated through
/// upcrossing_event / exceedance_event, never through a simulated path.
std::vector<double> exact_window_probs(const ProcessSpec& spec, const LevelVector& levels,
                                       std::size_t n,
                                       std::span<const WindowPredicate> predicates,
                                       const OracleBudget& budget = {});

double exact_window_prob(const ProcessSpec& spec, const LevelVector& levels, std::size_t n,
                         const WindowPredicate& predicate, const OracleBudget& budget = {});

/// Pattern of a simulated window, for Monte Carlo comparison.
WindowOutcome observe_window(const SamplePath& path, const LevelVector& levels);

}  // namespace upcross
