#include "upcross/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "upcross/pointproc.hpp"

namespace upcross {

struct Event::Node {
  Kind kind = Kind::True;
  int index = 0;
  double threshold = 0.0;
  std::vector<Event> children;
};

Event Event::exceeds(int index, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("threshold " + std::to_string(threshold) +
                                " is outside (0, 1)");
  }
  return Event(std::make_shared<const Node>(Node{Kind::Exceeds, index, threshold, {}}));
}

Event Event::always() { return Event(std::make_shared<const Node>(Node{Kind::True, 0, 0, {}})); }
Event Event::never() { return Event(std::make_shared<const Node>(Node{Kind::False, 0, 0, {}})); }

Event Event::all_of(std::vector<Event> terms) {
  if (terms.empty()) return always();
  if (terms.size() == 1) return terms.front();
  return Event(std::make_shared<const Node>(Node{Kind::And, 0, 0, std::move(terms)}));
}

Event Event::any_of(std::vector<Event> terms) {
  if (terms.empty()) return never();
  if (terms.size() == 1) return terms.front();
  return Event(std::make_shared<const Node>(Node{Kind::Or, 0, 0, std::move(terms)}));
}

Event operator!(const Event& e) {
  return Event(std::make_shared<const Event::Node>(Event::Node{Event::Kind::Not, 0, 0, {e}}));
}
Event operator&&(const Event& a, const Event& b) { return Event::all_of({a, b}); }
Event operator||(const Event& a, const Event& b) { return Event::any_of({a, b}); }

Event::Kind Event::kind() const noexcept { return node_->kind; }

int Event::index() const {
  if (node_->kind != Kind::Exceeds) throw std::logic_error("not an exceedance atom");
  return node_->index;
}

double Event::threshold() const {
  if (node_->kind != Kind::Exceeds) throw std::logic_error("not an exceedance atom");
  return node_->threshold;
}

std::span<const Event> Event::children() const noexcept { return node_->children; }

std::string Event::to_string() const {
  std::ostringstream out;
  switch (kind()) {
    case Kind::True: return "true";
    case Kind::False: return "false";
    case Kind::Exceeds:
      out << "gt(" << index() << "," << threshold() << ")";
      return out.str();
    case Kind::Not: return "not(" + children()[0].to_string() + ")";
    case Kind::And:
    case Kind::Or: {
      out << (kind() == Kind::And ? "and(" : "or(");
      bool first = true;
      for (const auto& c : children()) {
        out << (first ? "" : ",") << c.to_string();
        first = false;
      }
      out << ")";
      return out.str();
    }
  }
  return {};
}

namespace {

struct Op {
  enum Code : std::uint8_t { Atom, True, False, Not, And, Or };
  Code code;
  std::uint32_t a = 0;  // Atom: slot; And/Or: arity
  std::uint32_t b = 0;  // Atom: rank of the threshold (1-based)
};

// Postfix program for several root expressions over a common set of atoms.
class Program {
 public:
  explicit Program(std::span<const Event> roots) {
    std::map<int, std::set<double>> atoms;
    for (const auto& r : roots) collect(r, atoms);
    for (auto& [index, cuts] : atoms) {
      slot_of_[index] = static_cast<std::uint32_t>(indices_.size());
      indices_.push_back(index);
      cuts_.emplace_back(cuts.begin(), cuts.end());
    }
    for (const auto& r : roots) {
      emit(r);
      ends_.push_back(ops_.size());
    }
  }

  std::size_t slots() const noexcept { return indices_.size(); }
  std::size_t roots() const noexcept { return ends_.size(); }
  const std::vector<double>& cuts(std::size_t slot) const { return cuts_[slot]; }
  int index(std::size_t slot) const { return indices_[slot]; }

  void check(const OracleBudget& budget) const {
    double cells = 1.0;
    std::size_t widest = 0;
    for (const auto& c : cuts_) {
      cells *= static_cast<double>(c.size() + 1);
      widest = std::max(widest, c.size());
    }
    const bool over = indices_.size() > budget.max_indices ||
                      widest > budget.max_thresholds_per_index ||
                      cells > static_cast<double>(budget.max_cells);
    if (over) {
      std::ostringstream msg;
      msg << "oracle budget exceeded: " << indices_.size() << " innovations (limit "
          << budget.max_indices << "), up to " << widest << " thresholds per innovation (limit "
          << budget.max_thresholds_per_index << "), " << cells << " cells (limit "
          << budget.max_cells << ")";
      throw BudgetExceeded(msg.str(), cells, indices_.size());
    }
  }

  // Evaluates every root on the cell assignment; out[k] receives root k.
  void evaluate(const std::uint32_t* cell, std::uint8_t* out) const {
    std::size_t begin = 0;
    for (std::size_t k = 0; k < ends_.size(); ++k) {
      out[k] = run(cell, begin, ends_[k]);
      begin = ends_[k];
    }
  }

 private:
  void collect(const Event& e, std::map<int, std::set<double>>& atoms) const {
    if (e.kind() == Event::Kind::Exceeds) {
      atoms[e.index()].insert(e.threshold());
      return;
    }
    for (const auto& c : e.children()) collect(c, atoms);
  }

  void emit(const Event& e) {
    switch (e.kind()) {
      case Event::Kind::True: ops_.push_back({Op::True}); return;
      case Event::Kind::False: ops_.push_back({Op::False}); return;
      case Event::Kind::Exceeds: {
        const std::uint32_t slot = slot_of_.at(e.index());
        const auto& c = cuts_[slot];
        const auto rank = static_cast<std::uint32_t>(
            std::lower_bound(c.begin(), c.end(), e.threshold()) - c.begin() + 1);
        ops_.push_back({Op::Atom, slot, rank});
        return;
      }
      case Event::Kind::Not:
        emit(e.children()[0]);
        ops_.push_back({Op::Not});
        return;
      case Event::Kind::And:
      case Event::Kind::Or:
        for (const auto& c : e.children()) emit(c);
        ops_.push_back({e.kind() == Event::Kind::And ? Op::And : Op::Or,
                        static_cast<std::uint32_t>(e.children().size())});
        return;
    }
  }

  bool run(const std::uint32_t* cell, std::size_t begin, std::size_t end) const {
    thread_local std::vector<std::uint8_t> stack;
    stack.clear();
    for (std::size_t p = begin; p < end; ++p) {
      const Op& op = ops_[p];
      switch (op.code) {
        // Interval m of a slot is above cut m, so Y > cut_b iff m >= b.
        case Op::Atom: stack.push_back(cell[op.a] >= op.b); break;
        case Op::True: stack.push_back(1); break;
        case Op::False: stack.push_back(0); break;
        case Op::Not: stack.back() = !stack.back(); break;
        case Op::And:
        case Op::Or: {
          const std::size_t base = stack.size() - op.a;
          bool v = op.code == Op::And;
          for (std::size_t k = base; k < stack.size(); ++k) {
            v = op.code == Op::And ? (v && stack[k]) : (v || stack[k]);
          }
          stack.resize(base);
          stack.push_back(v);
          break;
        }
      }
    }
    return stack.back() != 0;
  }

  std::vector<int> indices_;
  std::vector<std::vector<double>> cuts_;
  std::map<int, std::uint32_t> slot_of_;
  std::vector<Op> ops_;
  std::vector<std::size_t> ends_;
};

// Neumaier compensated sum; accumulation order is the fixed cell order.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + carry; }
};

// Calls visit(cell, weight) for every joint interval assignment.
template <class Visit>
void enumerate_cells(const Program& program, Visit&& visit) {
  const std::size_t slots = program.slots();
  std::vector<std::vector<double>> lengths(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    const auto& c = program.cuts(s);
    double prev = 0.0;
    for (double cut : c) {
      lengths[s].push_back(cut - prev);
      prev = cut;
    }
    lengths[s].push_back(1.0 - prev);
  }

  std::vector<std::uint32_t> cell(slots, 0);
  std::vector<double> prefix(slots + 1, 1.0);
  for (std::size_t s = 0; s < slots; ++s) prefix[s + 1] = prefix[s] * lengths[s][0];

  while (true) {
    visit(cell.data(), prefix[slots]);
    std::size_t s = slots;
    while (s > 0) {
      --s;
      if (++cell[s] < lengths[s].size()) break;
      cell[s] = 0;
      if (s == 0) return;
    }
    if (slots == 0) return;
    for (std::size_t t = s; t < slots; ++t) prefix[t + 1] = prefix[t] * lengths[t][cell[t]];
  }
}

}  // namespace

double exact_prob(const Event& event, const OracleBudget& budget) {
  const Event roots[] = {event};
  const Program program(roots);
  program.check(budget);
  CompensatedSum total;
  std::uint8_t hit = 0;
  enumerate_cells(program, [&](const std::uint32_t* cell, double weight) {
    program.evaluate(cell, &hit);
    if (hit) total.add(weight);
  });
  return total.value();
}

Event upcrossing_event(const ProcessSpec& spec, std::size_t margin, int time, double level) {
  const auto& lags = spec.lags.at(margin);
  std::set<int> now;
  std::vector<Event> below;
  for (int l : lags) {
    now.insert(time + l);
    below.push_back(!Event::exceeds(time + l, level));
  }
  std::vector<Event> rise;
  for (int l : lags) {
    const int t = time + 1 + l;
    // Innovations already forced below the level cannot lift X_{i+1}.
    if (!now.contains(t)) rise.push_back(Event::exceeds(t, level));
  }
  return Event::all_of(std::move(below)) && Event::any_of(std::move(rise));
}

Event exceedance_event(const ProcessSpec& spec, std::size_t margin, int time, double level) {
  std::vector<Event> terms;
  for (int l : spec.lags.at(margin)) terms.push_back(Event::exceeds(time + l, level));
  return Event::any_of(std::move(terms));
}

std::size_t WindowOutcome::upcrossings(std::size_t margin) const noexcept {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += up[i * d + margin];
  return c;
}

std::size_t WindowOutcome::union_upcrossings() const noexcept {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < d; ++j) any = any || up[i * d + j];
    c += any;
  }
  return c;
}

bool WindowOutcome::any_exceedance() const noexcept {
  return std::any_of(exceed.begin(), exceed.end(), [](auto v) { return v != 0; });
}

std::vector<double> exact_window_probs(const ProcessSpec& spec, const LevelVector& levels,
                                       std::size_t n,
                                       std::span<const WindowPredicate> predicates,
                                       const OracleBudget& budget) {
  const std::size_t d = spec.dims();
  if (levels.u.size() != d) throw std::invalid_argument("level vector dimension mismatch");
  if (n < 1) throw std::invalid_argument("window length must be positive");

  // Roots: all upcrossing events (time-major), then all exceedance events.
  std::vector<Event> roots;
  roots.reserve(2 * n * d);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      roots.push_back(upcrossing_event(spec, j, static_cast<int>(i), levels.u[j]));
    }
  }
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      roots.push_back(exceedance_event(spec, j, static_cast<int>(i), levels.u[j]));
    }
  }
  const Program program(roots);
  program.check(budget);

  WindowOutcome outcome;
  outcome.n = n;
  outcome.d = d;
  outcome.up.assign(n * d, 0);
  outcome.exceed.assign(n * d, 0);
  std::vector<std::uint8_t> values(roots.size());
  std::vector<CompensatedSum> sums(predicates.size());

  enumerate_cells(program, [&](const std::uint32_t* cell, double weight) {
    program.evaluate(cell, values.data());
    std::copy_n(values.begin(), n * d, outcome.up.begin());
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(n * d), n * d,
                outcome.exceed.begin());
    for (std::size_t k = 0; k < predicates.size(); ++k) {
      if (predicates[k](outcome)) sums[k].add(weight);
    }
  });

  std::vector<double> out;
  for (const auto& s : sums) out.push_back(s.value());
  return out;
}

double exact_window_prob(const ProcessSpec& spec, const LevelVector& levels, std::size_t n,
                         const WindowPredicate& predicate, const OracleBudget& budget) {
  return exact_window_probs(spec, levels, n, std::span(&predicate, 1), budget).front();
}

WindowOutcome observe_window(const SamplePath& path, const LevelVector& levels) {
  const UpcrossingMarks marks = mark_upcrossings(path, levels);
  WindowOutcome out;
  out.n = path.n;
  out.d = path.d;
  out.up = marks.marks;
  out.exceed.assign(path.n * path.d, 0);
  for (std::size_t i = 0; i < path.n; ++i) {
    for (std::size_t j = 0; j < path.d; ++j) {
      out.exceed[i * path.d + j] = path.values[i * path.d + j] > levels.u[j];
    }
  }
  return out;
}

}  // namespace upcross
