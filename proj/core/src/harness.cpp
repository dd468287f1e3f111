#include "upcross/harness.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace upcross {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

template <class T>
T parse_number(std::string_view field, std::string_view text) {
  text = trim(text);
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
    throw ConfigError(std::string(field), "cannot parse '" + std::string(text) + "'");
  }
  return value;
}

template <class T>
std::vector<T> parse_list(std::string_view field, std::string_view text) {
  std::vector<T> out;
  if (trim(text).empty()) return out;
  for (auto item : split(text, ',')) out.push_back(parse_number<T>(field, item));
  return out;
}

std::vector<std::vector<int>> parse_lags(std::string_view text) {
  std::vector<std::vector<int>> out;
  for (auto set : split(text, ';')) {
    if (set.empty()) throw ConfigError("lags", "empty lag set");
    out.push_back(parse_list<int>("lags", set));
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& values, std::string_view sep) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? sep : "") << values[i];
  return out.str();
}

std::string format_lags(const std::vector<std::vector<int>>& lags) {
  std::string out;
  for (std::size_t j = 0; j < lags.size(); ++j) out += (j ? "; " : "") + join(lags[j], ",");
  return out;
}

std::string_view format_name(OutputFormat f) { return f == OutputFormat::Json ? "json" : "csv"; }

// Innovations drawn for one window.
std::uint64_t draws_per_window(const ProcessSpec& spec, std::size_t n) {
  return n + 1 + static_cast<std::uint64_t>(spec.max_lag() - spec.min_lag());
}

constexpr std::array<std::string_view, 3> kPresetNames{"ex61-table", "ex62-regimes",
                                                       "iid-null"};

constexpr std::string_view kEx61Table = R"(label = ex61-table
process = ex61
tau_prime = 1, 1
n = 10000
replicates = 2000
blocks = sqrt
)";

constexpr std::string_view kEx62Balanced = R"(label = ex62-regimes/balanced
process = ex62
tau_prime = 1, 2
n = 10000
replicates = 2000
blocks = sqrt
)";

constexpr std::string_view kEx62Dominant = R"(label = ex62-regimes/dominant
process = ex62
tau_prime = 2, 0.5
n = 10000
replicates = 2000
blocks = sqrt
)";

constexpr std::string_view kIidNull = R"(label = iid-null
process = iid
d = 1
tau_prime = 1
n = 10000
replicates = 2000
blocks = sqrt
)";

}  // namespace

ProcessSpec ExperimentConfig::spec() const {
  if (process == "custom") {
    if (lags.empty()) throw ConfigError("lags", "required when process = custom");
    try {
      return make_process(lags, "custom");
    } catch (const std::invalid_argument& e) {
      throw ConfigError("lags", e.what());
    }
  }
  if (!lags.empty()) throw ConfigError("lags", "only valid with process = custom");
  try {
    return builtin_process(process, d);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("process", e.what());
  }
}

SimulationSettings ExperimentConfig::settings() const {
  return SimulationSettings{replicates, seed, workers};
}

void ExperimentConfig::validate() const {
  const ProcessSpec s = spec();
  if (n < 2) throw ConfigError("n", "must be at least 2");
  if (replicates < 1) throw ConfigError("replicates", "must be at least 1");
  if (workers < 1) throw ConfigError("workers", "must be at least 1");
  if (tau_prime.size() != s.dims()) {
    throw ConfigError("tau_prime", "needs " + std::to_string(s.dims()) + " values, got " +
                                       std::to_string(tau_prime.size()));
  }
  const auto check_tau = [&](std::size_t window, const std::string& field) {
    for (double t : tau_prime) {
      if (!(t > 0.0) || !(t < static_cast<double>(window))) {
        throw ConfigError(field, "tau_prime values must lie in (0, " +
                                     std::to_string(window) + ")");
      }
    }
  };
  check_tau(n, "tau_prime");
  if (blocks && (*blocks < 1 || *blocks > n)) throw ConfigError("blocks", "k must lie in [1, n]");
  if (scale) {
    if (!(*scale > 0.0) || !std::isfinite(*scale)) throw ConfigError("scale", "must be positive");
    const double shrunk = std::floor(static_cast<double>(n) / *scale);
    if (shrunk < 2.0) throw ConfigError("scale", "floor(n / scale) must be at least 2");
    check_tau(static_cast<std::size_t>(shrunk), "scale");
  }
  for (std::size_t e = 0; e < epsilon.size(); ++e) {
    if (!(epsilon[e] > 0.0)) throw ConfigError("epsilon", "values must be positive");
    if (e > 0 && !(epsilon[e] < epsilon[e - 1])) {
      throw ConfigError("epsilon", "grid must be strictly decreasing");
    }
  }
  if (!epsilon.empty() && s.dims() < 2) throw ConfigError("epsilon", "needs at least two margins");
  if (drop && *drop >= s.dims()) throw ConfigError("drop", "margin out of range");
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    if (g > 0 && n_grid[g] <= n_grid[g - 1]) {
      throw ConfigError("n_grid", "must be strictly increasing");
    }
    if (n_grid[g] < 2) throw ConfigError("n_grid", "values must be at least 2");
    check_tau(n_grid[g], "n_grid");
  }
  if (formats.empty()) throw ConfigError("format", "at least one format is required");
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  const std::string field(key);
  if (key == "label") {
    c.label = value;
  } else if (key == "process") {
    c.process = value;
  } else if (key == "lags") {
    c.lags = parse_lags(value);
  } else if (key == "d") {
    c.d = parse_number<std::size_t>(field, value);
  } else if (key == "n") {
    c.n = parse_number<std::size_t>(field, value);
  } else if (key == "replicates") {
    c.replicates = parse_number<std::size_t>(field, value);
  } else if (key == "tau_prime") {
    c.tau_prime = parse_list<double>(field, value);
  } else if (key == "blocks") {
    if (value == "sqrt") {
      c.blocks.reset();
    } else {
      c.blocks = parse_number<std::size_t>(field, value);
    }
  } else if (key == "scale") {
    c.scale = parse_number<double>(field, value);
  } else if (key == "epsilon") {
    c.epsilon = parse_list<double>(field, value);
  } else if (key == "drop") {
    const auto j = parse_number<std::size_t>(field, value);
    if (j < 1) throw ConfigError(field, "margins are numbered from 1");
    c.drop = j - 1;
  } else if (key == "n_grid") {
    c.n_grid = parse_list<std::size_t>(field, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(field, value);
  } else if (key == "workers") {
    c.workers = parse_number<unsigned>(field, value);
  } else if (key == "out") {
    c.out = value;
  } else if (key == "format") {
    c.formats.clear();
    for (auto f : split(value, ',')) {
      if (f == "json") {
        c.formats.push_back(OutputFormat::Json);
      } else if (f == "csv") {
        c.formats.push_back(OutputFormat::Csv);
      } else {
        throw ConfigError(field, "unknown format '" + std::string(f) + "' (json, csv)");
      }
    }
  } else {
    throw ConfigError(field, "unknown key");
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    }
    apply_setting(c, line.substr(0, eq), line.substr(eq + 1));
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out.precision(17);
  if (!c.label.empty()) out << "label = " << c.label << '\n';
  out << "process = " << c.process << '\n';
  if (!c.lags.empty()) out << "lags = " << format_lags(c.lags) << '\n';
  out << "d = " << c.d << '\n';
  out << "n = " << c.n << '\n';
  out << "replicates = " << c.replicates << '\n';
  out << "tau_prime = " << join(c.tau_prime, ", ") << '\n';
  out << "blocks = " << (c.blocks ? std::to_string(*c.blocks) : std::string("sqrt")) << '\n';
  if (c.scale) out << "scale = " << *c.scale << '\n';
  if (!c.epsilon.empty()) out << "epsilon = " << join(c.epsilon, ", ") << '\n';
  if (c.drop) out << "drop = " << *c.drop + 1 << '\n';
  if (!c.n_grid.empty()) out << "n_grid = " << join(c.n_grid, ", ") << '\n';
  out << "seed = " << c.seed << '\n';
  out << "workers = " << c.workers << '\n';
  if (!c.out.empty()) out << "out = " << c.out << '\n';
  std::vector<std::string_view> formats;
  for (auto f : c.formats) formats.push_back(format_name(f));
  out << "format = " << join(formats, ",") << '\n';
  return out.str();
}

std::span<const std::string_view> preset_names() noexcept { return kPresetNames; }

std::vector<ExperimentConfig> preset(std::string_view name) {
  if (name == "ex61-table") return {parse_config(kEx61Table)};
  if (name == "ex62-regimes") return {parse_config(kEx62Balanced), parse_config(kEx62Dominant)};
  if (name == "iid-null") return {parse_config(kIidNull)};
  std::string valid;
  for (auto p : kPresetNames) valid += " " + std::string(p);
  throw ConfigError("preset", "unknown preset '" + std::string(name) + "'; valid names:" + valid);
}

DerivedLimits derived_limits(const ProcessSpec& spec, std::span<const double> tau_prime) {
  const ClusterLimits cl = cluster_limits(spec, tau_prime);
  DerivedLimits out;
  out.cluster_rate = cl.cluster_rate;
  out.nu_union = cl.nu_union;
  out.tau_union = cl.tau_union;
  out.eta = cl.eta;
  out.theta = cl.theta;
  out.phi = cl.phi;
  out.runs_limit = cl.runs_limit;
  for (const auto& [y, p] : cl.multiplicity) out.multiplicity[CountVector(y.begin(), y.end())] = p;
  for (const auto& [size, p] : cl.cluster_size) out.cluster_size[size] = p;
  return out;
}

std::map<std::string, double> closed_form_targets(const ProcessSpec& spec,
                                                  std::span<const double> tau_prime) {
  std::map<std::string, double> t;
  const RateSummary rates = limiting_rates(spec, tau_prime);
  if (spec == builtin_process("ex61")) {
    const double nu1 = rates.nu[0], nu2 = rates.nu[1];
    const double tau1 = rates.tau[0], tau2 = rates.tau[1];
    t["eta"] = (nu1 / 2 + nu2) / (nu1 + nu2);
    t["theta"] = (tau1 / 3 + tau2) / (tau1 + tau2);
    t["phi"] = std::exp(-(nu1 + nu2));
    t["eta_marginal[1]"] = 0.5;
    t["eta_marginal[2]"] = 1.0;
    t["pi[2;0]"] = (nu1 / 2) / (nu1 / 2 + nu2);
    t["pi[0;1]"] = nu2 / (nu1 / 2 + nu2);
  } else if (spec == builtin_process("ex62")) {
    const double nu1 = rates.nu[0], nu2 = rates.nu[1];
    t["eta_marginal[1]"] = 0.5;
    t["eta_marginal[2]"] = 1.0;
    if (2 * nu2 >= nu1) {
      t["eta"] = nu2 / (nu1 / 2 + nu2);
      t["phi"] = std::exp(-(nu1 / 2 + nu2));
      t["pi[2;0]"] = 0.0;
      t["pi[0;1]"] = (nu2 - nu1 / 2) / nu2;
      t["pi[2;1]"] = (nu1 / 2) / nu2;
    } else {
      t["eta"] = 0.5;
      t["phi"] = std::exp(-nu1);
      t["pi[2;0]"] = (nu1 / 2 - nu2) / (nu1 / 2);
      t["pi[0;1]"] = 0.0;
      t["pi[2;1]"] = nu2 / (nu1 / 2);
    }
  } else if (spec == builtin_process("iid", spec.dims())) {
    t["eta"] = 1.0;
    t["theta"] = 1.0;
    for (std::size_t j = 0; j < spec.dims(); ++j) {
      t["eta_marginal[" + std::to_string(j + 1) + "]"] = 1.0;
    }
    if (spec.dims() == 1) t["phi"] = std::exp(-rates.nu[0]);
  }
  return t;
}

std::string target_key(std::string_view estimator) {
  if (estimator == "eta_runs" || estimator == "eta_combined" || estimator == "eta_blocks" ||
      estimator == "eta_empty") {
    return "eta";
  }
  if (estimator == "theta_direct" || estimator == "theta_from_eta") return "theta";
  if (estimator == "phi_hat") return "phi";
  if (estimator.starts_with("eta_marginal[") || estimator.starts_with("pi[")) {
    return std::string(estimator);
  }
  return {};
}

RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  RunReport rep;
  rep.config = config;
  const ProcessSpec spec = config.spec();
  const SimulationSettings settings = config.settings();
  const std::size_t n = config.n;
  const auto& tp = config.tau_prime;
  const std::uint64_t R = config.replicates;
  rep.k = blocks_for(config.blocks, n);
  rep.rates = limiting_rates(spec, tp);

  const SimulationResult sim = simulate(spec, levels_from_tau_prime(tp, n), rep.k, settings);
  rep.draws += R * draws_per_window(spec, n);
  rep.estimates = estimate_report(sim.tallies, rep.rates);
  rep.multiplicity = sim.multiplicity;
  rep.clusters = sim.clusters;

  std::vector<std::size_t> grid = config.n_grid;
  if (grid.empty() && options.diagnostics) {
    if (n / 10 >= 25) grid.push_back(n / 10);
    grid.push_back(n);
  }
  if (!grid.empty()) {
    if (spec.dims() >= 2) {
      ConditionReport forward{"h_sum", {}}, first{"h_first_term", {}}, reverse{"h_reverse", {}};
      for (std::size_t g : grid) {
        const HSumEntry e = h_sum(spec, tp, g, blocks_for(config.blocks, g), settings);
        forward.grid.push_back(e.forward);
        first.grid.push_back(e.first_term);
        reverse.grid.push_back(e.reverse);
        rep.draws += R * draws_per_window(spec, g);
      }
      rep.conditions.push_back(std::move(forward));
      rep.conditions.push_back(std::move(first));
      rep.conditions.push_back(std::move(reverse));
    }
    rep.conditions.push_back(local_osc_report(spec, tp, grid, config.blocks, settings));
    for (std::size_t g : grid) rep.draws += R * draws_per_window(spec, g);
  }

  if (config.scale) {
    rep.scaling = scaling_check(spec, tp, n, *config.scale, rep.k, settings);
    rep.draws += (*config.scale == 1.0 ? 1 : 2) * R * draws_per_window(spec, n);
  }

  if (!config.epsilon.empty()) {
    const std::size_t drop = config.drop.value_or(spec.dims() - 1);
    rep.continuity =
        continuity_check(spec, rep.rates.nu, drop, config.epsilon, n, rep.k, settings);
    rep.draws += config.epsilon.size() * R * draws_per_window(spec, n);
    std::vector<std::vector<int>> kept;
    for (std::size_t j = 0; j < spec.dims(); ++j) {
      if (j != drop) kept.push_back(spec.lags[j]);
    }
    rep.draws += R * draws_per_window(make_process(kept), n);
  }

  rep.targets = closed_form_targets(spec, tp);
  rep.limits = derived_limits(spec, tp);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::filesystem::path output_directory(const ExperimentConfig& config) {
  if (!config.out.empty()) return config.out;
  if (const char* env = std::getenv("UPCROSS_OUT_DIR"); env && *env) return env;
  return ".";
}

namespace {

class EventParser {
 public:
  EventParser(std::string_view text, const ProcessSpec& spec, std::span<const double> levels)
      : text_(text), spec_(spec), levels_(levels) {}

  Event parse() {
    Event e = expression();
    skip_space();
    if (pos_ != text_.size()) fail("trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("event '" + std::string(text_) + "': " + what + " at column " +
                                std::to_string(pos_ + 1));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  std::string_view word() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  template <class T>
  T number() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-' ||
            text_[pos_] == '+' || text_[pos_] == '.' || text_[pos_] == 'e' ||
            text_[pos_] == 'E')) {
      ++pos_;
    }
    T value{};
    const auto [end, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc{} || end != text_.data() + pos_ || start == pos_) fail("bad number");
    return value;
  }

  std::size_t margin() {
    const auto j = number<int>();
    if (j < 1 || static_cast<std::size_t>(j) > spec_.dims()) fail("margin out of range");
    if (static_cast<std::size_t>(j) > levels_.size()) fail("no level for margin");
    return static_cast<std::size_t>(j - 1);
  }

  Event expression() {
    const std::string_view name = word();
    if (name == "true") return Event::always();
    if (name == "false") return Event::never();
    expect('(');
    Event out = Event::always();
    if (name == "gt") {
      const int t = number<int>();
      expect(',');
      const double c = number<double>();
      if (!(c > 0.0 && c < 1.0)) fail("threshold outside (0, 1)");
      out = Event::exceeds(t, c);
    } else if (name == "up" || name == "exc") {
      const std::size_t j = margin();
      expect(',');
      const int i = number<int>();
      out = name == "up" ? upcrossing_event(spec_, j, i, levels_[j])
                         : exceedance_event(spec_, j, i, levels_[j]);
    } else if (name == "not") {
      out = !expression();
    } else if (name == "and" || name == "or") {
      std::vector<Event> terms{expression()};
      while (accept(',')) terms.push_back(expression());
      out = name == "and" ? Event::all_of(std::move(terms)) : Event::any_of(std::move(terms));
    } else {
      fail("unknown operator '" + std::string(name) + "'");
    }
    expect(')');
    return out;
  }

  std::string_view text_;
  const ProcessSpec& spec_;
  std::span<const double> levels_;
  std::size_t pos_ = 0;
};

}  // namespace

Event parse_event(std::string_view text, const ProcessSpec& spec, std::span<const double> levels) {
  return EventParser(text, spec, levels).parse();
}

OracleQuery parse_oracle_file(std::string_view text) {
  OracleQuery q;
  for (auto line : split(text, '\n')) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      q.expressions.emplace_back(line);
      continue;
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "process") {
      q.process = value;
    } else if (key == "lags") {
      q.lags = parse_lags(value);
    } else if (key == "d") {
      q.d = parse_number<std::size_t>("d", value);
    } else if (key == "levels") {
      q.levels = parse_list<double>("levels", value);
    } else {
      throw ConfigError(std::string(key), "unknown key");
    }
  }
  return q;
}

}  // namespace upcross
