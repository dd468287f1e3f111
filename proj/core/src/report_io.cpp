#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "upcross/harness.hpp"

namespace upcross {
namespace {

using json = nlohmann::ordered_json;

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> opt_get(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

json to_json(const Estimate& e) {
  return json{{"value", opt(e.value)},
              {"std_error", opt(e.std_error)},
              {"event_count", e.event_count},
              {"out_of_range", e.out_of_range}};
}

Estimate estimate_from(const json& j) {
  Estimate e;
  e.value = opt_get<double>(j.at("value"));
  e.std_error = opt_get<double>(j.at("std_error"));
  e.event_count = j.at("event_count").get<std::uint64_t>();
  e.out_of_range = j.at("out_of_range").get<bool>();
  return e;
}

json to_json(const std::vector<Estimate>& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(to_json(e));
  return out;
}

std::vector<Estimate> estimates_from(const json& j) {
  std::vector<Estimate> out;
  for (const auto& e : j) out.push_back(estimate_from(e));
  return out;
}

std::string format_key(OutputFormat f) { return f == OutputFormat::Json ? "json" : "csv"; }

json to_json(const ExperimentConfig& c) {
  json formats = json::array();
  for (auto f : c.formats) formats.push_back(format_key(f));
  return json{{"label", c.label},
              {"process", c.process},
              {"lags", c.lags},
              {"d", c.d},
              {"n", c.n},
              {"replicates", c.replicates},
              {"tau_prime", c.tau_prime},
              {"blocks", c.blocks ? json(*c.blocks) : json("sqrt")},
              {"scale", opt(c.scale)},
              {"epsilon", c.epsilon},
              {"drop", c.drop ? json(*c.drop + 1) : json(nullptr)},
              {"n_grid", c.n_grid},
              {"seed", c.seed},
              {"out", c.out},
              {"format", formats}};
}

ExperimentConfig config_from(const json& j) {
  ExperimentConfig c;
  c.label = j.at("label").get<std::string>();
  c.process = j.at("process").get<std::string>();
  c.lags = j.at("lags").get<std::vector<std::vector<int>>>();
  c.d = j.at("d").get<std::size_t>();
  c.n = j.at("n").get<std::size_t>();
  c.replicates = j.at("replicates").get<std::size_t>();
  c.tau_prime = j.at("tau_prime").get<std::vector<double>>();
  const json& blocks = j.at("blocks");
  if (blocks.is_string()) {
    c.blocks.reset();
  } else {
    c.blocks = blocks.get<std::size_t>();
  }
  c.scale = opt_get<double>(j.at("scale"));
  c.epsilon = j.at("epsilon").get<std::vector<double>>();
  if (const auto drop = opt_get<std::size_t>(j.at("drop"))) c.drop = *drop - 1;
  c.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.out = j.at("out").get<std::string>();
  c.formats.clear();
  for (const auto& f : j.at("format")) {
    c.formats.push_back(f.get<std::string>() == "json" ? OutputFormat::Json : OutputFormat::Csv);
  }
  return c;
}

json to_json(const RateSummary& r) {
  return json{{"tau_prime", r.tau_prime}, {"tau", r.tau},           {"nu", r.nu},
              {"nu_union", opt(r.nu_union)}, {"tau_union", opt(r.tau_union)}};
}

RateSummary rates_from(const json& j) {
  RateSummary r;
  r.tau_prime = j.at("tau_prime").get<std::vector<double>>();
  r.tau = j.at("tau").get<std::vector<double>>();
  r.nu = j.at("nu").get<std::vector<double>>();
  r.nu_union = opt_get<double>(j.at("nu_union"));
  r.tau_union = opt_get<double>(j.at("tau_union"));
  return r;
}

json to_json(const EstimateReport& e) {
  return json{{"eta_runs", to_json(e.eta_runs)},
              {"eta_marginal", to_json(e.eta_marginal)},
              {"eta_combined", to_json(e.eta_combined)},
              {"eta_blocks", to_json(e.eta_blocks)},
              {"eta_empty", to_json(e.eta_empty)},
              {"theta_direct", to_json(e.theta_direct)},
              {"theta_from_eta", to_json(e.theta_from_eta)},
              {"phi_hat", to_json(e.phi_hat)},
              {"psi_hat", to_json(e.psi_hat)},
              {"nu_hat", to_json(e.nu_hat)},
              {"tau_hat", to_json(e.tau_hat)},
              {"nu_hat_margin", to_json(e.nu_hat_margin)},
              {"tau_hat_margin", to_json(e.tau_hat_margin)},
              {"nu_union_used", e.nu_union_used},
              {"tau_union_used", e.tau_union_used},
              {"replicates", e.replicates}};
}

EstimateReport estimate_report_from(const json& j) {
  EstimateReport e;
  e.eta_runs = estimate_from(j.at("eta_runs"));
  e.eta_marginal = estimates_from(j.at("eta_marginal"));
  e.eta_combined = estimate_from(j.at("eta_combined"));
  e.eta_blocks = estimate_from(j.at("eta_blocks"));
  e.eta_empty = estimate_from(j.at("eta_empty"));
  e.theta_direct = estimate_from(j.at("theta_direct"));
  e.theta_from_eta = estimate_from(j.at("theta_from_eta"));
  e.phi_hat = estimate_from(j.at("phi_hat"));
  e.psi_hat = estimate_from(j.at("psi_hat"));
  e.nu_hat = estimate_from(j.at("nu_hat"));
  e.tau_hat = estimate_from(j.at("tau_hat"));
  e.nu_hat_margin = estimates_from(j.at("nu_hat_margin"));
  e.tau_hat_margin = estimates_from(j.at("tau_hat_margin"));
  e.nu_union_used = j.at("nu_union_used").get<double>();
  e.tau_union_used = j.at("tau_union_used").get<double>();
  e.replicates = j.at("replicates").get<std::size_t>();
  return e;
}

json to_json(const MultiplicityHistogram& h) {
  json table = json::array();
  for (const auto& [y, count] : h.table()) {
    table.push_back({{"count_vector", y}, {"block_count", count}, {"frequency", h.frequency(y)}});
  }
  return json{{"d", h.dims()},
              {"total_blocks", h.total_blocks()},
              {"nonempty_blocks", h.nonempty_blocks()},
              {"table", table}};
}

MultiplicityHistogram multiplicity_from(const json& j) {
  MultiplicityHistogram h(j.at("d").get<std::size_t>());
  for (const auto& row : j.at("table")) {
    h.add_blocks(row.at("count_vector").get<CountVector>(),
                 row.at("block_count").get<std::uint64_t>());
  }
  const auto empty =
      j.at("total_blocks").get<std::uint64_t>() - j.at("nonempty_blocks").get<std::uint64_t>();
  h.add_blocks(CountVector(h.dims(), 0), empty);
  return h;
}

json to_json(const ClusterSizeHistogram& h) {
  json table = json::array();
  for (const auto& [size, count] : h.table()) {
    table.push_back({{"size", size}, {"block_count", count}, {"frequency", h.frequency(size)}});
  }
  return json{{"total_blocks", h.total_blocks()},
              {"nonempty_blocks", h.nonempty_blocks()},
              {"events", h.events()},
              {"mean", h.mean()},
              {"table", table}};
}

ClusterSizeHistogram clusters_from(const json& j) {
  ClusterSizeHistogram h;
  for (const auto& row : j.at("table")) {
    h.add_blocks(row.at("size").get<std::uint32_t>(), row.at("block_count").get<std::uint64_t>());
  }
  h.add_blocks(0, j.at("total_blocks").get<std::uint64_t>() -
                      j.at("nonempty_blocks").get<std::uint64_t>());
  return h;
}

json to_json(const ConditionPoint& p) {
  return json{{"n", p.n},
              {"value", p.value},
              {"std_error", opt(p.std_error)},
              {"event_count", p.event_count}};
}

ConditionPoint point_from(const json& j) {
  return ConditionPoint{j.at("n").get<std::size_t>(), j.at("value").get<double>(),
                        opt_get<double>(j.at("std_error")),
                        j.at("event_count").get<std::uint64_t>()};
}

json to_json(const ConditionReport& c) {
  json grid = json::array();
  for (const auto& p : c.grid) grid.push_back(to_json(p));
  return json{{"name", c.name}, {"hint", c.hint()}, {"grid", grid}};
}

ConditionReport condition_from(const json& j) {
  ConditionReport c{j.at("name").get<std::string>(), {}};
  for (const auto& p : j.at("grid")) c.grid.push_back(point_from(p));
  return c;
}

json to_json(const ScalingReport& s) {
  return json{{"c", s.c},
              {"base_rate", s.base_rate},
              {"scaled_rate", s.scaled_rate},
              {"ratio", s.ratio},
              {"tv_distance", s.tv_distance},
              {"base_clusters", to_json(s.base_clusters)},
              {"scaled_clusters", to_json(s.scaled_clusters)}};
}

ScalingReport scaling_from(const json& j) {
  ScalingReport s;
  s.c = j.at("c").get<double>();
  s.base_rate = j.at("base_rate").get<double>();
  s.scaled_rate = j.at("scaled_rate").get<double>();
  s.ratio = j.at("ratio").get<double>();
  s.tv_distance = j.at("tv_distance").get<double>();
  s.base_clusters = clusters_from(j.at("base_clusters"));
  s.scaled_clusters = clusters_from(j.at("scaled_clusters"));
  return s;
}

json to_json(const ContinuityReport& c) {
  return json{{"dropped_margin", c.dropped_margin + 1},
              {"epsilon", c.epsilon},
              {"eta", to_json(c.eta)},
              {"eta_without", to_json(c.eta_without)},
              {"gap", opt(c.gap)}};
}

ContinuityReport continuity_from(const json& j) {
  ContinuityReport c;
  c.dropped_margin = j.at("dropped_margin").get<std::size_t>() - 1;
  c.epsilon = j.at("epsilon").get<std::vector<double>>();
  c.eta = estimates_from(j.at("eta"));
  c.eta_without = estimate_from(j.at("eta_without"));
  c.gap = opt_get<double>(j.at("gap"));
  return c;
}

json to_json(const DerivedLimits& l) {
  json multiplicity = json::array();
  for (const auto& [y, p] : l.multiplicity) {
    multiplicity.push_back({{"count_vector", y}, {"probability", p}});
  }
  json sizes = json::array();
  for (const auto& [size, p] : l.cluster_size) {
    sizes.push_back({{"size", size}, {"probability", p}});
  }
  return json{{"cluster_rate", l.cluster_rate}, {"nu_union", l.nu_union},
              {"tau_union", l.tau_union},       {"eta", l.eta},
              {"theta", l.theta},               {"phi", l.phi},
              {"runs_limit", l.runs_limit},     {"multiplicity", multiplicity},
              {"cluster_size", sizes}};
}

DerivedLimits limits_from(const json& j) {
  DerivedLimits l;
  l.cluster_rate = j.at("cluster_rate").get<double>();
  l.nu_union = j.at("nu_union").get<double>();
  l.tau_union = j.at("tau_union").get<double>();
  l.eta = j.at("eta").get<double>();
  l.theta = j.at("theta").get<double>();
  l.phi = j.at("phi").get<double>();
  l.runs_limit = j.at("runs_limit").get<double>();
  for (const auto& row : j.at("multiplicity")) {
    l.multiplicity[row.at("count_vector").get<CountVector>()] = row.at("probability").get<double>();
  }
  for (const auto& row : j.at("cluster_size")) {
    l.cluster_size[row.at("size").get<std::uint32_t>()] = row.at("probability").get<double>();
  }
  return l;
}

std::string vector_key(const CountVector& y) {
  std::string out;
  for (std::size_t i = 0; i < y.size(); ++i) out += (i ? ";" : "") + std::to_string(y[i]);
  return out;
}

// Estimator rows shared by the CSV table and the JSON deltas.
struct Row {
  std::string name;
  Estimate estimate;
};

std::vector<Row> estimate_rows(const RunReport& r) {
  const EstimateReport& e = r.estimates;
  std::vector<Row> rows{{"eta_runs", e.eta_runs}};
  for (std::size_t j = 0; j < e.eta_marginal.size(); ++j) {
    rows.push_back({"eta_marginal[" + std::to_string(j + 1) + "]", e.eta_marginal[j]});
  }
  rows.push_back({"eta_combined", e.eta_combined});
  rows.push_back({"eta_blocks", e.eta_blocks});
  rows.push_back({"eta_empty", e.eta_empty});
  rows.push_back({"theta_direct", e.theta_direct});
  rows.push_back({"theta_from_eta", e.theta_from_eta});
  rows.push_back({"phi_hat", e.phi_hat});
  rows.push_back({"psi_hat", e.psi_hat});
  rows.push_back({"nu_hat", e.nu_hat});
  rows.push_back({"tau_hat", e.tau_hat});
  for (std::size_t j = 0; j < e.nu_hat_margin.size(); ++j) {
    rows.push_back({"nu_hat[" + std::to_string(j + 1) + "]", e.nu_hat_margin[j]});
    rows.push_back({"tau_hat[" + std::to_string(j + 1) + "]", e.tau_hat_margin[j]});
  }
  // Multiplicity frequencies that have a closed-form target.
  const auto& h = r.multiplicity;
  for (const auto& [key, target] : r.targets) {
    if (!key.starts_with("pi[")) continue;
    CountVector y;
    const std::string_view inner = std::string_view(key).substr(3, key.size() - 4);
    for (const char* p = inner.data(); p <= inner.data() + inner.size(); ++p) {
      std::uint32_t v = 0;
      p = std::from_chars(p, inner.data() + inner.size(), v).ptr;
      y.push_back(v);
    }
    Estimate est;
    est.event_count = h.block_count(y);
    if (h.defined() && y.size() == h.dims()) {
      const double p = h.frequency(y);
      est.value = p;
      est.std_error = std::sqrt(p * (1 - p) / static_cast<double>(h.nonempty_blocks()));
    }
    rows.push_back({key, est});
  }
  return rows;
}

std::string num(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string();
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::string sanitize(std::string_view label) {
  std::string out;
  for (char c : label) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')
               ? c
               : '_';
  }
  return out.empty() ? "run" : out;
}

class Writer {
 public:
  explicit Writer(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << content) || !out.flush()) {
      throw std::runtime_error("cannot write " + path.string());
    }
    written_.push_back(path);
  }

  std::vector<std::filesystem::path> done() { return std::move(written_); }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> written_;
};

}  // namespace

std::string report_to_json(const RunReport& r, bool include_runtime) {
  json conditions = json::array();
  for (const auto& c : r.conditions) conditions.push_back(to_json(c));
  json targets = json::object();
  for (const auto& [k, v] : r.targets) targets[k] = v;
  json deltas = json::object();
  for (const auto& row : estimate_rows(r)) {
    const auto key = target_key(row.name);
    const auto it = r.targets.find(key);
    if (it != r.targets.end() && row.estimate.value) {
      deltas[row.name] = std::abs(*row.estimate.value - it->second);
    }
  }

  json doc{{"config", to_json(r.config)},
           {"k", r.k},
           {"rates", to_json(r.rates)},
           {"estimates", to_json(r.estimates)},
           {"multiplicity", to_json(r.multiplicity)},
           {"cluster_size", to_json(r.clusters)},
           {"conditions", conditions},
           {"scaling", r.scaling ? to_json(*r.scaling) : json(nullptr)},
           {"continuity", r.continuity ? to_json(*r.continuity) : json(nullptr)},
           {"targets", targets},
           {"deltas", deltas},
           {"limits", to_json(r.limits)},
           {"draws", r.draws}};
  // Worker count and timing do not affect the results.
  if (include_runtime) {
    doc["runtime"] = json{{"workers", r.config.workers}, {"wall_seconds", r.wall_seconds}};
  }
  return doc.dump(2) + "\n";
}

RunReport report_from_json(std::string_view text) {
  const json doc = json::parse(text);
  RunReport r;
  r.config = config_from(doc.at("config"));
  r.k = doc.at("k").get<std::size_t>();
  r.rates = rates_from(doc.at("rates"));
  r.estimates = estimate_report_from(doc.at("estimates"));
  r.multiplicity = multiplicity_from(doc.at("multiplicity"));
  r.clusters = clusters_from(doc.at("cluster_size"));
  for (const auto& c : doc.at("conditions")) r.conditions.push_back(condition_from(c));
  if (!doc.at("scaling").is_null()) r.scaling = scaling_from(doc.at("scaling"));
  if (!doc.at("continuity").is_null()) r.continuity = continuity_from(doc.at("continuity"));
  for (const auto& [k, v] : doc.at("targets").items()) r.targets[k] = v.get<double>();
  r.limits = limits_from(doc.at("limits"));
  r.draws = doc.at("draws").get<std::uint64_t>();
  if (doc.contains("runtime")) {
    r.config.workers = doc.at("runtime").at("workers").get<unsigned>();
    r.wall_seconds = doc.at("runtime").at("wall_seconds").get<double>();
  }
  return r;
}

std::vector<std::filesystem::path> emit_report(const RunReport& r,
                                               const std::filesystem::path& dir) {
  const auto target = dir / sanitize(r.config.label);
  std::error_code ec;
  std::filesystem::create_directories(target, ec);
  if (ec) throw std::runtime_error("cannot create " + target.string() + ": " + ec.message());
  Writer w(target);

  for (auto format : r.config.formats) {
    if (format == OutputFormat::Json) {
      w.write("report.json", report_to_json(r));
      continue;
    }

    std::string est(kEstimatesHeader);
    est += '\n';
    for (const auto& row : estimate_rows(r)) {
      const auto it = r.targets.find(target_key(row.name));
      const bool has_target = it != r.targets.end();
      std::optional<double> delta;
      if (has_target && row.estimate.value) delta = std::abs(*row.estimate.value - it->second);
      est += row.name + ',' + num(row.estimate.value) + ',' + num(row.estimate.std_error) + ',' +
             std::to_string(row.estimate.event_count) + ',' +
             (has_target ? num(it->second) : std::string()) + ',' + num(delta) + '\n';
    }
    w.write("estimates.csv", est);

    std::string mult(kHistogramHeader);
    mult += '\n';
    for (const auto& [y, count] : r.multiplicity.table()) {
      mult += vector_key(y) + ',' + num(r.multiplicity.frequency(y)) + ',' +
              std::to_string(count) + '\n';
    }
    w.write("multiplicity.csv", mult);

    std::string sizes(kHistogramHeader);
    sizes += '\n';
    for (const auto& [size, count] : r.clusters.table()) {
      sizes += std::to_string(size) + ',' + num(r.clusters.frequency(size)) + ',' +
               std::to_string(count) + '\n';
    }
    w.write("cluster_size.csv", sizes);

    if (!r.conditions.empty()) {
      std::string cond(kConditionsHeader);
      cond += '\n';
      for (const auto& c : r.conditions) {
        std::string plot(kPlotHeader);
        plot += '\n';
        for (const auto& p : c.grid) {
          cond += c.name + ',' + std::to_string(p.n) + ',' + num(p.value) + ',' +
                  num(p.std_error) + ',' + std::to_string(p.event_count) + '\n';
          plot += std::to_string(p.n) + ',' + num(p.value) + ',' + num(p.std_error) + '\n';
        }
        w.write("plot_" + c.name + ".csv", plot);
      }
      w.write("diagnostics.csv", cond);
    }

    if (r.scaling) {
      const auto& s = *r.scaling;
      w.write("scaling.csv", "c,base_rate,scaled_rate,ratio,tv_distance\n" + num(s.c) + ',' +
                                 num(s.base_rate) + ',' + num(s.scaled_rate) + ',' +
                                 num(s.ratio) + ',' + num(s.tv_distance) + '\n');
    }

    if (r.continuity) {
      const auto& c = *r.continuity;
      std::string plot(kPlotHeader);
      plot += '\n';
      for (std::size_t e = 0; e < c.epsilon.size(); ++e) {
        plot += num(c.epsilon[e]) + ',' + num(c.eta[e].value) + ',' + num(c.eta[e].std_error) +
                '\n';
      }
      plot += "0," + num(c.eta_without.value) + ',' + num(c.eta_without.std_error) + '\n';
      w.write("plot_continuity.csv", plot);
    }
  }
  return w.done();
}

}  // namespace upcross
