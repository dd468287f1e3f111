// upcross: run experiments, presets, condition diagnostics and exact
// probability queries.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "upcross/harness.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<std::size_t> n;
  std::optional<std::string> blocks;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<unsigned> workers;

  void add_to(CLI::App& app) {
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--replicates", replicates, "Number of replicate windows");
    app.add_option("--n", n, "Window length");
    app.add_option("--blocks", blocks, "Blocks per window: sqrt or an integer");
    app.add_option("--out", out, "Output directory (default $UPCROSS_OUT_DIR or .)");
    app.add_option("--format", format, "json, csv or json,csv");
    app.add_option("--workers", workers, "Worker threads");
  }

  void apply(upcross::ExperimentConfig& c) const {
    if (seed) upcross::apply_setting(c, "seed", std::to_string(*seed));
    if (replicates) upcross::apply_setting(c, "replicates", std::to_string(*replicates));
    if (n) upcross::apply_setting(c, "n", std::to_string(*n));
    if (blocks) upcross::apply_setting(c, "blocks", *blocks);
    if (out) upcross::apply_setting(c, "out", *out);
    if (format) upcross::apply_setting(c, "format", *format);
    if (workers) upcross::apply_setting(c, "workers", std::to_string(*workers));
  }
};

void print_row(const std::string& name, const upcross::Estimate& e,
               const std::map<std::string, double>& targets) {
  std::printf("  %-18s", name.c_str());
  if (e.value) {
    std::printf(" %10.5f", *e.value);
  } else {
    std::printf(" %10s", "undefined");
  }
  if (e.std_error) {
    std::printf("  se %.5f", *e.std_error);
  } else {
    std::printf("  se %7s", "-");
  }
  const auto it = targets.find(upcross::target_key(name));
  if (it != targets.end()) std::printf("  target %.5f", it->second);
  if (e.out_of_range) std::printf("  (out of range)");
  std::printf("\n");
}

void print_summary(const upcross::RunReport& r) {
  const auto& e = r.estimates;
  std::printf("%s: %s n=%zu R=%zu k=%zu\n", r.config.label.empty() ? "run" : r.config.label.c_str(),
              r.config.process.c_str(), r.config.n, r.config.replicates, r.k);
  print_row("eta_runs", e.eta_runs, r.targets);
  for (std::size_t j = 0; j < e.eta_marginal.size(); ++j) {
    print_row("eta_marginal[" + std::to_string(j + 1) + "]", e.eta_marginal[j], r.targets);
  }
  print_row("eta_combined", e.eta_combined, r.targets);
  print_row("eta_blocks", e.eta_blocks, r.targets);
  print_row("eta_empty", e.eta_empty, r.targets);
  print_row("theta_direct", e.theta_direct, r.targets);
  print_row("theta_from_eta", e.theta_from_eta, r.targets);
  print_row("phi_hat", e.phi_hat, r.targets);
  std::printf("  limits: eta %.5f theta %.5f phi %.5f\n", r.limits.eta, r.limits.theta,
              r.limits.phi);
  for (const auto& c : r.conditions) {
    std::printf("  %s (%s):", c.name.c_str(), c.hint().c_str());
    for (const auto& p : c.grid) std::printf(" n=%zu %.5f", p.n, p.value);
    std::printf("\n");
  }
  if (r.scaling) {
    std::printf("  scaling c=%g: ratio %.4f tv %.4f\n", r.scaling->c, r.scaling->ratio,
                r.scaling->tv_distance);
  }
  if (r.continuity && r.continuity->gap) {
    std::printf("  continuity gap %.4f\n", *r.continuity->gap);
  }
  std::printf("  %llu draws, %.2f s\n", static_cast<unsigned long long>(r.draws), r.wall_seconds);
}

int run_configs(std::vector<upcross::ExperimentConfig> configs, const Overrides& overrides,
                const upcross::RunOptions& options) {
  for (auto& c : configs) {
    overrides.apply(c);
    const auto report = upcross::run_experiment(c, options);
    print_summary(report);
    for (const auto& path : upcross::emit_report(report, upcross::output_directory(c))) {
      std::printf("  wrote %s\n", path.string().c_str());
    }
  }
  return 0;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int run_oracle(const std::string& path) {
  const upcross::OracleQuery q = upcross::parse_oracle_file(read_file(path));
  const upcross::ProcessSpec spec = q.lags.empty()
                                        ? upcross::builtin_process(q.process, q.d)
                                        : upcross::make_process(q.lags);
  for (const auto& text : q.expressions) {
    const upcross::Event e = upcross::parse_event(text, spec, q.levels);
    std::printf("%.15g\t%s\n", upcross::exact_prob(e), text.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Upcrossing and extremal index experiments for moving-maximum processes"};
  app.require_subcommand(1);
  Overrides overrides;

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  overrides.add_to(*run);

  std::string diag_path;
  auto* diagnose = app.add_subcommand("diagnose", "Run with condition statistics");
  diagnose->add_option("config", diag_path, "Config file")->required()->check(CLI::ExistingFile);
  overrides.add_to(*diagnose);

  std::string preset_name;
  auto* preset = app.add_subcommand("preset", "Run a built-in preset");
  std::string valid;
  for (auto p : upcross::preset_names()) valid += std::string(valid.empty() ? "" : ", ") + std::string(p);
  preset->add_option("name", preset_name, valid)->required();
  overrides.add_to(*preset);

  std::string event_path;
  auto* oracle = app.add_subcommand("oracle", "Exact probabilities of events in a file");
  oracle->add_option("events", event_path, "Event spec file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_configs({upcross::load_config(config_path)}, overrides, {});
    if (*diagnose) {
      return run_configs({upcross::load_config(diag_path)}, overrides, {.diagnostics = true});
    }
    if (*preset) return run_configs(upcross::preset(preset_name), overrides, {});
    if (*oracle) return run_oracle(event_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
