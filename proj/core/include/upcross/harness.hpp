#pragma once

// Experiment runner: config parsing, presets, the run itself and report
// output.
//
// Config grammar: one `key = value` per line, `#` starts a comment, blank
// lines are ignored. Lists are comma-separated; lag sets are
// semicolon-separated lists, e.g. `lags = 0,-2,-3; 1`. Margins are 1-based
// in text.
//
//   process    ex61 | ex62 | iid | custom     (custom needs `lags`)
//   lags       lag sets, one per margin
//   d          margins of iid (default 1)
//   n          window length
//   replicates number of windows R
//   tau_prime  one value per margin
//   blocks     sqrt | positive integer k
//   scale      c > 0 for the rescaling check
//   epsilon    strictly decreasing positive grid for the continuity check
//   drop       margin removed by the continuity check (default: last)
//   n_grid     strictly increasing n values for the condition statistics
//   seed       master seed
//   workers    worker threads
//   out        output directory
//   format     json, csv or json,csv
//   label      free text

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "upcross/diagnostics.hpp"
#include "upcross/estimators.hpp"
#include "upcross/levels.hpp"
#include "upcross/oracle.hpp"
#include "upcross/pointproc.hpp"
#include "upcross/process.hpp"

namespace upcross {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field(std::move(field)) {}
  std::string field;
};

enum class OutputFormat { Json, Csv };

struct ExperimentConfig {
  std::string label;
  std::string process = "ex61";
  std::vector<std::vector<int>> lags;
  std::size_t d = 1;
  std::size_t n = 10000;
  std::size_t replicates = 2000;
  std::vector<double> tau_prime;
  BlockRule blocks;
  std::optional<double> scale;
  std::vector<double> epsilon;
  std::optional<std::size_t> drop;  // 0-based
  std::vector<std::size_t> n_grid;
  std::uint64_t seed = 20070101;
  unsigned workers = 1;
  std::string out;
  std::vector<OutputFormat> formats{OutputFormat::Json};

  ProcessSpec spec() const;
  SimulationSettings settings() const;
  /// Throws ConfigError naming the first offending field.
  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Applies one `key = value` setting; used by the file parser and by CLI
/// overrides.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Inverse of parse_config for every field that differs from the default
/// or is needed to rerun.
std::string format_config(const ExperimentConfig& config);

std::span<const std::string_view> preset_names() noexcept;
/// Every run of the named preset; most presets have one.
std::vector<ExperimentConfig> preset(std::string_view name);

/// Limits derived from the cluster structure of the process.
struct DerivedLimits {
  double cluster_rate = 0;
  double nu_union = 0;
  double tau_union = 0;
  double eta = 0;
  double theta = 0;
  double phi = 0;
  double runs_limit = 0;
  std::map<CountVector, double> multiplicity;
  std::map<std::uint32_t, double> cluster_size;
  friend bool operator==(const DerivedLimits&, const DerivedLimits&) = default;
};

DerivedLimits derived_limits(const ProcessSpec& spec, std::span<const double> tau_prime);

/// Closed-form targets for built-in processes, keyed by quantity:
/// eta, theta, phi, eta_marginal[j], pi[y1;y2;...]. Empty for custom specs.
std::map<std::string, double> closed_form_targets(const ProcessSpec& spec,
                                                  std::span<const double> tau_prime);

struct RunReport {
  ExperimentConfig config;
  std::size_t k = 0;
  RateSummary rates;
  EstimateReport estimates;
  MultiplicityHistogram multiplicity;
  ClusterSizeHistogram clusters;
  std::vector<ConditionReport> conditions;
  std::optional<ScalingReport> scaling;
  std::optional<ContinuityReport> continuity;
  std::map<std::string, double> targets;
  DerivedLimits limits;
  std::uint64_t draws = 0;
  /// Not part of the determinism contract.
  double wall_seconds = 0;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

struct RunOptions {
  /// Compute condition statistics even without an explicit n_grid.
  bool diagnostics = false;
};

RunReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Target key of an estimator row, or empty.
std::string target_key(std::string_view estimator);

/// The "runtime" member (worker count, wall-clock) is the only part that
/// may differ between reruns of the same config; include_runtime = false
/// leaves it out.
std::string report_to_json(const RunReport& report, bool include_runtime = true);
RunReport report_from_json(std::string_view text);

inline constexpr std::string_view kEstimatesHeader =
    "estimator,value,std_error,event_count,target,delta";
inline constexpr std::string_view kHistogramHeader = "count_vector,frequency,block_count";
inline constexpr std::string_view kConditionsHeader = "statistic,n,value,std_error,event_count";
inline constexpr std::string_view kPlotHeader = "x,y,std_error";

/// Writes the report in every configured format under `dir` and returns the
/// paths written. Throws std::runtime_error naming the path on failure.
std::vector<std::filesystem::path> emit_report(const RunReport& report,
                                               const std::filesystem::path& dir);

/// Directory reports go to: config.out, else $UPCROSS_OUT_DIR, else ".".
std::filesystem::path output_directory(const ExperimentConfig& config);

/// Event-file grammar, one expression per non-comment line:
///   true | false | gt(t, c) | up(j, i) | exc(j, i) | not(e) | and(e, ...) | or(e, ...)
/// up / exc expand against `spec` with level u_j; j is 1-based.
Event parse_event(std::string_view text, const ProcessSpec& spec, std::span<const double> levels);

struct OracleQuery {
  std::string process = "ex61";
  std::size_t d = 1;
  std::vector<std::vector<int>> lags;
  std::vector<double> levels;
  std::vector<std::string> expressions;
};

/// Header lines `process = ...`, `lags = ...`, `d = ...`, `levels = ...`
/// followed by one expression per line.
OracleQuery parse_oracle_file(std::string_view text);

}  // namespace upcross
