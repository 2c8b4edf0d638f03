// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GNATROM_PIPELINE_HPP
#define GNATROM_PIPELINE_HPP

#include "gnatrom/bounds.hpp"
#include "gnatrom/pod.hpp"
#include "gnatrom/sampling.hpp"
#include "gnatrom/solvers.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gnatrom {

inline constexpr int kConfigSchemaVersion = 1;

struct RomSizes {
  Index n_w = 50;
  Index n_r = 160;
  Index n_j = 70;
  Index n_i = 160;

  friend bool operator==(const RomSizes&, const RomSizes&) = default;
};

/// Everything the offline stage needs. Parsed from a versioned JSON document.
struct OfflineConfig {
  Index num_nodes = 4001;
  double domain_length = 100.0;
  TimeDiscretization time;
  std::vector<ParameterPoint> training_inputs;
  std::optional<ParameterPoint> online_input;
  StateSnapshotVariant state_snapshots = StateSnapshotVariant::from_initial;
  int procedure = 2;
  bool normalize_snapshots = true;
  RomSizes sizes;
  /// Extra residual basis vectors kept for the projection-error estimate.
  Index residual_extra = 10;
  /// Greedy working columns; 0 selects min(n_R, n_J, n_s).
  Index working_columns = 0;
  IndexSet seed_nodes{0};
  OutputSpec outputs{{}, true};
  /// Also build the interpolatory tier-I residual basis for the DEIM-like baseline.
  bool deim_basis = true;
  SolverConfig solver;

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

OfflineConfig offline_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const OfflineConfig& config);
OfflineConfig load_offline_config(const std::filesystem::path& path);

SolverConfig solver_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SolverConfig& config);

/// Record of an offline run. Artifact paths are relative to `directory`.
struct RunManifest {
  OfflineConfig config;
  RomSizes sizes;  ///< sizes actually built (after rank clamping)
  std::map<std::string, std::string> artifacts;
  SampleSets sets;
  std::vector<Index> greedy_sequence;
  nlohmann::json greedy_trace = nlohmann::json::array();
  std::vector<std::string> warnings;
  std::filesystem::path directory;

  std::filesystem::path artifact(const std::string& name) const;
  bool has_artifact(const std::string& name) const { return artifacts.count(name) > 0; }
};

nlohmann::json to_json(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest load_manifest(const std::filesystem::path& path);

/// Offline stage: tier-I training solves, state basis, tier-II solves when the
/// procedure needs them, residual and Jacobian bases, greedy sampling and the
/// online operators. Writes artifacts, manifest.json and timings.json to
/// `out_dir`. Progress goes to `log` when given.
RunManifest run_offline(const OfflineConfig& config, const std::filesystem::path& out_dir,
                        std::ostream* log = nullptr);

/// Online operators persisted by run_offline.
OnlineOperators load_online_operators(const RunManifest& manifest);

struct OnlineResult {
  ReducedTrajectory rom;
  double wall_seconds = 0.0;
  std::filesystem::path trajectory_path;
};

/// Online stage: GNAT at mu. Persists the reduced trajectory next to the
/// manifest when `persist_result` is set.
OnlineResult run_online(const RunManifest& manifest, const ParameterPoint& mu,
                        bool persist_result = true);

/// (1/nt) sum_n |w^n - w~^n| / |w^n| over n = 1..nt (columns 1.. of the inputs).
/// Uses the common prefix if one trajectory is shorter.
double relative_time_averaged_discrepancy(const Matrix& reference, const Matrix& approximation);
/// Variant normalized by the time-averaged reference norm.
double discrepancy_mean_normalized(const Matrix& reference, const Matrix& approximation);

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> methods{
      "gnat", "tier2-pg", "collocation-galerkin", "collocation-ls", "deim-like"};
  return methods;
}

struct MethodReport {
  std::string method;
  bool ok = true;
  std::string message;
  Index steps_completed = 0;
  double discrepancy = 0.0;
  double discrepancy_mean_norm = 0.0;
  double wall_seconds = 0.0;
  double mean_iterations = 0.0;
  Index max_residual_rows = 0;
  Index max_state_entries = 0;
};

struct MetricsReport {
  ParameterPoint mu;
  double reference_wall_seconds = 0.0;
  Index num_samples = 0;
  Index residual_basis_size = 0;
  std::vector<MethodReport> methods;

  nlohmann::json to_json() const;
};

/// Runs the listed methods at the reference trajectory's input and compares
/// them with it. If `reference` does not exist, the tier-I solution at
/// `mu` (or the manifest's online input) is computed and stored there first.
/// Writes report.json, series.csv (per-step relative error) and profiles.csv
/// (final states) to `out_dir`. A diverging method yields ok = false.
MetricsReport run_compare(const RunManifest& manifest, const std::vector<std::string>& methods,
                          const std::filesystem::path& reference,
                          const std::filesystem::path& out_dir,
                          std::optional<ParameterPoint> mu = std::nullopt);

struct BoundsReport {
  BoundTrace trace;
  LipschitzEstimate lipschitz;
  double mean_projection_error_estimate = 0.0;
  std::filesystem::path csv_path;
};

/// Diagnostic error-bound traces for the GNAT solution at mu. Uses a sampled
/// Lipschitz estimate, so the resulting bounds are indicative only.
BoundsReport run_bounds(const RunManifest& manifest, std::optional<ParameterPoint> mu = std::nullopt);

/// Thread cap from GNATROM_THREADS (default: hardware concurrency), applied
/// to the BLAS backend and to concurrent training solves.
int configured_threads();
void apply_thread_limit(int threads);

/// Parses "a=<v>,b=<v>". Throws ConfigError.
ParameterPoint parse_parameter_point(const std::string& text);

}  // namespace gnatrom

#endif  // GNATROM_PIPELINE_HPP
