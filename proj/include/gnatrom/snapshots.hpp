// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GNATROM_SNAPSHOTS_HPP
#define GNATROM_SNAPSHOTS_HPP

#include "gnatrom/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gnatrom {

/// Kind tag stored in the artifact header. Values are part of the file format.
enum class SnapshotKind : std::uint32_t {
  state_from_initial = 0,
  state_per_step = 1,
  raw_state = 2,
  residual_tier1 = 3,
  residual_tier2 = 4,
  jacobian_action_tier2 = 5,
  jacobian_columns_tier2 = 6,
  basis = 7,
  full_trajectory = 8,
  reduced_trajectory = 9,
  operator_matrix = 10,
};

std::string_view to_string(SnapshotKind kind);

/// Origin of one snapshot column: training point, time step and (Gauss-)Newton
/// iteration. State snapshots use iteration 0.
struct ProvenanceEntry {
  ParameterPoint mu;
  Index step = 0;
  Index iteration = 0;

  friend bool operator==(const ProvenanceEntry&, const ProvenanceEntry&) = default;
};

struct SnapshotMatrix {
  SnapshotKind kind = SnapshotKind::raw_state;
  Matrix columns;
  std::vector<ProvenanceEntry> provenance;

  Index rows() const { return columns.rows(); }
  Index cols() const { return columns.cols(); }
  /// Throws DimensionError if the provenance list does not match the columns.
  void validate() const;
};

enum class StateSnapshotVariant { from_initial, per_step_increment, raw };

/// State snapshots of one trajectory: {w^n - w^0}, {w^n - w^(n-1)} (n = 1..nt)
/// or the raw states {w^n} (n = 0..nt).
SnapshotMatrix collect_state_snapshots(const Trajectory& trajectory,
                                       StateSnapshotVariant variant);

/// Horizontal concatenation; all inputs must share kind and row count.
SnapshotMatrix concatenate(const std::vector<SnapshotMatrix>& parts);

/// Scales every column to unit Euclidean norm and drops zero columns.
SnapshotMatrix normalize_columns(const SnapshotMatrix& snapshots);

// ---------------------------------------------------------------------------
// Hyper-reduction snapshots

enum class ModelTier { full = 1, petrov_galerkin = 2, hyper_reduced = 3 };

/// Snapshot-collection procedures 0..3 for the residual and Jacobian bases.
class SnapshotProcedure {
 public:
  explicit SnapshotProcedure(int id);
  int id() const { return id_; }
  /// Tier whose Newton iterations supply the snapshots.
  ModelTier source_tier() const { return id_ == 0 ? ModelTier::full : ModelTier::petrov_galerkin; }
  /// Number of simulations per training input (tier I, plus tier II if needed).
  int simulations_per_training_input() const { return id_ == 0 ? 1 : 2; }
  /// Snapshot columns gained per Newton iteration.
  Index snapshots_per_iteration(Index n_w) const;

 private:
  int id_;
};

/// Data exposed by a solver at each Newton / Gauss-Newton iteration that
/// computes a search direction. Pointers are null when not applicable.
struct IterationEvent {
  ModelTier tier = ModelTier::full;
  ParameterPoint mu;
  Index step = 0;
  Index iteration = 0;
  const Vector* residual = nullptr;        ///< r^(k), full length
  const Matrix* jacobian_basis = nullptr;  ///< J^(k) Phi_w (tier II)
  const Vector* direction = nullptr;       ///< s^(k) (tiers II and III)
};

using IterationHook = std::function<void(const IterationEvent&)>;

/// Accumulates residual / Jacobian snapshots for one procedure. Feed it via
/// hook() from the solver of the matching tier, then call finish().
class HyperReductionCollector {
 public:
  HyperReductionCollector(SnapshotProcedure procedure, Index dimension);

  IterationHook hook();
  void record(const IterationEvent& event);

  /// (snapshots for Phi_R, snapshots for Phi_J). Procedures 0 and 1 return
  /// the same content twice.
  std::pair<SnapshotMatrix, SnapshotMatrix> finish() const;

  Index iterations_recorded() const { return iterations_; }

 private:
  SnapshotProcedure procedure_;
  Index dimension_;
  Index iterations_ = 0;
  std::vector<double> residual_data_;
  std::vector<double> jacobian_data_;
  std::vector<ProvenanceEntry> residual_prov_;
  std::vector<ProvenanceEntry> jacobian_prov_;
};

// ---------------------------------------------------------------------------
// Persistence
//
// Layout (little endian): "GNATSNAP", u32 version (1), u32 kind, u64 rows,
// u64 cols, rows*cols f64 column-major, u64 trailer length, UTF-8 JSON trailer.

inline constexpr std::uint32_t kArtifactVersion = 1;
inline constexpr std::size_t kArtifactHeaderBytes = 8 + 4 + 4 + 8 + 8;

struct MatrixArtifact {
  SnapshotKind kind = SnapshotKind::raw_state;
  Matrix data;
  nlohmann::json trailer;
};

void save_artifact(const std::filesystem::path& path, const MatrixArtifact& artifact);
MatrixArtifact load_artifact(const std::filesystem::path& path);

void persist(const SnapshotMatrix& matrix, const std::filesystem::path& path);
SnapshotMatrix load_snapshots(const std::filesystem::path& path);

void persist(const Trajectory& trajectory, const std::filesystem::path& path);
Trajectory load_trajectory(const std::filesystem::path& path);
void persist(const ReducedTrajectory& trajectory, const std::filesystem::path& path);
ReducedTrajectory load_reduced_trajectory(const std::filesystem::path& path);

}  // namespace gnatrom

#endif  // GNATROM_SNAPSHOTS_HPP
