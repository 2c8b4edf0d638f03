// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GNATROM_TRAJECTORY_HPP
#define GNATROM_TRAJECTORY_HPP

#include "gnatrom/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gnatrom {

/// Per-time-step solver diagnostics.
struct StepRecord {
  Index step = 0;  ///< 1-based index of the computed state
  Index iterations = 0;
  double residual_norm = 0.0;
  std::int64_t wall_ns = 0;
};

/// Outcome of a time-marching solve. A failed step truncates the trajectory
/// after the last accepted state.
struct SolveStatus {
  bool ok = true;
  Index failed_step = -1;
  std::string message;
};

/// Tier-I solution: column n of `states` is w^n.
struct Trajectory {
  ParameterPoint mu;
  TimeDiscretization time;
  Matrix states;
  std::vector<StepRecord> log;
  SolveStatus status;

  Index num_states() const { return states.cols(); }
  Vector state(Index n) const { return states.col(n); }
};

/// Worst-case work per reduced iteration, as counted by the online solver.
struct OnlineCounters {
  Index max_residual_rows = 0;
  Index max_state_entries = 0;
  Index total_iterations = 0;
};

/// Reduced solution: column n of `coords` holds the generalized coordinates
/// w_r^n of w~^n = w^0 + Phi_w w_r^n.
struct ReducedTrajectory {
  ParameterPoint mu;
  TimeDiscretization time;
  Matrix coords;
  std::vector<StepRecord> log;
  SolveStatus status;
  OnlineCounters counters;

  Index num_states() const { return coords.cols(); }
};

/// Full states w^0 + Phi w_r^n for every stored step.
Matrix reconstruct_states(const ReducedTrajectory& rom, const Vector& initial_condition,
                          const Matrix& basis);

/// CSV with columns step,iterations,residual_norm,wall_ns.
void write_convergence_csv(const std::filesystem::path& path, const std::vector<StepRecord>& log);

}  // namespace gnatrom

#endif  // GNATROM_TRAJECTORY_HPP
