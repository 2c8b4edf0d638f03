// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#include "gnatrom/trajectory.hpp"

#include "gnatrom/error.hpp"

#include <fstream>

namespace gnatrom {

Matrix reconstruct_states(const ReducedTrajectory& rom, const Vector& initial_condition,
                          const Matrix& basis) {
  if (basis.cols() != rom.coords.rows() || basis.rows() != initial_condition.size()) {
    throw DimensionError("reconstruct_states: basis does not match coordinates");
  }
  Matrix states = basis * rom.coords;
  states.colwise() += initial_condition;
  return states;
}

void write_convergence_csv(const std::filesystem::path& path, const std::vector<StepRecord>& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "step,iterations,residual_norm,wall_ns\n";
  out.precision(17);
  for (const auto& r : log) {
    out << r.step << ',' << r.iterations << ',' << r.residual_norm << ',' << r.wall_ns << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace gnatrom
