// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GNATROM_POD_HPP
#define GNATROM_POD_HPP

#include "gnatrom/snapshots.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gnatrom {

/// How many left singular vectors to keep.
struct Truncation {
  enum class Mode { energy, fixed };
  Mode mode = Mode::energy;
  double fraction = 0.9999;
  Index size = 0;

  static Truncation energy(double fraction) { return {Mode::energy, fraction, 0}; }
  static Truncation fixed(Index size) { return {Mode::fixed, 1.0, size}; }
};

/// Orthonormal POD basis with the full singular spectrum of its snapshots.
struct PodBasis {
  Matrix basis;
  Vector singular_values;
  double energy_fraction = 0.0;
  std::vector<std::string> warnings;

  Index size() const { return basis.cols(); }
};

/// Left singular vectors and singular values of W (thin: min(rows, cols) of each).
struct ThinSvd {
  Matrix left;
  Vector singular_values;
  bool gram_route = false;
};

/// Tall matrices with at most 2000 columns and sigma_min / sigma_max above
/// 1e-7 go through the eigen-decomposition of W^T W. Matrices with at least
/// as many columns as rows (and at most 6000 rows) go through that of W W^T,
/// which resolves singular values down to sqrt(rows * eps) * sigma_1 and
/// reports the rest as zero. Everything else goes through LAPACK dgesdd.
ThinSvd thin_svd(const Matrix& w);

/// Truncated POD of the snapshot columns of `w`. Columns are sign-normalized
/// so that the largest-magnitude entry is positive.
PodBasis compute_pod(const Matrix& w, Truncation truncation);
inline PodBasis compute_pod(const SnapshotMatrix& w, Truncation truncation) {
  return compute_pod(w.columns, truncation);
}

/// Number of singular values above max(rows, cols) * eps * sigma_1.
Index numerical_rank(const Vector& singular_values, Index rows, Index cols);

void persist(const PodBasis& basis, const std::filesystem::path& path);
PodBasis load_basis(const std::filesystem::path& path);

}  // namespace gnatrom

#endif  // GNATROM_POD_HPP
