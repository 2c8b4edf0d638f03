// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#include "gnatrom/pod.hpp"

#include "gnatrom/error.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace gnatrom {

namespace {

constexpr Index kGramMaxColumns = 2000;
constexpr double kGramMinConditioning = 1e-7;
constexpr Index kRowGramMaxRows = 6000;

std::optional<ThinSvd> gram_svd(const Matrix& w) {
  const Index n = w.cols();
  Matrix gram = Matrix::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) return std::nullopt;
  // Eigen returns ascending eigenvalues.
  const Vector lambda = eig.eigenvalues().reverse();
  const double lmax = lambda(0);
  const double lmin = lambda(n - 1);
  if (!(lmax > 0.0) || !(lmin > 0.0)) return std::nullopt;
  if (std::sqrt(lmin) / std::sqrt(lmax) <= kGramMinConditioning) return std::nullopt;

  ThinSvd out;
  out.gram_route = true;
  out.singular_values = lambda.cwiseSqrt();
  const Matrix v = eig.eigenvectors().rowwise().reverse();
  Matrix u = w * v;
  for (Index c = 0; c < n; ++c) u.col(c) /= out.singular_values(c);
  // Re-orthonormalize; the Gram route loses orthogonality in the trailing
  // vectors as (sigma_1 / sigma_i)^2 * eps.
  Eigen::HouseholderQR<Matrix> qr(u);
  Matrix q = qr.householderQ() * Matrix::Identity(u.rows(), n);
  const Matrix r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  for (Index c = 0; c < n; ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  out.left = std::move(q);
  return out;
}

// Wide matrices: eigen-decomposition of W W^T. Singular values below
// sqrt(rows * eps) * sigma_1 are not resolved by this route and are set to zero.
ThinSvd row_gram_svd(const Matrix& w) {
  const Index m = w.rows();
  Matrix gram = Matrix::Zero(m, m);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(w);
  Vector lambda(m);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(m),
                                         gram.data(), static_cast<lapack_int>(m), lambda.data());
  if (info != 0) {
    throw SolverError("symmetric eigensolver failed (LAPACK dsyevd info " + std::to_string(info) + ")");
  }
  ThinSvd out;
  out.gram_route = true;
  out.singular_values = lambda.reverse().cwiseMax(0.0).cwiseSqrt();
  const double floor = std::sqrt(static_cast<double>(m) * std::numeric_limits<double>::epsilon()) *
                       out.singular_values(0);
  for (Index i = 0; i < m; ++i) {
    if (out.singular_values(i) <= floor) out.singular_values(i) = 0.0;
  }
  out.left = gram.rowwise().reverse();
  return out;
}

ThinSvd lapack_svd(const Matrix& w) {
  const Index m = w.rows();
  const Index n = w.cols();
  const Index k = std::min(m, n);
  Matrix a = w;
  ThinSvd out;
  out.singular_values.resize(k);
  Matrix u;
  Matrix vt;
  lapack_int info = 0;
  if (m >= n) {
    // jobz = 'O': U overwrites A.
    vt.resize(n, n);
    info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'O', static_cast<lapack_int>(m),
                          static_cast<lapack_int>(n), a.data(), static_cast<lapack_int>(m),
                          out.singular_values.data(), nullptr, 1, vt.data(),
                          static_cast<lapack_int>(n));
    if (info == 0) out.left = std::move(a);
  } else {
    // jobz = 'O' with M < N: V^T overwrites A and U is returned separately.
    u.resize(m, m);
    info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'O', static_cast<lapack_int>(m),
                          static_cast<lapack_int>(n), a.data(), static_cast<lapack_int>(m),
                          out.singular_values.data(), u.data(), static_cast<lapack_int>(m),
                          nullptr, 1);
    if (info == 0) out.left = std::move(u);
  }
  if (info != 0) {
    throw SolverError("SVD failed to converge (LAPACK dgesdd info " + std::to_string(info) + ")");
  }
  out.left.conservativeResize(m, k);
  return out;
}

}  // namespace

ThinSvd thin_svd(const Matrix& w) {
  if (w.size() == 0) throw ConfigError("thin_svd: empty matrix");
  if (w.cols() <= kGramMaxColumns && w.rows() >= 2 * w.cols()) {
    if (auto g = gram_svd(w)) return std::move(*g);
  }
  if (w.cols() >= w.rows() && w.rows() <= kRowGramMaxRows) return row_gram_svd(w);
  return lapack_svd(w);
}

Index numerical_rank(const Vector& singular_values, Index rows, Index cols) {
  if (singular_values.size() == 0 || !(singular_values(0) > 0.0)) return 0;
  const double tol = static_cast<double>(std::max(rows, cols)) *
                     std::numeric_limits<double>::epsilon() * singular_values(0);
  Index r = 0;
  while (r < singular_values.size() && singular_values(r) > tol) ++r;
  return r;
}

PodBasis compute_pod(const Matrix& w, Truncation truncation) {
  if (w.size() == 0 || w.isZero(0.0)) throw ConfigError("compute_pod: zero snapshot matrix");
  if (truncation.mode == Truncation::Mode::energy &&
      !(truncation.fraction > 0.0 && truncation.fraction <= 1.0)) {
    throw ConfigError("compute_pod: energy fraction must lie in (0, 1]");
  }
  if (truncation.mode == Truncation::Mode::fixed && truncation.size < 1) {
    throw ConfigError("compute_pod: fixed basis size must be >= 1");
  }

  ThinSvd svd = thin_svd(w);
  PodBasis pod;
  pod.singular_values = svd.singular_values;
  const Index rank = numerical_rank(svd.singular_values, w.rows(), w.cols());
  const Vector energy = svd.singular_values.array().square();
  const double total = energy.sum();

  Index keep = 0;
  if (truncation.mode == Truncation::Mode::energy) {
    double acc = 0.0;
    while (keep < energy.size()) {
      acc += energy(keep);
      ++keep;
      if (acc / total >= truncation.fraction) break;
    }
    keep = std::min(keep, std::max<Index>(rank, 1));
  } else {
    keep = truncation.size;
    if (keep > rank) {
      pod.warnings.push_back("requested " + std::to_string(keep) +
                             " basis vectors but numerical rank is " + std::to_string(rank) +
                             "; clamped");
      keep = std::max<Index>(rank, 1);
    }
  }

  pod.basis = svd.left.leftCols(keep);
  for (Index c = 0; c < keep; ++c) {
    Index arg = 0;
    pod.basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (pod.basis(arg, c) < 0.0) pod.basis.col(c) = -pod.basis.col(c);
  }
  pod.energy_fraction = energy.head(keep).sum() / total;
  return pod;
}

void persist(const PodBasis& basis, const std::filesystem::path& path) {
  nlohmann::json trailer;
  trailer["singular_values"] =
      std::vector<double>(basis.singular_values.data(),
                          basis.singular_values.data() + basis.singular_values.size());
  trailer["energy_fraction"] = basis.energy_fraction;
  trailer["warnings"] = basis.warnings;
  save_artifact(path, {SnapshotKind::basis, basis.basis, trailer});
}

PodBasis load_basis(const std::filesystem::path& path) {
  MatrixArtifact art = load_artifact(path);
  if (art.kind != SnapshotKind::basis) throw FormatError(path.string() + ": not a basis artifact");
  PodBasis b;
  b.basis = std::move(art.data);
  try {
    const auto sv = art.trailer.at("singular_values").get<std::vector<double>>();
    b.singular_values = Eigen::Map<const Vector>(sv.data(), static_cast<Index>(sv.size()));
    b.energy_fraction = art.trailer.at("energy_fraction").get<double>();
    b.warnings = art.trailer.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad basis trailer: " + e.what());
  }
  return b;
}

}  // namespace gnatrom
