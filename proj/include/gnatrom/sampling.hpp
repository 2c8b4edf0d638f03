// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GNATROM_SAMPLING_HPP
#define GNATROM_SAMPLING_HPP

#include "gnatrom/model.hpp"

#include <string>
#include <vector>

namespace gnatrom {

/// Node set N, sampled residual rows I (the degrees of freedom of N), the
/// state entries J they depend on, and the output rows K.
struct SampleSets {
  IndexSet nodes;
  IndexSet residual_indices;
  IndexSet state_indices;
  IndexSet output_indices;
  bool global_output = false;
  Index unknowns_per_node = 1;

  Index num_samples() const { return static_cast<Index>(residual_indices.size()); }
  /// Throws DimensionError if |I| != n_u |N|, I is not a subset of J, or a set is unsorted.
  void validate() const;
};

/// Probe unknowns whose values make up the output, or the whole state.
struct OutputSpec {
  std::vector<Index> probes;
  bool global = false;
};

/// Output rows K: all unknowns for a global output, else the probes' unknowns.
IndexSet output_index_set(const OutputSpec& spec, Index dimension, Index unknowns_per_node = 1);

/// Assembles SampleSets from a node set; J is the model's stencil closure of I.
SampleSets build_sample_sets(const BurgersModel& model, const IndexSet& nodes,
                             const OutputSpec& outputs, Index unknowns_per_node = 1);

// ---------------------------------------------------------------------------
// Greedy node selection

struct GreedyConfig {
  Index target_nodes = 0;     ///< n_s
  Index working_columns = 1;  ///< n_c
  IndexSet seed_nodes;
  Index unknowns_per_node = 1;
};

/// What one greedy iteration did.
struct GreedyIteration {
  Index iteration = 0;
  Index working_vectors = 0;
  Index nodes_to_add = 0;
  Index basis_vectors_before = 0;
  std::vector<Index> added;
};

struct GreedyResult {
  IndexSet nodes;               ///< final node set, sorted
  std::vector<Index> sequence;  ///< seeds followed by added nodes in selection order
  Index num_iterations = 0;
  Index max_rhs = 0;
  std::vector<GreedyIteration> trace;
  std::vector<std::string> warnings;
};

/// Greedy selection of sample nodes that balances the residual and Jacobian
/// bases. Each iteration reconstructs the next working columns of both bases
/// from the current samples by least squares and adds the nodes carrying the
/// largest squared reconstruction error. Ties go to the lowest node index.
GreedyResult greedy_select(const Matrix& phi_r, const Matrix& phi_j, const GreedyConfig& config);

// ---------------------------------------------------------------------------
// Sample matrix and gappy operators

/// Row selection Z(I) acting by gather/scatter; never stored densely.
class SampleMatrix {
 public:
  SampleMatrix(IndexSet rows, Index full_dimension);

  const IndexSet& rows() const { return rows_; }
  Index full_dimension() const { return full_dimension_; }

  Vector gather(const Vector& v) const;         ///< Z v
  Matrix gather(const Matrix& m) const;         ///< Z M
  Vector scatter(const Vector& sampled) const;  ///< Z^T u

 private:
  IndexSet rows_;
  Index full_dimension_;
};

/// Moore-Penrose pseudo-inverse via column-pivoted (complete orthogonal) QR,
/// treating pivots below rel_tol * |largest pivot| as zero.
Matrix pseudo_inverse(const Matrix& m, double rel_tol = 1e-12, Index* rank = nullptr);

/// Gappy POD reconstruction g ~ Phi (Z Phi)^+ Z g.
struct GappyReconstruction {
  Matrix basis;
  IndexSet rows;
  Matrix sampled_pinv;  ///< (Z Phi)^+
  Index rank = 0;

  Vector coefficients(const Vector& sampled) const { return sampled_pinv * sampled; }
  Vector reconstruct(const Vector& sampled) const { return basis * coefficients(sampled); }
  /// Phi (Z Phi)^+ Z g for a full-length g.
  Vector project(const Vector& full) const;
};

GappyReconstruction make_gappy_reconstruction(const Matrix& basis, const IndexSet& rows);

/// Everything the online stage needs; nothing here scales with N.
struct OnlineOperators {
  Matrix a;  ///< (Z Phi_J)^+,                 n_J x n_i
  Matrix b;  ///< Phi_J^T Phi_R (Z Phi_R)^+,   n_J x n_i
  Matrix masked_state_basis;       ///< rows J of Phi_w
  Vector masked_initial_condition;  ///< rows J of w^0
  Matrix output_basis;              ///< rows K of Phi_w
  Vector output_initial_condition;  ///< rows K of w^0
  IndexSet residual_indices;
  IndexSet state_indices;
  IndexSet output_indices;
  std::vector<std::string> warnings;

  Index num_samples() const { return a.cols(); }
  Index reduced_dimension() const { return masked_state_basis.cols(); }
};

/// Offline precomputation of the GNAT operators. Throws ConfigError if
/// n_i < max(n_R, n_J) or n_J < n_w, and SolverError if Z Phi_J is rank deficient.
OnlineOperators compute_online_operators(const Matrix& phi_w, const Matrix& phi_r,
                                         const Matrix& phi_j, const SampleSets& sets,
                                         const Vector& initial_condition);

}  // namespace gnatrom

#endif  // GNATROM_SAMPLING_HPP
