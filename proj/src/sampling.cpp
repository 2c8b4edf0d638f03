// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#include "gnatrom/sampling.hpp"

#include "gnatrom/error.hpp"

#include <algorithm>
#include <string>

namespace gnatrom {

namespace {

bool sorted_unique(const IndexSet& set) {
  return std::adjacent_find(set.begin(), set.end(),
                            [](Index a, Index b) { return a >= b; }) == set.end();
}

IndexSet node_dofs(const IndexSet& nodes, Index n_u) {
  IndexSet dofs;
  dofs.reserve(nodes.size() * static_cast<std::size_t>(n_u));
  for (Index node : nodes) {
    for (Index k = 0; k < n_u; ++k) dofs.push_back(node * n_u + k);
  }
  return make_index_set(std::move(dofs));
}

// Columns [first, first + count) of `basis` minus their least-squares
// reconstruction from columns [0, first) restricted to `rows`.
Matrix reconstruction_error(const Matrix& basis, Index first, Index count, const IndexSet& rows,
                            bool& rank_deficient) {
  Matrix target = basis.middleCols(first, count);
  if (first == 0) return target;
  const Matrix sampled = gather_rows(Matrix(basis.leftCols(first)), rows);
  const Matrix rhs = gather_rows(target, rows);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(1e-12);
  cod.compute(sampled);
  if (cod.rank() < first) rank_deficient = true;
  const Matrix coeffs = cod.solve(rhs);
  target.noalias() -= basis.leftCols(first) * coeffs;
  return target;
}

}  // namespace

void SampleSets::validate() const {
  if (unknowns_per_node < 1) throw DimensionError("unknowns_per_node must be positive");
  for (const IndexSet* s : {&nodes, &residual_indices, &state_indices, &output_indices}) {
    if (!sorted_unique(*s)) throw DimensionError("sample index sets must be sorted and unique");
  }
  if (residual_indices.size() != nodes.size() * static_cast<std::size_t>(unknowns_per_node)) {
    throw DimensionError("residual index count does not match node count");
  }
  if (!std::includes(state_indices.begin(), state_indices.end(), residual_indices.begin(),
                     residual_indices.end())) {
    throw DimensionError("residual indices are not contained in state indices");
  }
}

IndexSet output_index_set(const OutputSpec& spec, Index dimension, Index unknowns_per_node) {
  if (unknowns_per_node < 1 || dimension % unknowns_per_node != 0) {
    throw DimensionError("dimension is not a multiple of unknowns_per_node");
  }
  if (spec.global) {
    IndexSet all(static_cast<std::size_t>(dimension));
    for (Index i = 0; i < dimension; ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
  }
  IndexSet probes = make_index_set(spec.probes);
  check_index_set(probes, dimension / unknowns_per_node, "output probe");
  return node_dofs(probes, unknowns_per_node);
}

SampleSets build_sample_sets(const BurgersModel& model, const IndexSet& nodes,
                             const OutputSpec& outputs, Index unknowns_per_node) {
  if (unknowns_per_node < 1 || model.dimension() % unknowns_per_node != 0) {
    throw DimensionError("dimension is not a multiple of unknowns_per_node");
  }
  SampleSets sets;
  sets.unknowns_per_node = unknowns_per_node;
  sets.nodes = make_index_set(nodes);
  check_index_set(sets.nodes, model.dimension() / unknowns_per_node, "sample node");
  sets.residual_indices = node_dofs(sets.nodes, unknowns_per_node);
  sets.state_indices = model.stencil_closure(sets.residual_indices);
  sets.global_output = outputs.global;
  sets.output_indices = output_index_set(outputs, model.dimension(), unknowns_per_node);
  sets.validate();
  return sets;
}

GreedyResult greedy_select(const Matrix& phi_r, const Matrix& phi_j, const GreedyConfig& config) {
  const Index n_u = config.unknowns_per_node;
  if (n_u < 1) throw ConfigError("unknowns_per_node must be positive");
  if (phi_r.rows() != phi_j.rows()) throw DimensionError("residual and Jacobian bases differ in length");
  if (phi_r.rows() % n_u != 0) throw DimensionError("basis length is not a multiple of unknowns_per_node");
  const Index num_nodes = phi_r.rows() / n_u;
  const Index n_s = config.target_nodes;
  const Index n_c = config.working_columns;

  IndexSet seeds = make_index_set(config.seed_nodes);
  check_index_set(seeds, num_nodes, "seed node");
  if (n_s > num_nodes) {
    throw ConfigError("target_nodes (" + std::to_string(n_s) + ") exceeds the node count (" +
                      std::to_string(num_nodes) + ")");
  }
  if (n_s < static_cast<Index>(seeds.size())) throw ConfigError("target_nodes is below the seed count");
  if (n_c < 1) throw ConfigError("working_columns must be at least 1");
  if (n_c > std::min({phi_r.cols(), phi_j.cols(), n_u * n_s})) {
    throw ConfigError("working_columns exceeds min(n_R, n_J, n_u * n_s)");
  }

  GreedyResult result;
  result.sequence = seeds;
  std::vector<char> sampled(static_cast<std::size_t>(num_nodes), 0);
  for (Index s : seeds) sampled[static_cast<std::size_t>(s)] = 1;

  const Index n_a = n_s - static_cast<Index>(seeds.size());
  if (n_a == 0) {
    result.nodes = seeds;
    return result;
  }
  const Index n_it = std::min(n_c, n_a);
  const Index n_rhs_max = (n_c + n_a - 1) / n_a;
  const Index n_c_min = n_c / n_it;
  const Index n_a_min = n_a * n_rhs_max / n_c;
  result.num_iterations = n_it;
  result.max_rhs = n_rhs_max;

  Index q = 0;
  Vector node_error(num_nodes);
  for (Index p = 1; p <= n_it; ++p) {
    const Index n_cp = n_c_min + (p <= n_c % n_it ? 1 : 0);
    const Index n_ap = n_a_min + (n_rhs_max == 1 && p <= n_a % n_c ? 1 : 0);

    const IndexSet dofs = node_dofs(make_index_set(result.sequence), n_u);
    bool deficient = false;
    const Matrix r = reconstruction_error(phi_r, q, n_cp, dofs, deficient);
    const Matrix j = reconstruction_error(phi_j, q, n_cp, dofs, deficient);
    if (deficient) {
      result.warnings.push_back("greedy iteration " + std::to_string(p) +
                                ": restricted basis is rank deficient, using minimum-norm fit");
    }

    const Vector dof_error = r.rowwise().squaredNorm() + j.rowwise().squaredNorm();
    for (Index l = 0; l < num_nodes; ++l) node_error(l) = dof_error.segment(l * n_u, n_u).sum();

    GreedyIteration it;
    it.iteration = p;
    it.working_vectors = n_cp;
    it.nodes_to_add = n_ap;
    it.basis_vectors_before = q;
    for (Index k = 0; k < n_ap; ++k) {
      Index best = -1;
      for (Index l = 0; l < num_nodes; ++l) {
        if (sampled[static_cast<std::size_t>(l)]) continue;
        if (best < 0 || node_error(l) > node_error(best)) best = l;
      }
      if (best < 0) throw ConfigError("greedy selection ran out of nodes");
      sampled[static_cast<std::size_t>(best)] = 1;
      result.sequence.push_back(best);
      it.added.push_back(best);
    }
    result.trace.push_back(std::move(it));
    q += n_cp;
  }
  result.nodes = make_index_set(result.sequence);
  return result;
}

SampleMatrix::SampleMatrix(IndexSet rows, Index full_dimension)
    : rows_(std::move(rows)), full_dimension_(full_dimension) {
  if (!sorted_unique(rows_)) throw DimensionError("sample rows must be sorted and unique");
  check_index_set(rows_, full_dimension_, "sample row");
}

Vector SampleMatrix::gather(const Vector& v) const {
  if (v.size() != full_dimension_) throw DimensionError("gather: vector length mismatch");
  return gather_rows(v, rows_);
}

Matrix SampleMatrix::gather(const Matrix& m) const {
  if (m.rows() != full_dimension_) throw DimensionError("gather: matrix row count mismatch");
  return gather_rows(m, rows_);
}

Vector SampleMatrix::scatter(const Vector& sampled) const {
  if (sampled.size() != static_cast<Index>(rows_.size())) {
    throw DimensionError("scatter: vector length mismatch");
  }
  Vector full = Vector::Zero(full_dimension_);
  for (std::size_t k = 0; k < rows_.size(); ++k) full(rows_[k]) = sampled(static_cast<Index>(k));
  return full;
}

Matrix pseudo_inverse(const Matrix& m, double rel_tol, Index* rank) {
  if (m.size() == 0) {
    if (rank) *rank = 0;
    return Matrix::Zero(m.cols(), m.rows());
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(rel_tol);
  cod.compute(m);
  if (rank) *rank = cod.rank();
  return cod.pseudoInverse();
}

Vector GappyReconstruction::project(const Vector& full) const {
  if (full.size() != basis.rows()) throw DimensionError("gappy projection: length mismatch");
  return reconstruct(gather_rows(full, rows));
}

GappyReconstruction make_gappy_reconstruction(const Matrix& basis, const IndexSet& rows) {
  check_index_set(rows, basis.rows(), "gappy row");
  GappyReconstruction g;
  g.basis = basis;
  g.rows = rows;
  g.sampled_pinv = pseudo_inverse(gather_rows(basis, rows), 1e-12, &g.rank);
  return g;
}

OnlineOperators compute_online_operators(const Matrix& phi_w, const Matrix& phi_r,
                                         const Matrix& phi_j, const SampleSets& sets,
                                         const Vector& initial_condition) {
  sets.validate();
  const Index n = phi_w.rows();
  if (phi_r.rows() != n || phi_j.rows() != n || initial_condition.size() != n) {
    throw DimensionError("online operators: basis and initial condition lengths differ");
  }
  check_index_set(sets.state_indices, n, "state index");
  check_index_set(sets.output_indices, n, "output index");
  const Index n_i = sets.num_samples();
  if (n_i < phi_r.cols() || n_i < phi_j.cols()) {
    throw ConfigError("online operators: need n_i >= max(n_R, n_J), got n_i=" +
                      std::to_string(n_i) + ", n_R=" + std::to_string(phi_r.cols()) +
                      ", n_J=" + std::to_string(phi_j.cols()));
  }
  if (phi_j.cols() < phi_w.cols()) {
    throw ConfigError("online operators: need n_J >= n_w");
  }

  OnlineOperators ops;
  Index rank_j = 0;
  ops.a = pseudo_inverse(gather_rows(phi_j, sets.residual_indices), 1e-12, &rank_j);
  if (rank_j < phi_j.cols()) {
    throw SolverError("sampled Jacobian basis Z Phi_J is rank deficient (rank " +
                      std::to_string(rank_j) + " of " + std::to_string(phi_j.cols()) + ")");
  }
  Index rank_r = 0;
  const Matrix zr_pinv = pseudo_inverse(gather_rows(phi_r, sets.residual_indices), 1e-12, &rank_r);
  if (rank_r < phi_r.cols()) {
    ops.warnings.push_back("sampled residual basis Z Phi_R is rank deficient (rank " +
                           std::to_string(rank_r) + " of " + std::to_string(phi_r.cols()) +
                           "), using minimum-norm pseudo-inverse");
  }
  ops.b = (phi_j.transpose() * phi_r) * zr_pinv;
  ops.masked_state_basis = gather_rows(phi_w, sets.state_indices);
  ops.masked_initial_condition = gather_rows(initial_condition, sets.state_indices);
  ops.output_basis = gather_rows(phi_w, sets.output_indices);
  ops.output_initial_condition = gather_rows(initial_condition, sets.output_indices);
  ops.residual_indices = sets.residual_indices;
  ops.state_indices = sets.state_indices;
  ops.output_indices = sets.output_indices;
  return ops;
}

}  // namespace gnatrom
