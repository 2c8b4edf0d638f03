// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GNATROM_TYPES_HPP
#define GNATROM_TYPES_HPP

#include <Eigen/Dense>

#include <vector>

namespace gnatrom {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Sorted, duplicate-free list of indices into a state or residual vector.
using IndexSet = std::vector<Index>;

/// Sorts and deduplicates `indices` in place and returns them.
IndexSet make_index_set(std::vector<Index> indices);

/// Throws DimensionError unless every entry of `set` lies in [0, bound).
void check_index_set(const IndexSet& set, Index bound, const char* what);

/// Position of `value` in the sorted set, or -1.
Index position_in(const IndexSet& set, Index value);

/// Rows `rows` of `m`, in order.
Matrix gather_rows(const Matrix& m, const IndexSet& rows);
Vector gather_rows(const Vector& v, const IndexSet& rows);

}  // namespace gnatrom

#endif  // GNATROM_TYPES_HPP
