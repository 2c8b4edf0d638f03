// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#include "gnatrom/types.hpp"

#include "gnatrom/error.hpp"

#include <algorithm>
#include <string>

namespace gnatrom {

IndexSet make_index_set(std::vector<Index> indices) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return indices;
}

void check_index_set(const IndexSet& set, Index bound, const char* what) {
  for (Index i : set) {
    if (i < 0 || i >= bound) {
      throw DimensionError(std::string(what) + ": index " + std::to_string(i) +
                           " outside [0, " + std::to_string(bound) + ")");
    }
  }
}

Index position_in(const IndexSet& set, Index value) {
  auto it = std::lower_bound(set.begin(), set.end(), value);
  if (it == set.end() || *it != value) return -1;
  return static_cast<Index>(it - set.begin());
}

Matrix gather_rows(const Matrix& m, const IndexSet& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Index>(r), c) = m(rows[r], c);
  }
  return out;
}

Vector gather_rows(const Vector& v, const IndexSet& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Index>(r)) = v(rows[r]);
  return out;
}

}  // namespace gnatrom
