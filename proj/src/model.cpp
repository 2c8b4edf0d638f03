// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#include "gnatrom/model.hpp"

#include "gnatrom/error.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace gnatrom {

namespace {

constexpr double kSourceAmplitude = 0.02;

double physical_flux(double u) { return 0.5 * u * u; }

// The full and masked evaluations both go through the helpers below so that
// every sampled row is produced by the same floating-point operation sequence.

double rhs_value(double flux_left, double flux_right, double dx, double source) {
  return -(flux_right - flux_left) / dx + source;
}

double residual_value(double next, double prev, double dt, double rhs) {
  return next - prev - dt * rhs;
}

// Row i of dR/dw as (A(i,i-1), A(i,i), A(i,i+1)).
std::array<double, 3> jacobian_row(bool last, double u_left, double u_self, double u_right,
                                   double dt, double dx) {
  const FluxDerivative dl = godunov_flux_derivative(u_left, u_self);
  const FluxDerivative dr = godunov_flux_derivative(u_self, u_right);
  // The outflow ghost equals u_self, so both arguments of the right flux move.
  const double d_right_flux_self = last ? dr.d_left + dr.d_right : dr.d_left;
  const double d_rhs_left = dl.d_left / dx;
  const double d_rhs_self = (dl.d_right - d_right_flux_self) / dx;
  const double d_rhs_right = last ? 0.0 : -dr.d_right / dx;
  return {-dt * d_rhs_left, 1.0 - dt * d_rhs_self, -dt * d_rhs_right};
}

double combine(bool has_left, bool has_right, const std::array<double, 3>& j, double left,
               double self, double right) {
  if (!has_left && !has_right) return j[1] * self;
  if (!has_left) return j[1] * self + j[2] * right;
  if (!has_right) return j[0] * left + j[1] * self;
  return j[0] * left + j[1] * self + j[2] * right;
}

void check_length(Index got, Index expected, const char* what) {
  if (got != expected) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                         ", got " + std::to_string(got));
  }
}

}  // namespace

Grid1D::Grid1D(Index num_nodes, double domain_length)
    : num_nodes_(num_nodes), domain_length_(domain_length), dx_(0.0) {
  if (num_nodes < 3) throw ConfigError("Grid1D: num_nodes must be >= 3");
  if (!(domain_length > 0.0) || !std::isfinite(domain_length)) {
    throw ConfigError("Grid1D: domain_length must be positive and finite");
  }
  dx_ = domain_length / static_cast<double>(num_nodes - 1);
}

void TimeDiscretization::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step dt must be > 0");
  if (num_steps < 1) throw ConfigError("num_steps must be >= 1");
}

double godunov_flux(double u_left, double u_right) {
  if (u_left <= u_right) {
    // Rarefaction: minimum of f over [u_left, u_right].
    if (u_left >= 0.0) return physical_flux(u_left);
    if (u_right <= 0.0) return physical_flux(u_right);
    return 0.0;
  }
  // Shock: maximum of f over [u_right, u_left].
  return std::max(physical_flux(u_left), physical_flux(u_right));
}

FluxDerivative godunov_flux_derivative(double u_left, double u_right) {
  if (u_left <= u_right) {
    if (u_left >= 0.0) return {u_left, 0.0};
    if (u_right <= 0.0) return {0.0, u_right};
    return {0.0, 0.0};
  }
  if (physical_flux(u_left) >= physical_flux(u_right)) return {u_left, 0.0};
  return {0.0, u_right};
}

// ---------------------------------------------------------------------------
// TridiagonalMatrix

TridiagonalMatrix::TridiagonalMatrix(Index n)
    : lower_(Vector::Zero(n)), diag_(Vector::Zero(n)), upper_(Vector::Zero(n)) {}

Vector TridiagonalMatrix::apply(const Vector& x) const {
  const Index n = size();
  check_length(x.size(), n, "TridiagonalMatrix::apply");
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const std::array<double, 3> j{lower_(i), diag_(i), upper_(i)};
    const bool has_l = i > 0;
    const bool has_r = i + 1 < n;
    y(i) = combine(has_l, has_r, j, has_l ? x(i - 1) : 0.0, x(i), has_r ? x(i + 1) : 0.0);
  }
  return y;
}

Matrix TridiagonalMatrix::apply(const Matrix& x) const {
  const Index n = size();
  check_length(x.rows(), n, "TridiagonalMatrix::apply");
  Matrix y(n, x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    const double* col = x.col(c).data();
    double* out = y.col(c).data();
    for (Index i = 0; i < n; ++i) {
      const std::array<double, 3> j{lower_(i), diag_(i), upper_(i)};
      const bool has_l = i > 0;
      const bool has_r = i + 1 < n;
      out[i] = combine(has_l, has_r, j, has_l ? col[i - 1] : 0.0, col[i],
                       has_r ? col[i + 1] : 0.0);
    }
  }
  return y;
}

Vector TridiagonalMatrix::solve(const Vector& rhs) const {
  const Index n = size();
  check_length(rhs.size(), n, "TridiagonalMatrix::solve");
  if (n == 0) return rhs;
  std::vector<double> dl(lower_.data() + 1, lower_.data() + n);
  std::vector<double> d(diag_.data(), diag_.data() + n);
  std::vector<double> du(upper_.data(), upper_.data() + n - 1);
  Vector x = rhs;
  const lapack_int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, static_cast<lapack_int>(n), 1,
                                        dl.data(), d.data(), du.data(), x.data(),
                                        static_cast<lapack_int>(n));
  if (info != 0) {
    throw SolverError("tridiagonal solve failed (LAPACK info " + std::to_string(info) + ")");
  }
  return x;
}

Matrix TridiagonalMatrix::to_dense() const {
  const Index n = size();
  Matrix m = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    m(i, i) = diag_(i);
    if (i > 0) m(i, i - 1) = lower_(i);
    if (i + 1 < n) m(i, i + 1) = upper_(i);
  }
  return m;
}

// ---------------------------------------------------------------------------
// BurgersModel

BurgersModel::BurgersModel(Grid1D grid) : grid_(grid) {}

Vector BurgersModel::initial_condition(const ParameterPoint& /*mu*/) const {
  return Vector::Ones(dimension());
}

Vector BurgersModel::source(const ParameterPoint& mu) const {
  const Index n = dimension();
  Vector s(n);
  for (Index i = 0; i < n; ++i) s(i) = kSourceAmplitude * std::exp(mu.b * grid_.x(i));
  return s;
}

Vector BurgersModel::source_rows(const ParameterPoint& mu, const IndexSet& rows) const {
  check_index_set(rows, dimension(), "source_rows");
  Vector s(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    s(static_cast<Index>(r)) = kSourceAmplitude * std::exp(mu.b * grid_.x(rows[r]));
  }
  return s;
}

Vector BurgersModel::semi_discrete_rhs(const Vector& state, double /*t*/,
                                       const ParameterPoint& mu) const {
  const Index n = dimension();
  check_length(state.size(), n, "semi_discrete_rhs");
  const Vector src = source(mu);
  const double dx = grid_.dx();
  Vector f(n);
  double flux_left = godunov_flux(mu.a, state(0));
  for (Index i = 0; i < n; ++i) {
    const double u_right = i + 1 < n ? state(i + 1) : state(i);
    const double flux_right = godunov_flux(state(i), u_right);
    f(i) = rhs_value(flux_left, flux_right, dx, src(i));
    flux_left = flux_right;
  }
  return f;
}

void BurgersModel::residual_into(const Vector& next, const Vector& prev, double dt,
                                 const ParameterPoint& mu, std::span<const double> source,
                                 Vector& residual) const {
  const Index n = dimension();
  check_length(next.size(), n, "residual (next)");
  check_length(prev.size(), n, "residual (prev)");
  check_length(static_cast<Index>(source.size()), n, "residual (source)");
  residual.resize(n);
  const double dx = grid_.dx();
  double flux_left = godunov_flux(mu.a, next(0));
  for (Index i = 0; i < n; ++i) {
    const double u_right = i + 1 < n ? next(i + 1) : next(i);
    const double flux_right = godunov_flux(next(i), u_right);
    residual(i) = residual_value(next(i), prev(i), dt,
                                 rhs_value(flux_left, flux_right, dx, source[i]));
    flux_left = flux_right;
  }
}

void BurgersModel::residual_and_jacobian(const Vector& next, const Vector& prev, double dt,
                                         const ParameterPoint& mu,
                                         std::span<const double> source, Vector& residual,
                                         TridiagonalMatrix& jacobian) const {
  residual_into(next, prev, dt, mu, source, residual);
  const Index n = dimension();
  if (jacobian.size() != n) jacobian = TridiagonalMatrix(n);
  const double dx = grid_.dx();
  for (Index i = 0; i < n; ++i) {
    const bool last = i + 1 == n;
    const double u_left = i == 0 ? mu.a : next(i - 1);
    const double u_right = last ? next(i) : next(i + 1);
    const auto row = jacobian_row(last, u_left, next(i), u_right, dt, dx);
    jacobian.lower()(i) = i == 0 ? 0.0 : row[0];
    jacobian.diag()(i) = row[1];
    jacobian.upper()(i) = last ? 0.0 : row[2];
  }
}

Vector BurgersModel::residual(const Vector& next, const Vector& prev, double /*t_next*/,
                              double dt, const ParameterPoint& mu) const {
  const Vector src = source(mu);
  Vector r;
  residual_into(next, prev, dt, mu, std::span<const double>(src.data(), src.size()), r);
  return r;
}

TridiagonalMatrix BurgersModel::residual_jacobian(const Vector& next, const Vector& prev,
                                                  double /*t_next*/, double dt,
                                                  const ParameterPoint& mu) const {
  const Vector src = source(mu);
  Vector r;
  TridiagonalMatrix j(dimension());
  residual_and_jacobian(next, prev, dt, mu, std::span<const double>(src.data(), src.size()), r,
                        j);
  return j;
}

IndexSet BurgersModel::stencil_closure(const IndexSet& rows) const {
  const Index n = dimension();
  check_index_set(rows, n, "stencil_closure");
  std::vector<Index> out;
  out.reserve(rows.size() * 3);
  for (Index i : rows) {
    if (i > 0) out.push_back(i - 1);
    out.push_back(i);
    if (i + 1 < n) out.push_back(i + 1);
  }
  return make_index_set(std::move(out));
}

MaskedLayout BurgersModel::masked_layout(const IndexSet& rows) const {
  MaskedLayout layout;
  layout.rows = make_index_set(rows);
  layout.closure = stencil_closure(layout.rows);
  layout.full_dimension = dimension();
  layout.stencil.reserve(layout.rows.size());
  for (Index i : layout.rows) {
    layout.stencil.push_back({i > 0 ? position_in(layout.closure, i - 1) : Index{-1},
                              position_in(layout.closure, i),
                              i + 1 < dimension() ? position_in(layout.closure, i + 1)
                                                  : Index{-1}});
  }
  return layout;
}

void BurgersModel::masked_residual_and_jacobian_basis(const MaskedLayout& layout,
                                                      const Vector& next, const Vector& prev,
                                                      const Matrix& masked_basis, double dt,
                                                      const ParameterPoint& mu,
                                                      std::span<const double> source,
                                                      MaskedEvaluation& out) const {
  const Index n = dimension();
  const Index n_rows = static_cast<Index>(layout.rows.size());
  const Index n_closure = static_cast<Index>(layout.closure.size());
  check_length(next.size(), n_closure, "masked residual (next)");
  check_length(prev.size(), n_closure, "masked residual (prev)");
  check_length(masked_basis.rows(), n_closure, "masked residual (basis rows)");
  check_length(static_cast<Index>(source.size()), n_rows, "masked residual (source)");
  const double dx = grid_.dx();
  const Index n_cols = masked_basis.cols();
  out.residual.resize(n_rows);
  out.jacobian_basis.resize(n_rows, n_cols);

  for (Index r = 0; r < n_rows; ++r) {
    const Index i = layout.rows[static_cast<std::size_t>(r)];
    const auto& p = layout.stencil[static_cast<std::size_t>(r)];
    const bool last = i + 1 == n;
    const double u_self = next(p[1]);
    const double u_left = i == 0 ? mu.a : next(p[0]);
    const double u_right = last ? u_self : next(p[2]);
    const double flux_left = godunov_flux(u_left, u_self);
    const double flux_right = godunov_flux(u_self, u_right);
    out.residual(r) = residual_value(u_self, prev(p[1]), dt,
                                     rhs_value(flux_left, flux_right, dx, source[r]));

    const auto row = jacobian_row(last, u_left, u_self, u_right, dt, dx);
    const bool has_l = i > 0;
    const bool has_r = !last;
    for (Index c = 0; c < n_cols; ++c) {
      out.jacobian_basis(r, c) =
          combine(has_l, has_r, row, has_l ? masked_basis(p[0], c) : 0.0, masked_basis(p[1], c),
                  has_r ? masked_basis(p[2], c) : 0.0);
    }
  }
}

MaskedEvaluation BurgersModel::masked_residual_and_jacobian_basis(
    const IndexSet& rows, const MaskedState& next, const MaskedState& prev,
    const Matrix& masked_basis, double /*t_next*/, double dt, const ParameterPoint& mu) const {
  const MaskedLayout layout = masked_layout(rows);
  auto covers = [&](const MaskedState& s, const char* what) {
    check_length(s.values.size(), static_cast<Index>(s.indices.size()), what);
    if (!std::includes(s.indices.begin(), s.indices.end(), layout.closure.begin(),
                       layout.closure.end())) {
      throw DimensionError(std::string(what) + ": mask does not cover the stencil closure");
    }
  };
  covers(next, "masked residual (next)");
  covers(prev, "masked residual (prev)");
  check_length(masked_basis.rows(), static_cast<Index>(next.indices.size()),
               "masked residual (basis rows)");

  // Restrict the caller's masks to exactly the closure.
  const Index n_closure = static_cast<Index>(layout.closure.size());
  Vector next_c(n_closure);
  Vector prev_c(n_closure);
  Matrix basis_c(n_closure, masked_basis.cols());
  for (Index k = 0; k < n_closure; ++k) {
    const Index idx = layout.closure[static_cast<std::size_t>(k)];
    const Index pn = position_in(next.indices, idx);
    const Index pp = position_in(prev.indices, idx);
    next_c(k) = next.values(pn);
    prev_c(k) = prev.values(pp);
    basis_c.row(k) = masked_basis.row(pn);
  }
  const Vector src = source_rows(mu, layout.rows);
  MaskedEvaluation out;
  masked_residual_and_jacobian_basis(layout, next_c, prev_c, basis_c, dt, mu,
                                     std::span<const double>(src.data(), src.size()), out);
  return out;
}

}  // namespace gnatrom
