// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GNATROM_MODEL_HPP
#define GNATROM_MODEL_HPP

#include "gnatrom/types.hpp"

#include <array>
#include <span>
#include <vector>

namespace gnatrom {

/// Inputs of the parameterized Burgers problem: inflow value `a` and the
/// exponential source rate `b`.
struct ParameterPoint {
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const ParameterPoint&, const ParameterPoint&) = default;
};

/// Uniform 1D grid on [0, domain_length]. Node 0 carries the Dirichlet inflow
/// value, so the model has `num_nodes - 1` unknowns located at nodes 1..num_nodes-1.
class Grid1D {
 public:
  Grid1D(Index num_nodes, double domain_length);

  Index num_nodes() const { return num_nodes_; }
  double domain_length() const { return domain_length_; }
  double dx() const { return dx_; }
  Index unknowns() const { return num_nodes_ - 1; }
  /// Coordinate of unknown `i` (grid node i + 1).
  double x(Index i) const { return static_cast<double>(i + 1) * dx_; }

 private:
  Index num_nodes_;
  double domain_length_;
  double dx_;
};

enum class TimeScheme { backward_euler };

struct TimeDiscretization {
  double dt = 0.05;
  Index num_steps = 1000;
  TimeScheme scheme = TimeScheme::backward_euler;

  double time(Index n) const { return static_cast<double>(n) * dt; }
  /// Throws ConfigError unless dt > 0 and num_steps >= 1.
  void validate() const;
};

/// Entries of a state vector restricted to a sorted index set.
struct MaskedState {
  IndexSet indices;
  Vector values;
};

/// Exact-Riemann Godunov flux for f(u) = u^2 / 2.
double godunov_flux(double u_left, double u_right);

/// Partial derivatives of godunov_flux. At non-differentiable points the
/// currently active Riemann branch is frozen and differentiated.
struct FluxDerivative {
  double d_left = 0.0;
  double d_right = 0.0;
};
FluxDerivative godunov_flux_derivative(double u_left, double u_right);

/// Square tridiagonal matrix; lower(i) = A(i, i-1), upper(i) = A(i, i+1).
/// lower(0) and upper(n-1) are unused and kept at zero.
class TridiagonalMatrix {
 public:
  TridiagonalMatrix() = default;
  explicit TridiagonalMatrix(Index n);

  Index size() const { return diag_.size(); }
  Vector& lower() { return lower_; }
  Vector& diag() { return diag_; }
  Vector& upper() { return upper_; }
  const Vector& lower() const { return lower_; }
  const Vector& diag() const { return diag_; }
  const Vector& upper() const { return upper_; }

  Vector apply(const Vector& x) const;
  /// A * X for a dense X with size() rows.
  Matrix apply(const Matrix& x) const;
  /// Solves A x = rhs with partial pivoting. Throws SolverError if singular.
  Vector solve(const Vector& rhs) const;
  Matrix to_dense() const;

 private:
  Vector lower_;
  Vector diag_;
  Vector upper_;
};

/// Precomputed stencil bookkeeping for evaluating residual rows `rows` from
/// state entries on their stencil closure. For each sampled row, `stencil`
/// holds the positions in `closure` of unknowns i-1, i, i+1 (or -1 when the
/// neighbour lies outside the domain).
struct MaskedLayout {
  IndexSet rows;
  IndexSet closure;
  std::vector<std::array<Index, 3>> stencil;
  Index full_dimension = 0;
};

/// Z * R and Z * (dR/dw) * Phi for a sample set.
struct MaskedEvaluation {
  Vector residual;
  Matrix jacobian_basis;
};

/// Parameterized inviscid Burgers equation
///   U_t + (U^2 / 2)_x = 0.02 exp(b x),  U(0, t) = a,  U(x, 0) = 1,
/// discretized with the first-order Godunov finite-volume scheme and
/// backward Euler in time. The outflow interface uses a zero-gradient ghost
/// state. All member functions are pure.
class BurgersModel {
 public:
  explicit BurgersModel(Grid1D grid);

  const Grid1D& grid() const { return grid_; }
  Index dimension() const { return grid_.unknowns(); }

  Vector initial_condition(const ParameterPoint& mu) const;

  /// Source term 0.02 exp(b x_i) at every unknown, or at `rows` only.
  Vector source(const ParameterPoint& mu) const;
  Vector source_rows(const ParameterPoint& mu, const IndexSet& rows) const;

  /// F(w, t; mu).
  Vector semi_discrete_rhs(const Vector& state, double t, const ParameterPoint& mu) const;

  /// w_next - w_prev - dt F(w_next, t_next; mu).
  Vector residual(const Vector& next, const Vector& prev, double t_next, double dt,
                  const ParameterPoint& mu) const;

  /// dR/dw_next = I - dt dF/dw evaluated at w_next.
  TridiagonalMatrix residual_jacobian(const Vector& next, const Vector& prev, double t_next,
                                      double dt, const ParameterPoint& mu) const;

  /// Residual and Jacobian in one sweep; `source` must come from source(mu).
  void residual_and_jacobian(const Vector& next, const Vector& prev, double dt,
                             const ParameterPoint& mu, std::span<const double> source,
                             Vector& residual, TridiagonalMatrix& jacobian) const;
  void residual_into(const Vector& next, const Vector& prev, double dt, const ParameterPoint& mu,
                     std::span<const double> source, Vector& residual) const;

  /// Unknowns whose values influence the residual entries `rows`.
  IndexSet stencil_closure(const IndexSet& rows) const;

  MaskedLayout masked_layout(const IndexSet& rows) const;

  /// Sampled residual rows and sampled rows of J * Phi, computed from the
  /// closure entries only. Bitwise identical to the corresponding rows of
  /// residual() and residual_jacobian().apply(Phi).
  MaskedEvaluation masked_residual_and_jacobian_basis(const IndexSet& rows,
                                                      const MaskedState& next,
                                                      const MaskedState& prev,
                                                      const Matrix& masked_basis, double t_next,
                                                      double dt, const ParameterPoint& mu) const;

  /// Hot-path variant. `next`, `prev` and `masked_basis` are indexed by
  /// layout.closure; `source` by layout.rows. `out` is resized as needed.
  void masked_residual_and_jacobian_basis(const MaskedLayout& layout, const Vector& next,
                                          const Vector& prev, const Matrix& masked_basis,
                                          double dt, const ParameterPoint& mu,
                                          std::span<const double> source,
                                          MaskedEvaluation& out) const;

 private:
  Grid1D grid_;
};

}  // namespace gnatrom

#endif  // GNATROM_MODEL_HPP
