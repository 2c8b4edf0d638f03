// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GNATROM_BOUNDS_HPP
#define GNATROM_BOUNDS_HPP

#include "gnatrom/trajectory.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <vector>

namespace gnatrom {

/// Sampled estimate of the inverse-Lipschitz constant a of f(x) = x - dt F(x, t):
/// max over probe pairs and times of |x - y| / |f(x) - f(y)|. Being a max over
/// samples it can only underestimate the supremum.
struct LipschitzEstimate {
  double value = 0.0;
  Index pairs_used = 0;
  bool sampled_lower_estimate = true;
};

using ImplicitMap = std::function<Vector(const Vector& x, double t)>;

/// Generic form; `f` is the one-step map x -> x - dt F(x, t).
LipschitzEstimate estimate_lipschitz_a(const ImplicitMap& f, const std::vector<Vector>& probes,
                                       const std::vector<double>& times);

/// Burgers form, using the probes at every time level t^1..t^nt. F does not
/// depend on t for this model, so one level suffices and is what is evaluated.
LipschitzEstimate estimate_lipschitz_a(const BurgersModel& model, const ParameterPoint& mu,
                                       const std::vector<Vector>& probes,
                                       const TimeDiscretization& time);

/// Over-estimate of a valid for states in the box [lower, upper]^N with
/// 0 < lower and a > 0. There the Godunov flux is pure upwind, so the Jacobian
/// of f is affine in the state and the smallest eigenvalue of its symmetric
/// part is concave; its minimum over the box sits at a vertex. Returns
/// 1 / min_vertex lambda_min(sym(df/dx)). Enumerates 2^N vertices, so N <= 20.
double certified_lipschitz_a(const BurgersModel& model, const ParameterPoint& mu, double lower,
                             double upper, double dt);

/// Per-step bound ingredients. Entry j refers to the step that computes w~^(j+1).
struct BoundTrace {
  double lipschitz_a = 0.0;
  double eps_newton = 0.0;
  double r_inv_norm = 0.0;  ///< |R^-1| = 1 / sigma_min(Z Phi_R)
  Vector b, c, d;
  Vector cum_b, cum_c, cum_d;  ///< entry n-1 holds sum_{k=1..n} a^k {b,c,d}_(n-k)
  /// sqrt of the sum of squared residual singular values beyond n_R, logged as
  /// an average-case surrogate for |(I - P) R|. Negative when not supplied.
  double neglected_singular_values = -1.0;

  Index steps() const { return b.size(); }
};

/// Evaluates b_n, c_n, d_n from the full residual of the reconstructed ROM
/// trajectory (this touches all N entries; diagnostic use only) and fills the
/// cumulative sums with the given a. `residual_singular_values`, if non-empty,
/// is the full residual spectrum used for the surrogate.
BoundTrace bound_terms(const ReducedTrajectory& rom, const BurgersModel& model,
                       const Matrix& phi_w, const Vector& initial_condition,
                       const Matrix& phi_r, const IndexSet& residual_indices, double eps_newton,
                       double lipschitz_a, const Vector& residual_singular_values = Vector());

/// |(Z Phi_R')^+ Z r - [(Z Phi_R)^+ Z r; 0]| with Phi_R the first n_r columns of
/// the extended basis Phi_R'.
double projection_error_estimate(const Matrix& phi_r_extended, Index n_r,
                                 const IndexSet& residual_indices, const Vector& residual_sample);

/// 1 / sigma_min(Z Phi_R). Throws SolverError if Z Phi_R is rank deficient.
double gappy_bound_factor(const Matrix& phi_r, const IndexSet& residual_indices);

/// (cum_b, cum_c, cum_d) at step n >= 1.
std::array<double, 3> global_bounds(const BoundTrace& trace, Index n);

/// Recomputes the cumulative sums from b, c, d and lipschitz_a.
void accumulate_bounds(BoundTrace& trace);

/// CSV with columns n,b,c,d,cum_b,cum_c,cum_d.
void write_bounds_csv(const std::filesystem::path& path, const BoundTrace& trace);

}  // namespace gnatrom

#endif  // GNATROM_BOUNDS_HPP
