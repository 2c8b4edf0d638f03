// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef GNATROM_SOLVERS_HPP
#define GNATROM_SOLVERS_HPP

#include "gnatrom/sampling.hpp"
#include "gnatrom/snapshots.hpp"
#include "gnatrom/trajectory.hpp"

namespace gnatrom {

enum class StepPolicy { unit, backtracking };

struct SolverConfig {
  // Tier I (Newton on the full residual).
  double newton_abs_tol = 1e-8;
  double newton_rel_tol = 1e-6;
  Index max_newton_iters = 20;

  // Step length. Backtracking halves alpha until the Armijo condition holds.
  StepPolicy step_policy = StepPolicy::unit;
  double armijo_c = 1e-4;
  double backtrack_rho = 0.5;
  Index max_halvings = 10;

  // Tier II (Gauss-Newton). Converged when the projected gradient
  // |(J Phi)^T r| drops below max(gn_gradient_tol, newton_rel_tol * initial)
  // or the step is below gn_step_tol * max(1, |y|).
  double gn_gradient_tol = 1e-8;
  double gn_step_tol = 1e-10;
  Index gn_max_iters = 20;

  // Hyper-reduced solvers stop when |B D| <= max(reduced_rel_tol * |B D^(0)|,
  // reduced_abs_tol), when |(A C)^T B D| <= max(gn_gradient_tol,
  // reduced_gradient_rel_tol times its initial value), when the step is below
  // gn_step_tol * max(1, |y|), or after gn_max_iters iterations. The gradient
  // test is looser than the residual one because an ill-conditioned Z Phi_R
  // puts a rounding floor under |(A C)^T B D| well above 1e-6 of its start.
  double reduced_rel_tol = 1e-6;
  double reduced_abs_tol = 1e-12;
  double reduced_gradient_rel_tol = 1e-3;

  /// Throws ConfigError for non-positive tolerances or iteration limits.
  void validate() const;
};

/// Tier I: backward Euler with Newton and the tridiagonal Jacobian. A step
/// that misses the tolerance within max_newton_iters ends the run with a
/// failed status; the trajectory keeps the accepted states. The hook sees
/// r^(k) at every iteration that computes a Newton direction.
Trajectory solve_fom(const ParameterPoint& mu, const BurgersModel& model,
                     const TimeDiscretization& time, const SolverConfig& config,
                     const IterationHook& hook = {});

/// Tier II: least-squares Petrov-Galerkin ROM on w^0 + span(phi_w), solved
/// by Gauss-Newton with a QR least-squares step. The hook sees r^(k), J^(k) Phi_w
/// and s^(k) at every iteration that computes a direction.
ReducedTrajectory solve_tier2_pg(const ParameterPoint& mu, const BurgersModel& model,
                                 const Matrix& phi_w, const Vector& initial_condition,
                                 const TimeDiscretization& time, const SolverConfig& config,
                                 const IterationHook& hook = {});

/// Tier III: GNAT online solve. Works on the sampled rows and their stencil
/// closure only; the counters record the rows and entries touched per iteration.
/// Throws SolverError if A C is rank deficient. The hook sees each reduced
/// search direction (no residual is attached).
ReducedTrajectory solve_gnat_online(const ParameterPoint& mu, const BurgersModel& model,
                                    const OnlineOperators& operators,
                                    const TimeDiscretization& time, const SolverConfig& config,
                                    const IterationHook& hook = {});

/// Rows K of w^0 + Phi_w w_r^n for every stored step (one column per step).
struct OutputSeries {
  IndexSet indices;
  Matrix values;
};
OutputSeries compute_outputs(const ReducedTrajectory& rom, const OnlineOperators& operators);

/// Newton on (Z Phi_w)^T Z R(w^0 + Phi_w y) = 0.
ReducedTrajectory baseline_collocation_galerkin(const ParameterPoint& mu,
                                                const BurgersModel& model, const Matrix& phi_w,
                                                const Vector& initial_condition,
                                                const SampleSets& sets,
                                                const TimeDiscretization& time,
                                                const SolverConfig& config);

/// Gauss-Newton on min |Z R(w^0 + Phi_w y)|.
ReducedTrajectory baseline_collocation_least_squares(const ParameterPoint& mu,
                                                     const BurgersModel& model,
                                                     const Matrix& phi_w,
                                                     const Vector& initial_condition,
                                                     const SampleSets& sets,
                                                     const TimeDiscretization& time,
                                                     const SolverConfig& config);

/// GNAT with interpolatory operators: Phi_R = Phi_J = phi_interp with
/// n_R = n_J = n_i, built from tier-I residual snapshots.
ReducedTrajectory baseline_deim_like(const ParameterPoint& mu, const BurgersModel& model,
                                     const Matrix& phi_w, const Matrix& phi_interp,
                                     const Vector& initial_condition, const SampleSets& sets,
                                     const TimeDiscretization& time, const SolverConfig& config);

}  // namespace gnatrom

#endif  // GNATROM_SOLVERS_HPP
