// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#include "gnatrom/solvers.hpp"

#include "gnatrom/error.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

namespace gnatrom {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ns(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count();
}

std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void fail(SolveStatus& status, Index step, const std::string& message) {
  status.ok = false;
  status.failed_step = step;
  status.message = message;
}

// Gauss-Newton (or Newton, for square systems) on the sampled residual rows.
// Minimizes |L_d D(y)| with the linearization L_c C(y) v + L_d D(y), where
// D = Z R and C = Z J Phi come from the masked evaluation. A null left
// operator stands for the identity.
ReducedTrajectory masked_reduced_solve(const ParameterPoint& mu, const BurgersModel& model,
                                       const IndexSet& rows, const IndexSet& state_indices,
                                       const Matrix& masked_basis, const Vector& masked_ic,
                                       const Matrix* left_c, const Matrix* left_d,
                                       const TimeDiscretization& time,
                                       const SolverConfig& config, const char* name,
                                       const IterationHook& hook = {}) {
  config.validate();
  time.validate();
  const MaskedLayout layout = model.masked_layout(rows);
  if (layout.closure != state_indices) {
    throw DimensionError(std::string(name) + ": state indices are not the stencil closure of the sample rows");
  }
  const Index n_closure = static_cast<Index>(layout.closure.size());
  const Index n_rows = static_cast<Index>(layout.rows.size());
  if (masked_basis.rows() != n_closure || masked_ic.size() != n_closure) {
    throw DimensionError(std::string(name) + ": masked basis does not match the state indices");
  }
  const Index n_w = masked_basis.cols();
  if (left_c && left_c->cols() != n_rows) throw DimensionError(std::string(name) + ": left operator size");
  if (left_d && left_d->cols() != n_rows) throw DimensionError(std::string(name) + ": left operator size");

  ReducedTrajectory out;
  out.mu = mu;
  out.time = time;
  out.coords = Matrix::Zero(n_w, time.num_steps + 1);
  out.log.reserve(static_cast<std::size_t>(time.num_steps));

  const Vector src = model.source_rows(mu, layout.rows);
  const std::span<const double> src_span = as_span(src);
  Vector y = Vector::Zero(n_w);
  Vector w = masked_ic;
  Vector prev;
  Vector trial_y;
  Vector trial_w;
  Vector objective;
  Vector direction;
  Vector gradient;
  Matrix model_matrix;
  MaskedEvaluation eval;
  MaskedEvaluation trial_eval;
  Eigen::ColPivHouseholderQR<Matrix> qr;

  auto evaluate = [&](const Vector& state, MaskedEvaluation& e, Vector& obj) {
    model.masked_residual_and_jacobian_basis(layout, state, prev, masked_basis, time.dt, mu,
                                             src_span, e);
    out.counters.max_residual_rows = std::max(out.counters.max_residual_rows, n_rows);
    out.counters.max_state_entries = std::max(out.counters.max_state_entries, n_closure);
    if (left_d) {
      obj.noalias() = *left_d * e.residual;
    } else {
      obj = e.residual;
    }
    return obj.norm();
  };

  for (Index n = 1; n <= time.num_steps; ++n) {
    const auto start = Clock::now();
    prev = w;
    double norm = evaluate(w, eval, objective);
    const double tol = std::max(config.reduced_rel_tol * norm, config.reduced_abs_tol);
    double grad_tol = 0.0;
    Index k = 0;
    for (;;) {
      if (norm <= tol) break;
      if (left_c) {
        model_matrix.noalias() = *left_c * eval.jacobian_basis;
      } else {
        model_matrix = eval.jacobian_basis;
      }
      // The objective of an overdetermined model need not vanish, so a small
      // gradient of 0.5 |obj|^2 also ends the iteration.
      gradient.noalias() = model_matrix.transpose() * objective;
      const double gn = gradient.norm();
      if (k == 0) grad_tol = std::max(config.gn_gradient_tol, config.reduced_gradient_rel_tol * gn);
      if (gn <= grad_tol || k == config.gn_max_iters) break;

      qr.compute(model_matrix);
      if (qr.rank() < n_w) {
        std::ostringstream msg;
        msg << name << ": reduced system is rank deficient (rank " << qr.rank() << " of " << n_w
            << ") at step " << n << ", iteration " << k << ", residual norm " << norm;
        throw SolverError(msg.str());
      }
      direction = qr.solve(-objective);
      if (hook) hook({ModelTier::hyper_reduced, mu, n, k, nullptr, nullptr, &direction});

      double alpha = 1.0;
      if (config.step_policy == StepPolicy::backtracking) {
        const double f0 = 0.5 * norm * norm;
        const double slope = gradient.dot(direction);
        for (Index h = 0; h <= config.max_halvings; ++h) {
          trial_y = y + alpha * direction;
          trial_w = masked_ic + masked_basis * trial_y;
          Vector trial_obj;
          const double tn = evaluate(trial_w, trial_eval, trial_obj);
          if (slope >= 0.0 || 0.5 * tn * tn <= f0 + config.armijo_c * alpha * slope) break;
          if (h == config.max_halvings) break;
          alpha *= config.backtrack_rho;
        }
      }
      y += alpha * direction;
      w.noalias() = masked_ic + masked_basis * y;
      ++k;
      norm = evaluate(w, eval, objective);
      if (!std::isfinite(norm)) break;
      if (alpha * direction.norm() <= config.gn_step_tol * std::max(1.0, y.norm())) break;
    }
    out.counters.total_iterations += k;
    out.log.push_back({n, k, norm, elapsed_ns(start)});
    if (!std::isfinite(norm) || !y.allFinite()) {
      fail(out.status, n, std::string(name) + ": non-finite state at step " + std::to_string(n));
      out.coords.conservativeResize(Eigen::NoChange, n);
      break;
    }
    out.coords.col(n) = y;
  }
  return out;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(newton_abs_tol > 0.0) || !(newton_rel_tol > 0.0) || !(gn_gradient_tol > 0.0) ||
      !(gn_step_tol > 0.0) || !(reduced_rel_tol > 0.0) || !(reduced_abs_tol > 0.0) ||
      !(reduced_gradient_rel_tol > 0.0)) {
    throw ConfigError("solver tolerances must be positive");
  }
  if (max_newton_iters < 1 || gn_max_iters < 1) throw ConfigError("iteration limits must be at least 1");
  if (step_policy == StepPolicy::backtracking &&
      (!(armijo_c > 0.0 && armijo_c < 1.0) || !(backtrack_rho > 0.0 && backtrack_rho < 1.0) ||
       max_halvings < 0)) {
    throw ConfigError("invalid backtracking parameters");
  }
}

Trajectory solve_fom(const ParameterPoint& mu, const BurgersModel& model,
                     const TimeDiscretization& time, const SolverConfig& config,
                     const IterationHook& hook) {
  config.validate();
  time.validate();
  const Index n_dim = model.dimension();
  Trajectory traj;
  traj.mu = mu;
  traj.time = time;
  traj.states.resize(n_dim, time.num_steps + 1);
  traj.states.col(0) = model.initial_condition(mu);
  traj.log.reserve(static_cast<std::size_t>(time.num_steps));

  const Vector src = model.source(mu);
  const std::span<const double> src_span = as_span(src);
  Vector w = traj.states.col(0);
  Vector prev;
  Vector r;
  Vector delta;
  Vector trial;
  Vector trial_r;
  TridiagonalMatrix jac(n_dim);

  for (Index n = 1; n <= time.num_steps; ++n) {
    const auto start = Clock::now();
    prev = w;
    model.residual_and_jacobian(w, prev, time.dt, mu, src_span, r, jac);
    double norm = r.norm();
    const double tol = std::max(config.newton_abs_tol, config.newton_rel_tol * norm);
    Index k = 0;
    while (norm > tol && k < config.max_newton_iters) {
      if (hook) hook({ModelTier::full, mu, n, k, &r, nullptr, nullptr});
      delta = jac.solve(-r);
      if (config.step_policy == StepPolicy::backtracking) {
        const double f0 = 0.5 * norm * norm;
        const double slope = -norm * norm;
        double alpha = 1.0;
        for (Index h = 0; h <= config.max_halvings; ++h) {
          trial = w + alpha * delta;
          model.residual_into(trial, prev, time.dt, mu, src_span, trial_r);
          const double tn = trial_r.norm();
          if (0.5 * tn * tn <= f0 + config.armijo_c * alpha * slope || h == config.max_halvings) break;
          alpha *= config.backtrack_rho;
        }
        w = trial;
      } else {
        w += delta;
      }
      ++k;
      model.residual_and_jacobian(w, prev, time.dt, mu, src_span, r, jac);
      norm = r.norm();
    }
    traj.log.push_back({n, k, norm, elapsed_ns(start)});
    if (!(norm <= tol)) {
      std::ostringstream msg;
      msg << "Newton did not converge at step " << n << " after " << k
          << " iterations: residual norm " << norm << ", tolerance " << tol;
      fail(traj.status, n, msg.str());
      traj.states.conservativeResize(Eigen::NoChange, n);
      break;
    }
    traj.states.col(n) = w;
  }
  return traj;
}

ReducedTrajectory solve_tier2_pg(const ParameterPoint& mu, const BurgersModel& model,
                                 const Matrix& phi_w, const Vector& initial_condition,
                                 const TimeDiscretization& time, const SolverConfig& config,
                                 const IterationHook& hook) {
  config.validate();
  time.validate();
  const Index n_dim = model.dimension();
  if (phi_w.rows() != n_dim || initial_condition.size() != n_dim) {
    throw DimensionError("tier II: basis or initial condition has the wrong length");
  }
  const Index n_w = phi_w.cols();

  ReducedTrajectory out;
  out.mu = mu;
  out.time = time;
  out.coords = Matrix::Zero(n_w, time.num_steps + 1);
  out.log.reserve(static_cast<std::size_t>(time.num_steps));

  const Vector src = model.source(mu);
  const std::span<const double> src_span = as_span(src);
  Vector y = Vector::Zero(n_w);
  Vector w = initial_condition;
  Vector prev;
  Vector r;
  Vector g;
  Vector s;
  Vector trial_y;
  Vector trial_w;
  Vector trial_r;
  Matrix jphi;
  TridiagonalMatrix jac(n_dim);
  Eigen::ColPivHouseholderQR<Matrix> qr;

  for (Index n = 1; n <= time.num_steps; ++n) {
    const auto start = Clock::now();
    prev = w;
    double tol = 0.0;
    bool converged = false;
    Index k = 0;
    double norm = 0.0;
    for (;;) {
      model.residual_and_jacobian(w, prev, time.dt, mu, src_span, r, jac);
      norm = r.norm();
      jphi = jac.apply(phi_w);
      g.noalias() = jphi.transpose() * r;
      const double gn = g.norm();
      if (k == 0) tol = std::max(config.gn_gradient_tol, config.newton_rel_tol * gn);
      if (gn <= tol) {
        converged = true;
        break;
      }
      if (k == config.gn_max_iters) break;

      qr.compute(jphi);
      if (qr.rank() < n_w) {
        std::ostringstream msg;
        msg << "tier II: J Phi is rank deficient (rank " << qr.rank() << " of " << n_w
            << ") at step " << n << ", iteration " << k;
        throw SolverError(msg.str());
      }
      s = qr.solve(-r);
      if (hook) hook({ModelTier::petrov_galerkin, mu, n, k, &r, &jphi, &s});

      double alpha = 1.0;
      if (config.step_policy == StepPolicy::backtracking) {
        const double f0 = 0.5 * norm * norm;
        const double slope = g.dot(s);
        for (Index h = 0; h <= config.max_halvings; ++h) {
          trial_y = y + alpha * s;
          trial_w = initial_condition + phi_w * trial_y;
          model.residual_into(trial_w, prev, time.dt, mu, src_span, trial_r);
          const double tn = trial_r.norm();
          if (slope >= 0.0 || 0.5 * tn * tn <= f0 + config.armijo_c * alpha * slope ||
              h == config.max_halvings) {
            break;
          }
          alpha *= config.backtrack_rho;
        }
      }
      y += alpha * s;
      w.noalias() = initial_condition + phi_w * y;
      ++k;
      if (alpha * s.norm() <= config.gn_step_tol * std::max(1.0, y.norm())) {
        model.residual_into(w, prev, time.dt, mu, src_span, r);
        norm = r.norm();
        converged = true;
        break;
      }
    }
    out.counters.total_iterations += k;
    out.log.push_back({n, k, norm, elapsed_ns(start)});
    if (!converged || !y.allFinite()) {
      std::ostringstream msg;
      msg << "tier II Gauss-Newton did not converge at step " << n << " after " << k
          << " iterations: residual norm " << norm;
      fail(out.status, n, msg.str());
      out.coords.conservativeResize(Eigen::NoChange, n);
      break;
    }
    out.coords.col(n) = y;
  }
  return out;
}

ReducedTrajectory solve_gnat_online(const ParameterPoint& mu, const BurgersModel& model,
                                    const OnlineOperators& operators,
                                    const TimeDiscretization& time, const SolverConfig& config,
                                    const IterationHook& hook) {
  if (operators.a.rows() < operators.reduced_dimension()) {
    throw DimensionError("GNAT: operator A has fewer rows than the reduced dimension");
  }
  if (operators.a.rows() != operators.b.rows() || operators.a.cols() != operators.b.cols()) {
    throw DimensionError("GNAT: operators A and B differ in shape");
  }
  return masked_reduced_solve(mu, model, operators.residual_indices, operators.state_indices,
                              operators.masked_state_basis, operators.masked_initial_condition,
                              &operators.a, &operators.b, time, config, "GNAT", hook);
}

OutputSeries compute_outputs(const ReducedTrajectory& rom, const OnlineOperators& operators) {
  if (operators.output_basis.cols() != rom.coords.rows()) {
    throw DimensionError("compute_outputs: output basis does not match the coordinates");
  }
  if (operators.output_initial_condition.size() != operators.output_basis.rows()) {
    throw DimensionError("compute_outputs: output rows are missing");
  }
  OutputSeries out;
  out.indices = operators.output_indices;
  out.values = operators.output_basis * rom.coords;
  out.values.colwise() += operators.output_initial_condition;
  return out;
}

ReducedTrajectory baseline_collocation_galerkin(const ParameterPoint& mu,
                                                const BurgersModel& model, const Matrix& phi_w,
                                                const Vector& initial_condition,
                                                const SampleSets& sets,
                                                const TimeDiscretization& time,
                                                const SolverConfig& config) {
  sets.validate();
  if (phi_w.rows() != model.dimension() || initial_condition.size() != model.dimension()) {
    throw DimensionError("collocation Galerkin: basis or initial condition has the wrong length");
  }
  const Matrix left = gather_rows(phi_w, sets.residual_indices).transpose();
  return masked_reduced_solve(mu, model, sets.residual_indices, sets.state_indices,
                              gather_rows(phi_w, sets.state_indices),
                              gather_rows(initial_condition, sets.state_indices), &left, &left,
                              time, config, "collocation Galerkin");
}

ReducedTrajectory baseline_collocation_least_squares(const ParameterPoint& mu,
                                                     const BurgersModel& model,
                                                     const Matrix& phi_w,
                                                     const Vector& initial_condition,
                                                     const SampleSets& sets,
                                                     const TimeDiscretization& time,
                                                     const SolverConfig& config) {
  sets.validate();
  if (phi_w.rows() != model.dimension() || initial_condition.size() != model.dimension()) {
    throw DimensionError("collocation least squares: basis or initial condition has the wrong length");
  }
  return masked_reduced_solve(mu, model, sets.residual_indices, sets.state_indices,
                              gather_rows(phi_w, sets.state_indices),
                              gather_rows(initial_condition, sets.state_indices), nullptr,
                              nullptr, time, config, "collocation least squares");
}

ReducedTrajectory baseline_deim_like(const ParameterPoint& mu, const BurgersModel& model,
                                     const Matrix& phi_w, const Matrix& phi_interp,
                                     const Vector& initial_condition, const SampleSets& sets,
                                     const TimeDiscretization& time, const SolverConfig& config) {
  if (phi_interp.cols() != sets.num_samples()) {
    throw ConfigError("DEIM-like baseline needs n_R = n_J = n_i, got " +
                      std::to_string(phi_interp.cols()) + " basis vectors for " +
                      std::to_string(sets.num_samples()) + " samples");
  }
  const OnlineOperators ops =
      compute_online_operators(phi_w, phi_interp, phi_interp, sets, initial_condition);
  return solve_gnat_online(mu, model, ops, time, config);
}

}  // namespace gnatrom
