// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#include "gnatrom/bounds.hpp"

#include "gnatrom/error.hpp"
#include "gnatrom/sampling.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

namespace gnatrom {

LipschitzEstimate estimate_lipschitz_a(const ImplicitMap& f, const std::vector<Vector>& probes,
                                       const std::vector<double>& times) {
  if (probes.size() < 2) throw ConfigError("Lipschitz estimate needs at least two probe states");
  if (times.empty()) throw ConfigError("Lipschitz estimate needs at least one time level");
  LipschitzEstimate est;
  std::vector<Vector> images(probes.size());
  for (double t : times) {
    for (std::size_t i = 0; i < probes.size(); ++i) images[i] = f(probes[i], t);
    for (std::size_t i = 0; i < probes.size(); ++i) {
      for (std::size_t j = i + 1; j < probes.size(); ++j) {
        const double num = (probes[i] - probes[j]).norm();
        if (num == 0.0) continue;
        const double den = (images[i] - images[j]).norm();
        if (den == 0.0) throw SolverError("Lipschitz estimate: f maps distinct probes to one point");
        est.value = std::max(est.value, num / den);
        ++est.pairs_used;
      }
    }
  }
  if (est.pairs_used == 0) throw ConfigError("Lipschitz estimate: all probe states coincide");
  return est;
}

LipschitzEstimate estimate_lipschitz_a(const BurgersModel& model, const ParameterPoint& mu,
                                       const std::vector<Vector>& probes,
                                       const TimeDiscretization& time) {
  time.validate();
  const Vector zero = Vector::Zero(model.dimension());
  ImplicitMap f = [&](const Vector& x, double t) {
    return model.residual(x, zero, t, time.dt, mu);
  };
  return estimate_lipschitz_a(f, probes, {time.time(1)});
}

double certified_lipschitz_a(const BurgersModel& model, const ParameterPoint& mu, double lower,
                             double upper, double dt) {
  const Index n = model.dimension();
  if (n > 20) throw ConfigError("certified Lipschitz bound enumerates 2^N vertices; N must be <= 20");
  if (!(lower > 0.0) || !(upper >= lower) || !(mu.a > 0.0)) {
    throw ConfigError("certified Lipschitz bound needs 0 < lower <= upper and a positive inflow");
  }
  const Vector zero = Vector::Zero(n);
  double lambda_min = std::numeric_limits<double>::infinity();
  Vector vertex(n);
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (Index i = 0; i < n; ++i) vertex(i) = (mask >> i) & 1U ? upper : lower;
    const Matrix j = model.residual_jacobian(vertex, zero, dt, dt, mu).to_dense();
    eig.compute(0.5 * (j + j.transpose()), Eigen::EigenvaluesOnly);
    lambda_min = std::min(lambda_min, eig.eigenvalues()(0));
  }
  if (!(lambda_min > 0.0)) {
    throw SolverError("certified Lipschitz bound: symmetric Jacobian part is not positive definite on the box");
  }
  return 1.0 / lambda_min;
}

void accumulate_bounds(BoundTrace& trace) {
  const Index m = trace.b.size();
  trace.cum_b.resize(m);
  trace.cum_c.resize(m);
  trace.cum_d.resize(m);
  const double a = trace.lipschitz_a;
  double sb = 0.0;
  double sc = 0.0;
  double sd = 0.0;
  for (Index j = 0; j < m; ++j) {
    // S_n = a (x_(n-1) + S_(n-1))
    sb = a * (trace.b(j) + sb);
    sc = a * (trace.c(j) + sc);
    sd = a * (trace.d(j) + sd);
    trace.cum_b(j) = sb;
    trace.cum_c(j) = sc;
    trace.cum_d(j) = sd;
  }
}

double gappy_bound_factor(const Matrix& phi_r, const IndexSet& residual_indices) {
  check_index_set(residual_indices, phi_r.rows(), "residual index");
  const Matrix sampled = gather_rows(phi_r, residual_indices);
  if (sampled.rows() < sampled.cols()) throw SolverError("gappy bound: fewer samples than basis vectors");
  Eigen::JacobiSVD<Matrix> svd(sampled);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0) throw DimensionError("gappy bound: empty basis");
  const double smin = sv(sv.size() - 1);
  if (!(smin > 1e-12 * sv(0))) throw SolverError("gappy bound: Z Phi_R is rank deficient");
  return 1.0 / smin;
}

BoundTrace bound_terms(const ReducedTrajectory& rom, const BurgersModel& model,
                       const Matrix& phi_w, const Vector& initial_condition,
                       const Matrix& phi_r, const IndexSet& residual_indices, double eps_newton,
                       double lipschitz_a, const Vector& residual_singular_values) {
  const Index n_dim = model.dimension();
  if (phi_w.rows() != n_dim || phi_r.rows() != n_dim || initial_condition.size() != n_dim ||
      phi_w.cols() != rom.coords.rows()) {
    throw DimensionError("bound_terms: basis, initial condition or coordinates do not match");
  }
  if (!(eps_newton >= 0.0) || !(lipschitz_a > 0.0)) {
    throw ConfigError("bound_terms: need eps_newton >= 0 and a > 0");
  }
  const GappyReconstruction gappy = make_gappy_reconstruction(phi_r, residual_indices);

  BoundTrace trace;
  trace.lipschitz_a = lipschitz_a;
  trace.eps_newton = eps_newton;
  trace.r_inv_norm = gappy_bound_factor(phi_r, residual_indices);
  const Index steps = rom.coords.cols() - 1;
  trace.b.resize(steps);
  trace.c.resize(steps);
  trace.d.resize(steps);

  const Vector src = model.source(rom.mu);
  const std::span<const double> src_span(src.data(), static_cast<std::size_t>(src.size()));
  Vector prev = initial_condition + phi_w * rom.coords.col(0);
  Vector next;
  Vector r;
  for (Index j = 0; j < steps; ++j) {
    next = initial_condition + phi_w * rom.coords.col(j + 1);
    model.residual_into(next, prev, rom.time.dt, rom.mu, src_span, r);
    const Vector coeffs = gappy.coefficients(gather_rows(r, residual_indices));
    const double p_norm = coeffs.norm();
    const double oblique_rest = (r - phi_r * coeffs).norm();
    const double orth_rest = (r - phi_r * (phi_r.transpose() * r)).norm();
    trace.b(j) = eps_newton + r.norm();
    trace.c(j) = eps_newton + p_norm + oblique_rest;
    trace.d(j) = eps_newton + p_norm + trace.r_inv_norm * orth_rest;
    prev.swap(next);
  }
  if (residual_singular_values.size() > 0) {
    const Index n_r = phi_r.cols();
    const Index tail = std::max<Index>(0, residual_singular_values.size() - n_r);
    trace.neglected_singular_values = residual_singular_values.tail(tail).norm();
  }
  accumulate_bounds(trace);
  return trace;
}

double projection_error_estimate(const Matrix& phi_r_extended, Index n_r,
                                 const IndexSet& residual_indices, const Vector& residual_sample) {
  if (n_r < 1 || n_r >= phi_r_extended.cols()) {
    throw ConfigError("projection error estimate needs 1 <= n_R < n_R'");
  }
  check_index_set(residual_indices, phi_r_extended.rows(), "residual index");
  if (residual_sample.size() != static_cast<Index>(residual_indices.size())) {
    throw DimensionError("projection error estimate: sample length does not match the sample rows");
  }
  const Matrix sampled = gather_rows(phi_r_extended, residual_indices);
  const Vector extended = pseudo_inverse(sampled) * residual_sample;
  Vector nominal = Vector::Zero(phi_r_extended.cols());
  nominal.head(n_r) = pseudo_inverse(Matrix(sampled.leftCols(n_r))) * residual_sample;
  return (extended - nominal).norm();
}

std::array<double, 3> global_bounds(const BoundTrace& trace, Index n) {
  if (n < 1 || n > trace.cum_b.size() || trace.cum_c.size() != trace.cum_b.size() ||
      trace.cum_d.size() != trace.cum_b.size()) {
    throw DimensionError("global_bounds: trace does not reach step " + std::to_string(n));
  }
  return {trace.cum_b(n - 1), trace.cum_c(n - 1), trace.cum_d(n - 1)};
}

void write_bounds_csv(const std::filesystem::path& path, const BoundTrace& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "n,b,c,d,cum_b,cum_c,cum_d\n";
  for (Index j = 0; j < trace.steps(); ++j) {
    out << j + 1 << ',' << trace.b(j) << ',' << trace.c(j) << ',' << trace.d(j) << ','
        << trace.cum_b(j) << ',' << trace.cum_c(j) << ',' << trace.cum_d(j) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace gnatrom
