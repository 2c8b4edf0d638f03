// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#include "gnatrom/error.hpp"
#include "gnatrom/snapshots.hpp"
#include "gnatrom/solvers.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace gnatrom;
namespace fs = std::filesystem;

namespace {

Trajectory tiny_trajectory() {
  Trajectory t;
  t.mu = {2.0, 0.01};
  t.time = {0.1, 3};
  t.states.resize(2, 4);
  t.states << 1, 2, 4, 7,
              1, 1, 0, -1;
  return t;
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gnatrom_test_snapshots";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("state snapshot variants") {
  const Trajectory t = tiny_trajectory();
  const SnapshotMatrix a = collect_state_snapshots(t, StateSnapshotVariant::from_initial);
  Matrix expect_a(2, 3);
  expect_a << 1, 3, 6,
              0, -1, -2;
  CHECK(a.columns == expect_a);
  CHECK(a.kind == SnapshotKind::state_from_initial);
  CHECK(a.provenance.back() == ProvenanceEntry{t.mu, 3, 0});

  const SnapshotMatrix b = collect_state_snapshots(t, StateSnapshotVariant::per_step_increment);
  Matrix expect_b(2, 3);
  expect_b << 1, 2, 3,
              0, -1, -1;
  CHECK(b.columns == expect_b);

  const SnapshotMatrix c = collect_state_snapshots(t, StateSnapshotVariant::raw);
  CHECK(c.columns == t.states);
  CHECK(c.provenance.size() == 4);
}

TEST_CASE("normalization drops zero columns and scales to unit norm") {
  SnapshotMatrix s;
  s.kind = SnapshotKind::residual_tier1;
  s.columns.resize(2, 3);
  s.columns << 3, 0, 0,
               4, 0, 2;
  s.provenance = {{{1, 1}, 1, 0}, {{1, 1}, 1, 1}, {{1, 1}, 2, 0}};
  const SnapshotMatrix n = normalize_columns(s);
  REQUIRE(n.cols() == 2);
  CHECK(n.columns(0, 0) == doctest::Approx(0.6));
  CHECK(n.columns(1, 0) == doctest::Approx(0.8));
  CHECK(n.columns(1, 1) == doctest::Approx(1.0));
  CHECK(n.provenance[1] == s.provenance[2]);
}

TEST_CASE("concatenate keeps order and rejects mixed kinds") {
  const Trajectory t = tiny_trajectory();
  const SnapshotMatrix a = collect_state_snapshots(t, StateSnapshotVariant::from_initial);
  const SnapshotMatrix both = concatenate({a, a});
  CHECK(both.cols() == 6);
  CHECK(both.columns.rightCols(3) == a.columns);
  const SnapshotMatrix raw = collect_state_snapshots(t, StateSnapshotVariant::raw);
  CHECK_THROWS_AS(concatenate({a, raw}), ConfigError);
}

TEST_CASE("procedure table") {
  CHECK(SnapshotProcedure(0).simulations_per_training_input() == 1);
  CHECK(SnapshotProcedure(1).simulations_per_training_input() == 2);
  CHECK(SnapshotProcedure(2).simulations_per_training_input() == 2);
  CHECK(SnapshotProcedure(3).simulations_per_training_input() == 2);
  CHECK(SnapshotProcedure(0).snapshots_per_iteration(50) == 1);
  CHECK(SnapshotProcedure(1).snapshots_per_iteration(50) == 1);
  CHECK(SnapshotProcedure(2).snapshots_per_iteration(50) == 2);
  CHECK(SnapshotProcedure(3).snapshots_per_iteration(50) == 51);
  CHECK(SnapshotProcedure(0).source_tier() == ModelTier::full);
  CHECK(SnapshotProcedure(2).source_tier() == ModelTier::petrov_galerkin);
  CHECK_THROWS_AS(SnapshotProcedure(4), ConfigError);
}

TEST_CASE("collectors record one column per Newton iteration") {
  const BurgersModel model = gnatrom::testing::toy_model(40, 4.0);
  const TimeDiscretization time{0.05, 10};
  const ParameterPoint mu{2.0, 0.05};

  HyperReductionCollector c0(SnapshotProcedure(0), 40);
  const Trajectory fom = solve_fom(mu, model, time, SolverConfig{}, c0.hook());
  REQUIRE(fom.status.ok);
  Index iterations = 0;
  for (const auto& s : fom.log) iterations += s.iterations;
  CHECK(c0.iterations_recorded() == iterations);
  const auto [r0, j0] = c0.finish();
  CHECK(r0.cols() == iterations);
  CHECK(r0.kind == SnapshotKind::residual_tier1);
  CHECK(j0.columns == r0.columns);

  // Tier II with a 4-vector basis from the same run.
  const SnapshotMatrix states = collect_state_snapshots(fom, StateSnapshotVariant::from_initial);
  Eigen::HouseholderQR<Matrix> qr(states.columns.leftCols(4));
  const Matrix phi = qr.householderQ() * Matrix::Identity(40, 4);

  for (int id : {1, 2, 3}) {
    HyperReductionCollector c(SnapshotProcedure(id), 40);
    const ReducedTrajectory rom =
        solve_tier2_pg(mu, model, phi, model.initial_condition(mu), time, SolverConfig{}, c.hook());
    REQUIRE(rom.status.ok);
    const auto [r, j] = c.finish();
    CHECK(r.cols() == c.iterations_recorded());
    CHECK(r.kind == SnapshotKind::residual_tier2);
    if (id == 1) CHECK(j.columns == r.columns);
    if (id == 2) CHECK(j.cols() == r.cols());
    if (id == 3) CHECK(j.cols() == 4 * r.cols());
  }

  HyperReductionCollector wrong(SnapshotProcedure(2), 40);
  CHECK_THROWS_AS(solve_fom(mu, model, time, SolverConfig{}, wrong.hook()), ConfigError);
}

TEST_CASE("artifact round trip is bitwise") {
  std::mt19937 rng(5);
  SnapshotMatrix s;
  s.kind = SnapshotKind::jacobian_action_tier2;
  s.columns = gnatrom::testing::random_matrix(17, 5, rng);
  for (Index k = 0; k < 5; ++k) s.provenance.push_back({{1.5, 0.25}, k + 1, k % 2});
  const fs::path p = temp_file("snap.gnat");
  persist(s, p);
  const SnapshotMatrix back = load_snapshots(p);
  CHECK(back.kind == s.kind);
  CHECK(std::memcmp(back.columns.data(), s.columns.data(), sizeof(double) * s.columns.size()) == 0);
  CHECK(back.provenance == s.provenance);
  CHECK(fs::file_size(p) > kArtifactHeaderBytes + 17 * 5 * 8);
}

TEST_CASE("trajectory round trip") {
  const BurgersModel model = gnatrom::testing::toy_model(20, 2.0);
  const Trajectory t = solve_fom({2.0, 0.03}, model, {0.05, 5}, SolverConfig{});
  const fs::path p = temp_file("traj.gnat");
  persist(t, p);
  const Trajectory back = load_trajectory(p);
  CHECK(back.mu == t.mu);
  CHECK(back.time.num_steps == 5);
  CHECK(back.states == t.states);
  CHECK(back.log.size() == t.log.size());
  CHECK(back.status.ok);
}

TEST_CASE("corrupt artifacts are rejected") {
  const fs::path p = temp_file("bad.gnat");
  {
    std::ofstream out(p, std::ios::binary);
    out << "NOTGNAT!xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx";
  }
  CHECK_THROWS_AS(load_artifact(p), FormatError);

  SnapshotMatrix s;
  s.kind = SnapshotKind::raw_state;
  s.columns = Matrix::Ones(4, 4);
  for (Index k = 0; k < 4; ++k) s.provenance.push_back({{1, 1}, k, 0});
  const fs::path good = temp_file("trunc.gnat");
  persist(s, good);
  fs::resize_file(good, fs::file_size(good) - 10);
  CHECK_THROWS_AS(load_artifact(good), FormatError);
  CHECK_THROWS_AS(load_artifact(temp_file("missing.gnat")), IoError);
}
