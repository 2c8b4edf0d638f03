// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

#include "gnatrom/error.hpp"
#include "gnatrom/sampling.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace gnatrom;
using gnatrom::testing::random_matrix;
using gnatrom::testing::random_orthonormal;

TEST_CASE("greedy picks the only nonzero entry") {
  Matrix e3 = Matrix::Zero(8, 1);
  e3(3, 0) = 1.0;
  const GreedyResult r = greedy_select(e3, e3, {1, 1, {}, 1});
  CHECK(r.nodes == IndexSet{3});
}

TEST_CASE("greedy matches the step-by-step oracle") {
  std::mt19937 rng(2024);
  int compared = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 12;
    std::uniform_int_distribution<Index> ns_dist(1, 6);
    const Index n_s = ns_dist(rng);
    const Index cols = 6;
    const Matrix phi_r = random_orthonormal(n, cols, rng);
    const Matrix phi_j = random_orthonormal(n, cols, rng);
    std::uniform_int_distribution<Index> nc_dist(1, std::min(cols, n_s));
    const Index n_c = nc_dist(rng);
    IndexSet seeds;
    if (trial % 3 == 0) seeds = {0};
    if (static_cast<Index>(seeds.size()) > n_s) seeds.clear();
    const GreedyResult got = greedy_select(phi_r, phi_j, {n_s, n_c, seeds, 1});
    const auto expect = gnatrom::testing::greedy_oracle(phi_r, phi_j, n_s, n_c, seeds);
    CHECK(got.sequence == expect);
    CHECK(static_cast<Index>(got.nodes.size()) == n_s);
    ++compared;
  }
  CHECK(compared >= 20);

  // n_s = 3, n_c = 3 on N = 12, as a fixed case.
  const Matrix phi_r = random_orthonormal(12, 4, rng);
  const Matrix phi_j = random_orthonormal(12, 4, rng);
  CHECK(greedy_select(phi_r, phi_j, {3, 3, {}, 1}).sequence ==
        gnatrom::testing::greedy_oracle(phi_r, phi_j, 3, 3, {}));
}

TEST_CASE("greedy iteration arithmetic") {
  std::mt19937 rng(5);
  const Matrix phi = random_orthonormal(40, 10, rng);
  // n_a = 9, n_c = 4: four iterations, one vector each, 2 + [p <= 1] nodes.
  const GreedyResult r = greedy_select(phi, phi, {10, 4, {0}, 1});
  REQUIRE(r.trace.size() == 4);
  CHECK(r.max_rhs == 1);
  CHECK(r.trace[0].nodes_to_add == 3);
  CHECK(r.trace[1].nodes_to_add == 2);
  CHECK(r.trace[3].basis_vectors_before == 3);

  // n_a = 2, n_c = 3: two iterations with 2 and 1 vectors, n_rhsmax = 2.
  const GreedyResult w = greedy_select(phi, phi, {3, 3, {0}, 1});
  CHECK(w.max_rhs == 2);
  REQUIRE(w.trace.size() == 2);
  CHECK(w.trace[0].working_vectors == 2);
  CHECK(w.trace[1].working_vectors == 1);
}

TEST_CASE("greedy keeps seeds and is deterministic") {
  std::mt19937 rng(9);
  const Matrix phi_r = random_orthonormal(50, 8, rng);
  const Matrix phi_j = random_orthonormal(50, 8, rng);
  const GreedyConfig cfg{12, 8, {0, 49}, 1};
  const GreedyResult a = greedy_select(phi_r, phi_j, cfg);
  const GreedyResult b = greedy_select(phi_r, phi_j, cfg);
  CHECK(a.sequence == b.sequence);
  CHECK(a.sequence[0] == 0);
  CHECK(a.sequence[1] == 49);
  CHECK(std::binary_search(a.nodes.begin(), a.nodes.end(), 49));
  CHECK(greedy_select(phi_r, phi_j, {2, 1, {0, 49}, 1}).nodes == IndexSet{0, 49});
}

TEST_CASE("greedy with two unknowns per node scores whole nodes") {
  std::mt19937 rng(1);
  const Matrix phi = random_orthonormal(20, 3, rng);
  const GreedyResult r = greedy_select(phi, phi, {3, 3, {}, 2});
  CHECK(r.nodes.size() == 3);
  for (Index node : r.nodes) CHECK(node < 10);
}

TEST_CASE("greedy rejects infeasible configurations") {
  std::mt19937 rng(6);
  const Matrix phi = random_orthonormal(10, 4, rng);
  CHECK_THROWS_AS(greedy_select(phi, phi, {11, 1, {}, 1}), ConfigError);
  CHECK_THROWS_AS(greedy_select(phi, phi, {1, 1, {0, 1}, 1}), ConfigError);
  CHECK_THROWS_AS(greedy_select(phi, phi, {5, 0, {}, 1}), ConfigError);
  CHECK_THROWS_AS(greedy_select(phi, phi, {3, 4, {}, 1}), ConfigError);
  CHECK_THROWS_AS(greedy_select(phi, Matrix(phi.topRows(8)), {3, 1, {}, 1}), DimensionError);
}

TEST_CASE("greedy warns on a rank-deficient restricted basis") {
  // Duplicate columns make the restricted basis singular in the last iteration.
  Matrix phi = Matrix::Zero(6, 3);
  phi(0, 0) = 1.0;
  phi(0, 1) = 1.0;
  phi(2, 2) = 1.0;
  const GreedyResult r = greedy_select(phi, phi, {4, 3, {5}, 1});
  CHECK(r.nodes.size() == 4);
  CHECK_FALSE(r.warnings.empty());
}

TEST_CASE("sample matrix gather and scatter") {
  const SampleMatrix all({0, 1, 2, 3}, 4);
  Vector v(4);
  v << 4, 3, 2, 1;
  CHECK(all.gather(v) == v);
  const SampleMatrix two({2}, 4);
  CHECK(two.gather(Vector(Vector::Unit(4, 2))) == Vector::Ones(1));
  std::mt19937 rng(3);
  const SampleMatrix some({1, 5, 7}, 9);
  const Vector u = gnatrom::testing::random_vector(3, rng);
  CHECK(some.gather(some.scatter(u)) == u);
  CHECK_THROWS_AS(some.gather(v), DimensionError);
  CHECK_THROWS_AS(SampleMatrix({3, 1}, 9), DimensionError);
}

TEST_CASE("sample sets from a node set") {
  const BurgersModel model = gnatrom::testing::toy_model(30, 3.0);
  const SampleSets s = build_sample_sets(model, {0, 7, 29}, {{}, true});
  CHECK(s.residual_indices == IndexSet{0, 7, 29});
  CHECK(s.state_indices == IndexSet{0, 1, 6, 7, 8, 28, 29});
  CHECK(s.output_indices.size() == 30);
  CHECK_THROWS_AS(build_sample_sets(model, {30}, {{}, true}), DimensionError);
}

TEST_CASE("output index set") {
  CHECK(output_index_set({{10, 20}, false}, 40) == IndexSet{10, 20});
  CHECK(output_index_set({{5, 5}, false}, 40) == IndexSet{5});
  CHECK(output_index_set({{}, true}, 4) == IndexSet{0, 1, 2, 3});
  CHECK(output_index_set({{1}, false}, 8, 2) == IndexSet{2, 3});
  CHECK_THROWS(output_index_set({{40}, false}, 40));
}

namespace {

SampleSets sets_for(const IndexSet& rows, Index n) {
  SampleSets s;
  s.nodes = rows;
  s.residual_indices = rows;
  s.state_indices = rows;
  for (Index i = 0; i < n; ++i) s.output_indices.push_back(i);
  return s;
}

}  // namespace

TEST_CASE("online operators") {
  std::mt19937 rng(12);
  SUBCASE("square sampled basis gives the inverse") {
    const Matrix phi = random_orthonormal(20, 5, rng);
    const IndexSet rows{1, 4, 9, 13, 17};
    const OnlineOperators ops =
        compute_online_operators(phi, phi, phi, sets_for(rows, 20), Vector::Ones(20));
    const Matrix inv = gather_rows(phi, rows).inverse();
    CHECK((ops.a - inv).norm() < 1e-10);
    CHECK((ops.b - inv).norm() < 1e-10);
  }
  SUBCASE("all rows matches a dense oracle") {
    const Matrix phi_w = random_orthonormal(15, 3, rng);
    const Matrix phi_r = random_orthonormal(15, 6, rng);
    const Matrix phi_j = random_orthonormal(15, 4, rng);
    IndexSet rows(15);
    for (Index i = 0; i < 15; ++i) rows[static_cast<std::size_t>(i)] = i;
    const OnlineOperators ops =
        compute_online_operators(phi_w, phi_r, phi_j, sets_for(rows, 15), Vector::Zero(15));
    CHECK((ops.a - gnatrom::testing::svd_pinv(phi_j)).norm() < 1e-10);
    CHECK((ops.b - phi_j.transpose() * phi_r * gnatrom::testing::svd_pinv(phi_r)).norm() < 1e-10);
    CHECK((ops.masked_state_basis - phi_w).norm() == 0.0);
  }
  SUBCASE("left inverse on random bases") {
    const Matrix phi = random_matrix(30, 6, rng);
    const IndexSet rows = gnatrom::testing::random_subset(30, 12, rng);
    const OnlineOperators ops =
        compute_online_operators(phi.leftCols(4), phi, phi, sets_for(rows, 30), Vector::Zero(30));
    CHECK((ops.a * gather_rows(phi, rows) - Matrix::Identity(6, 6)).norm() < 1e-10);
    CHECK(ops.a.rows() == 6);
    CHECK(ops.a.cols() == 12);
  }
  SUBCASE("errors") {
    const Matrix phi = random_orthonormal(20, 6, rng);
    CHECK_THROWS_AS(compute_online_operators(phi, phi, phi, sets_for({0, 1, 2}, 20), Vector::Zero(20)),
                    ConfigError);
    CHECK_THROWS_AS(compute_online_operators(phi, phi, Matrix(phi.leftCols(3)),
                                             sets_for({0, 1, 2, 3, 4, 5}, 20), Vector::Zero(20)),
                    ConfigError);
    Matrix singular = phi;
    singular.row(0).setZero();
    singular.row(1).setZero();
    CHECK_THROWS_AS(compute_online_operators(singular.leftCols(2), singular, singular,
                                             sets_for({0, 1, 2, 3, 4, 5}, 20), Vector::Zero(20)),
                    SolverError);
  }
}

TEST_CASE("gappy error does not grow as residual basis columns are added") {
  std::mt19937 rng(77);
  const Index n = 60;
  const Matrix phi = random_orthonormal(n, 12, rng);
  const IndexSet rows = gnatrom::testing::random_subset(n, 14, rng);
  for (int t = 0; t < 100; ++t) {
    const Vector r = random_matrix(n, 1, rng).col(0);
    const Vector zr = gather_rows(r, rows);
    double previous = std::numeric_limits<double>::infinity();
    for (Index k = 1; k <= 12; ++k) {
      const GappyReconstruction g = make_gappy_reconstruction(phi.leftCols(k), rows);
      const double err = (zr - gather_rows(g.project(r), rows)).norm();
      CHECK(err <= previous * (1.0 + 1e-12) + 1e-14);
      previous = err;
    }
  }
}

TEST_CASE("pseudo inverse reports rank") {
  Matrix m(3, 2);
  m << 1, 2, 2, 4, 3, 6;
  Index rank = 0;
  const Matrix p = pseudo_inverse(m, 1e-12, &rank);
  CHECK(rank == 1);
  CHECK((p - gnatrom::testing::svd_pinv(m)).norm() < 1e-12);
}
