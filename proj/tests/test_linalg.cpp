#include <catch2/catch_amalgamated.hpp>

#include "driftio/linalg.hpp"
#include "test_util.hpp"

using namespace driftio;
using testutil::random_matrix;
using testutil::random_vector;

TEST_CASE("projector closed forms", "[linalg][projector]") {
  {
    Matrix B(1, 2);
    B << 1, 1;
    const Projector pr = build_projector(B);
    Matrix expect(2, 2);
    expect << 0.5, -0.5, -0.5, 0.5;
    REQUIRE((pr.P - expect).lpNorm<Eigen::Infinity>() <= 1e-12);
    REQUIRE(pr.b_rank == 1);
  }
  {
    const Projector pr = build_projector(Matrix::Identity(3, 3));
    REQUIRE(pr.P.lpNorm<Eigen::Infinity>() <= 1e-12);
    REQUIRE(pr.b_rank == 3);
  }
  {
    const Projector pr = build_projector(Matrix::Zero(2, 4));
    REQUIRE((pr.P - Matrix::Identity(4, 4)).lpNorm<Eigen::Infinity>() == 0.0);
    REQUIRE(pr.b_rank == 0);
  }
}

TEST_CASE("projector algebra on random matrices", "[linalg][projector]") {
  testutil::reseed(21);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 7;
    const int k = 1 + trial % n;
    Matrix B = random_matrix(k, n, -2.0, 2.0);
    if (trial % 5 == 0 && k >= 2) B.row(1) = 3.0 * B.row(0);  // rank-deficient
    if (trial % 7 == 0) B.row(0).setZero();
    const Projector pr = build_projector(B);
    REQUIRE(projector_symmetry_defect(pr) <= 1e-10);
    REQUIRE(projector_idempotence_defect(pr) <= 1e-10);
    REQUIRE(projector_annihilation_defect(pr, B) <= 1e-10);
  }
}

TEST_CASE("nnls solves small problems exactly", "[linalg][nnls]") {
  SECTION("unconstrained-positive solution equals least squares") {
    Matrix A(3, 2);
    A << 1, 0, 0, 1, 1, 1;
    Vector b(3);
    b << 1, 2, 3;
    const Vector ls = (A.transpose() * A).ldlt().solve(A.transpose() * b);
    REQUIRE((ls.array() > 0).all());
    const NnlsResult r = nnls(A, b);
    REQUIRE((r.x - ls).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  SECTION("nonnegativity binds") {
    Matrix A(2, 1);
    A << 1, 1;
    Vector b(2);
    b << -1, -1;  // best x is negative, so the constrained optimum is 0
    const NnlsResult r = nnls(A, b);
    REQUIRE(r.x(0) == 0.0);
    REQUIRE_THAT(r.residual_sq, Catch::Matchers::WithinAbs(2.0, 1e-12));
  }
  SECTION("random instances beat every grid candidate") {
    testutil::reseed(22);
    for (int trial = 0; trial < 40; ++trial) {
      const int m = 2 + trial % 4;
      const int k = 1 + trial % 2;
      const Matrix A = random_matrix(m, k, -2.0, 2.0);
      const Vector b = random_vector(m, -2.0, 2.0);
      const NnlsResult r = nnls(A, b);
      REQUIRE((r.x.array() >= 0.0).all());
      auto f = [&](const Vector& lam) { return (A * lam - b).squaredNorm(); };
      const double grid = testutil::quadratic_box_grid_min(
          f, Vector::Zero(k), Vector::Constant(k, 10.0), 1e-3);
      REQUIRE(r.residual_sq <= grid + 1e-4);
    }
  }
}

TEST_CASE("polytope projection", "[linalg][projection]") {
  SECTION("feasible point is a fixed point") {
    Matrix B(1, 2);
    B << 1, 1;
    Vector q(1);
    q << 4;
    Vector v(2);
    v << 1, 2;
    const Vector x = project_feasible(B, q, std::nullopt, v);
    REQUIRE((x - v).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  SECTION("hand-computed simplex projection") {
    Matrix B(1, 2);
    B << 1, 1;
    Vector q(1);
    q << 1;
    Vector v(2);
    v << 1, 1;  // projection onto {x>=0, x1+x2<=1} is (0.5, 0.5)
    const Vector x = project_feasible(B, q, std::nullopt, v);
    REQUIRE_THAT(x(0), Catch::Matchers::WithinAbs(0.5, 1e-9));
    REQUIRE_THAT(x(1), Catch::Matchers::WithinAbs(0.5, 1e-9));
  }
  SECTION("variational characterization on random instances") {
    testutil::reseed(23);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 2 + trial % 3;
      const int k = 1 + trial % 2;
      const Matrix B = random_matrix(k, n, 0.1, 1.5);
      const Vector q = random_vector(k, 0.5, 3.0);
      const Vector xu = random_vector(n, 0.5, 4.0);
      const Vector v = random_vector(n, -2.0, 5.0);
      const Vector px = project_feasible(B, q, xu, v);

      REQUIRE(feasibility_violation(B, q, xu, px) <= 1e-8);
      // <v - Px, y - Px> <= 0 for all feasible y.
      int found = 0;
      while (found < 25) {
        const Vector y = random_vector(n, 0.0, xu.maxCoeff());
        if (feasibility_violation(B, q, xu, y) > 0.0) continue;
        ++found;
        REQUIRE((v - px).dot(y - px) <= 1e-7);
      }
    }
  }
  SECTION("zero rows of B impose nothing") {
    Matrix B = Matrix::Zero(1, 2);
    Vector q(1);
    q << 0;
    Vector v(2);
    v << 3, 4;
    const Vector x = project_feasible(B, q, std::nullopt, v);
    REQUIRE((x - v).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}
