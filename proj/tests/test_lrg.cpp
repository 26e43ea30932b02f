#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <Eigen/Eigenvalues>

#include "lrg/lrg.hpp"
#include "oracles.hpp"

using lrg::LrgProblem;
using lrg::Matrix;
using lrg::Vector;

namespace {

LrgProblem random_problem(int n, int k, int m, double alpha, double beta, std::mt19937_64& rng) {
  return LrgProblem{oracles::random_matrix(n, k, rng), oracles::random_matrix(n, m, rng),
                    lrg::laplacian(oracles::random_adjacency(m, rng)), alpha, beta};
}

}  // namespace

TEST_CASE("normal matrix with beta = 0 and one node is gram + alpha I") {
  std::mt19937_64 rng(53);
  const Matrix design = oracles::random_matrix(6, 3, rng);
  const Matrix f = lrg::normal_matrix(Matrix::Zero(1, 1), design, 0.7, 0.0);
  const Matrix expected =
      design.transpose() * design + 0.7 * Matrix::Identity(3, 3);
  REQUIRE(f.isApprox(expected, 1e-14));
}

TEST_CASE("normal matrix with a zero Laplacian is block diagonal") {
  std::mt19937_64 rng(59);
  const Matrix design = oracles::random_matrix(5, 2, rng);
  const Matrix f = lrg::normal_matrix(Matrix::Zero(3, 3), design, 0.2, 4.0);
  const Matrix gram = design.transpose() * design;
  const Matrix expected = oracles::kron(Matrix::Identity(3, 3), gram) +
                          0.2 * Matrix::Identity(6, 6);
  REQUIRE(f.isApprox(expected, 1e-14));
}

TEST_CASE("normal matrix matches an independent Kronecker assembly") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 4);
    const int k = 1 + static_cast<int>(rng() % 4);
    const int n = 2 + static_cast<int>(rng() % 6);
    const Matrix lap = lrg::laplacian(oracles::random_adjacency(m, rng));
    const Matrix design = oracles::random_matrix(n, k, rng);
    const Matrix ours = lrg::normal_matrix(lap, design, 0.3, 1.7);
    const Matrix theirs = oracles::normal_matrix(lap, design, 0.3, 1.7);
    REQUIRE(ours.isApprox(theirs, 1e-13));
  }
}

TEST_CASE("normal matrix is positive definite with smallest eigenvalue >= alpha") {
  std::mt19937_64 rng(67);
  const double alpha = 0.4;
  const LrgProblem p = random_problem(6, 3, 4, alpha, 1.2, rng);
  const Matrix f = lrg::normal_matrix(p.laplacian, p.design, p.alpha, p.beta);
  Eigen::SelfAdjointEigenSolver<Matrix> es(f);
  REQUIRE(es.eigenvalues().minCoeff() >= alpha - 1e-10);
}

TEST_CASE("beta = 0 reduces to per-node ridge regression") {
  std::mt19937_64 rng(71);
  const LrgProblem p = random_problem(8, 3, 4, 0.5, 0.0, rng);
  const Matrix coeffs = lrg::solve_batch(p);
  const Matrix gram = p.design.transpose() * p.design;
  const Matrix ridge = gram + 0.5 * Matrix::Identity(3, 3);
  for (int node = 0; node < 4; ++node) {
    const Vector w = ridge.llt().solve(p.design.transpose() * p.targets.col(node));
    REQUIRE((coeffs.col(node) - w).cwiseAbs().maxCoeff() <=
            1e-10 * (1.0 + w.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("unregularized square system interpolates") {
  std::mt19937_64 rng(73);
  Matrix design = oracles::random_matrix(3, 3, rng);
  design.diagonal().array() += 3.0;  // keep it comfortably invertible
  const Matrix targets = oracles::random_matrix(3, 1, rng);
  const LrgProblem p{design, targets, Matrix::Zero(1, 1), 0.0, 0.0};
  const Matrix coeffs = lrg::solve_batch(p);
  const Vector expected = design.inverse() * targets;
  REQUIRE((coeffs.col(0) - expected).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("small random instance matches the brute-force oracle") {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 25; ++trial) {
    const LrgProblem p = random_problem(3, 2, 2, 0.3, 0.8, rng);
    const Matrix ours = lrg::solve_batch(p);
    const Matrix brute =
        oracles::brute_force_solve(p.design, p.targets, p.laplacian, p.alpha, p.beta);
    REQUIRE((ours - brute).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + brute.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("singular normal matrix raises a numerical error") {
  std::mt19937_64 rng(83);
  // alpha = 0 with K > N leaves the gram matrix rank deficient.
  const Matrix design = oracles::random_matrix(1, 3, rng);
  const Matrix targets = oracles::random_matrix(1, 2, rng);
  const LrgProblem p{design, targets, lrg::laplacian(oracles::random_adjacency(2, rng)), 0.0, 0.5};
  REQUIRE_THROWS_AS(lrg::solve_batch(p), lrg::numerical_error);
}

TEST_CASE("predict") {
  std::mt19937_64 rng(89);
  const lrg::FeatureMap identity = lrg::FeatureMap::identity(3);
  SECTION("zero coefficients give the zero signal") {
    const Vector y = lrg::predict(Matrix::Zero(3, 4), Vector::Ones(3), identity);
    REQUIRE(y.isZero(0.0));
    REQUIRE(y.size() == 4);
  }
  SECTION("identity coefficients with the identity map reproduce the input") {
    Vector x(3);
    x << -1, 0.5, 2;
    REQUIRE(lrg::predict(Matrix::Identity(3, 3), x, identity) == x);
  }
  SECTION("random instance equals per-node dot products") {
    const Matrix coeffs = oracles::random_matrix(3, 5, rng);
    const Vector x = oracles::random_matrix(3, 1, rng);
    const Vector y = lrg::predict(coeffs, x, identity);
    for (int node = 0; node < 5; ++node)
      REQUIRE(y(node) == Catch::Approx(coeffs.col(node).dot(x)).epsilon(1e-13));
  }
  SECTION("mismatched coefficient rows are rejected") {
    REQUIRE_THROWS_AS(lrg::predict(Matrix::Zero(2, 4), Vector::Ones(3), identity),
                      lrg::validation_error);
  }
}

TEST_CASE("cost of the zero matrix is the target energy") {
  std::mt19937_64 rng(97);
  const LrgProblem p = random_problem(6, 2, 3, 0.4, 1.1, rng);
  REQUIRE(lrg::cost(Matrix::Zero(2, 3), p) ==
          Catch::Approx(p.targets.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("an interpolating solution has zero unregularized cost") {
  std::mt19937_64 rng(101);
  Matrix design = oracles::random_matrix(3, 3, rng);
  design.diagonal().array() += 3.0;
  const Matrix targets = oracles::random_matrix(3, 2, rng);
  const Matrix coeffs = design.inverse() * targets;
  const LrgProblem p{design, targets, Matrix::Zero(2, 2), 0.0, 0.0};
  REQUIRE(lrg::cost(coeffs, p) == Catch::Approx(0.0).margin(1e-18));
}

TEST_CASE("sum form and trace form of the cost agree") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 6);
    const int k = 1 + static_cast<int>(rng() % 4);
    const int m = 1 + static_cast<int>(rng() % 4);
    const LrgProblem p = random_problem(n, k, m, 0.7, 1.3, rng);
    const Matrix coeffs = oracles::random_matrix(k, m, rng);
    const double sum_form = lrg::cost(coeffs, p);
    const double trace_form = lrg::cost_trace(coeffs, p);
    REQUIRE(std::abs(sum_form - trace_form) <= 1e-10 * (1.0 + std::abs(sum_form)));
  }
}

TEST_CASE("the batch solution is optimal against random perturbations") {
  std::mt19937_64 rng(107);
  const LrgProblem p = random_problem(7, 3, 3, 0.3, 0.9, rng);
  const Matrix best = lrg::solve_batch(p);
  const double best_cost = lrg::cost(best, p);
  for (int trial = 0; trial < 50; ++trial) {
    const double eps = (trial % 2 == 0) ? 1e-2 : 1e-1;
    const Matrix perturbed = best + eps * oracles::random_matrix(3, 3, rng);
    REQUIRE(best_cost <= lrg::cost(perturbed, p));
  }
}

TEST_CASE("the cost gradient vanishes at the batch solution") {
  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 5; ++trial) {
    const LrgProblem p = random_problem(6, 2, 3, 0.5, 1.0, rng);
    const Matrix best = lrg::solve_batch(p);
    const double value = lrg::cost(best, p);
    const Matrix grad = oracles::numerical_gradient(
        [&](const Matrix& w) { return lrg::cost(w, p); }, best, 1e-6);
    REQUIRE(grad.cwiseAbs().maxCoeff() <= 1e-4 * (1.0 + std::abs(value)));
  }
}

TEST_CASE("problem validation") {
  std::mt19937_64 rng(113);
  LrgProblem p = random_problem(5, 2, 3, 0.5, 0.5, rng);
  SECTION("row mismatch") {
    p.targets = oracles::random_matrix(4, 3, rng);
    REQUIRE_THROWS_AS(lrg::solve_batch(p), lrg::validation_error);
  }
  SECTION("Laplacian size mismatch") {
    p.laplacian = Matrix::Zero(2, 2);
    REQUIRE_THROWS_AS(lrg::solve_batch(p), lrg::validation_error);
  }
  SECTION("negative hyperparameters") {
    p.alpha = -0.1;
    REQUIRE_THROWS_AS(lrg::solve_batch(p), lrg::validation_error);
  }
}
