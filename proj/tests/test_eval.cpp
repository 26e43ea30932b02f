#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lrg/eval.hpp"
#include "oracles.hpp"

using lrg::Matrix;
using lrg::Vector;

TEST_CASE("mix_seed is deterministic and input-sensitive") {
  REQUIRE(lrg::mix_seed(1, 2, 3) == lrg::mix_seed(1, 2, 3));
  REQUIRE(lrg::mix_seed(1, 2, 3) != lrg::mix_seed(1, 3, 2));
  REQUIRE(lrg::mix_seed(1, 2, 3) != lrg::mix_seed(2, 2, 3));
}

TEST_CASE("huge SNR leaves the signal essentially untouched") {
  std::mt19937_64 rng(199);
  const Matrix clean = oracles::random_matrix(20, 5, rng);
  const Matrix noisy = lrg::add_noise(clean, lrg::NoiseSpec{1e9, 7});
  REQUIRE((noisy - clean).cwiseAbs().maxCoeff() <= 1e-10 * clean.cwiseAbs().maxCoeff());
}

TEST_CASE("0 dB noise has roughly the signal's power") {
  std::mt19937_64 rng(211);
  const Matrix clean = oracles::random_matrix(100, 100, rng);
  const Matrix noisy = lrg::add_noise(clean, lrg::NoiseSpec{0.0, 11});
  const double ratio = (noisy - clean).squaredNorm() / clean.squaredNorm();
  REQUIRE(ratio >= 0.9);
  REQUIRE(ratio <= 1.1);
}

TEST_CASE("10 dB noise has about a tenth of the signal power") {
  std::mt19937_64 rng(223);
  const Matrix clean = oracles::random_matrix(100, 100, rng);
  const Matrix noisy = lrg::add_noise(clean, lrg::NoiseSpec{10.0, 13});
  const double ratio = (noisy - clean).squaredNorm() / clean.squaredNorm();
  REQUIRE(ratio >= 0.09);
  REQUIRE(ratio <= 0.11);
}

TEST_CASE("noise is bit-reproducible for a fixed seed") {
  std::mt19937_64 rng(227);
  const Matrix clean = oracles::random_matrix(15, 4, rng);
  const lrg::NoiseSpec spec{10.0, 12345};
  REQUIRE(lrg::add_noise(clean, spec) == lrg::add_noise(clean, spec));
  REQUIRE(lrg::add_noise(clean, spec) != lrg::add_noise(clean, lrg::NoiseSpec{10.0, 12346}));
}

TEST_CASE("zero signal power is rejected") {
  REQUIRE_THROWS_AS(lrg::add_noise(Matrix::Zero(4, 4), lrg::NoiseSpec{10.0, 1}),
                    lrg::validation_error);
}

TEST_CASE("nmse basics") {
  std::mt19937_64 rng(229);
  const Matrix truth = oracles::random_matrix(9, 3, rng);
  REQUIRE(lrg::nmse(truth, truth) == 0.0);
  REQUIRE(lrg::nmse(Matrix::Zero(9, 3), truth) == Catch::Approx(1.0).epsilon(1e-14));
  REQUIRE(lrg::nmse(2.0 * truth, truth) == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("nmse of a shifted prediction is the residual energy ratio") {
  std::mt19937_64 rng(233);
  const Matrix truth = oracles::random_matrix(8, 4, rng);
  const Matrix residual = oracles::random_matrix(8, 4, rng);
  const double expected = residual.squaredNorm() / truth.squaredNorm();
  REQUIRE(lrg::nmse(truth + residual, truth) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("nmse rejects bad input") {
  REQUIRE_THROWS_AS(lrg::nmse(Matrix::Zero(3, 2), Matrix::Zero(2, 2)), lrg::validation_error);
  REQUIRE_THROWS_AS(lrg::nmse(Matrix::Ones(2, 2), Matrix::Zero(2, 2)), lrg::validation_error);
}

TEST_CASE("cross-validation returns a single grid point untouched") {
  std::mt19937_64 rng(239);
  const Matrix design = oracles::random_matrix(8, 2, rng);
  const Matrix targets = oracles::random_matrix(8, 3, rng);
  const Matrix lap = lrg::laplacian(oracles::random_adjacency(3, rng));
  lrg::CvConfig cfg;
  cfg.alpha_grid = {0.37};
  cfg.beta_grid = {1.9};
  const lrg::HyperParams hp = lrg::cross_validate(design, targets, lap, cfg);
  REQUIRE(hp.alpha == 0.37);
  REQUIRE(hp.beta == 1.9);
}

TEST_CASE("noiseless realizable data prefers the tiny ridge weight") {
  std::mt19937_64 rng(241);
  const Matrix design = oracles::random_matrix(8, 2, rng);
  const Matrix truth_coeffs = oracles::random_matrix(2, 2, rng);
  const Matrix targets = design * truth_coeffs;  // exactly realizable
  lrg::CvConfig cfg;
  cfg.alpha_grid = {1e2, 1e-8};
  cfg.beta_grid = {0.0};
  const lrg::HyperParams hp =
      lrg::cross_validate(design, targets, Matrix::Zero(2, 2), cfg);
  REQUIRE(hp.alpha == 1e-8);
}

TEST_CASE("four contiguous folds work at the paper's settings") {
  std::mt19937_64 rng(251);
  const Matrix design = oracles::random_matrix(8, 2, rng);
  const Matrix targets = oracles::random_matrix(8, 3, rng);
  const Matrix lap = lrg::laplacian(oracles::random_adjacency(3, rng));
  lrg::CvConfig cfg;  // folds defaults to 4
  cfg.alpha_grid = {0.1, 1.0};
  cfg.beta_grid = {0.0, 1.0};
  const lrg::HyperParams hp = lrg::cross_validate(design, targets, lap, cfg);
  REQUIRE((hp.alpha == 0.1 || hp.alpha == 1.0));
  REQUIRE((hp.beta == 0.0 || hp.beta == 1.0));

  // determinism
  const lrg::HyperParams again = lrg::cross_validate(design, targets, lap, cfg);
  REQUIRE(hp.alpha == again.alpha);
  REQUIRE(hp.beta == again.beta);
}

TEST_CASE("exact score ties resolve to the smallest hyperparameters") {
  std::mt19937_64 rng(257);
  const Matrix design = oracles::random_matrix(8, 2, rng);
  const Matrix targets = oracles::random_matrix(8, 2, rng);
  // with a zero Laplacian, beta has no effect: both grid betas score equally
  lrg::CvConfig cfg;
  cfg.alpha_grid = {0.5};
  cfg.beta_grid = {0.7, 0.3};
  const lrg::HyperParams hp =
      lrg::cross_validate(design, targets, Matrix::Zero(2, 2), cfg);
  REQUIRE(hp.beta == 0.3);
}

TEST_CASE("cross-validation input validation") {
  std::mt19937_64 rng(263);
  const Matrix design = oracles::random_matrix(6, 2, rng);
  const Matrix targets = oracles::random_matrix(6, 2, rng);
  const Matrix lap = Matrix::Zero(2, 2);
  lrg::CvConfig empty;
  REQUIRE_THROWS_AS(lrg::cross_validate(design, targets, lap, empty), lrg::validation_error);

  lrg::CvConfig cfg;
  cfg.alpha_grid = {1.0};
  cfg.beta_grid = {0.0};
  cfg.folds = 8;
  REQUIRE_THROWS_AS(lrg::cross_validate(design, targets, lap, cfg), lrg::validation_error);
}
