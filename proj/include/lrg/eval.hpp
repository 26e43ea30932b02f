#pragma once

// Noise injection at a target SNR, the normalized mean square error, and
// grid-search cross-validation of (alpha, beta).

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrg/errors.hpp"
#include "lrg/lrg.hpp"

namespace lrg {

/// Deterministic seed mixing (splitmix64 finalizer) for independent
/// per-trial / per-sweep RNG streams derived from one base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (a + 1) + 0xBF58476D1CE4E5B9ULL * (b + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

struct NoiseSpec {
  double snr_db = 10.0;
  std::uint64_t seed = 0;
};

/// Adds i.i.d. Gaussian noise so that the empirical signal power over all
/// entries exceeds the noise variance by snr_db decibels (capped at 300 dB).
/// Entries are drawn in row-major order; the same seed is bit-reproducible.
inline Matrix add_noise(const Matrix& clean, const NoiseSpec& spec) {
  if (!std::isfinite(spec.snr_db)) throw validation_error("snr_db must be finite");
  const double power = clean.squaredNorm() / static_cast<double>(clean.size());
  if (power == 0.0)
    throw validation_error("add_noise: signal power is zero, SNR is undefined");
  const double snr_db = std::min(spec.snr_db, 300.0);
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix noisy = clean;
  for (int i = 0; i < noisy.rows(); ++i)
    for (int j = 0; j < noisy.cols(); ++j) noisy(i, j) += sigma * n01(rng);
  return noisy;
}

/// Sum of squared prediction errors over the clean signal energy. Rows are
/// samples, columns are nodes.
inline double nmse(const Matrix& predictions, const Matrix& truth) {
  if (predictions.rows() != truth.rows() || predictions.cols() != truth.cols())
    throw validation_error("nmse: predictions are " + std::to_string(predictions.rows()) + "x" +
                           std::to_string(predictions.cols()) + " but truth is " +
                           std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));
  const double denom = truth.squaredNorm();
  if (denom == 0.0) throw validation_error("nmse: truth signals are all zero");
  return (truth - predictions).squaredNorm() / denom;
}

struct CvConfig {
  int folds = 4;
  std::vector<double> alpha_grid;
  std::vector<double> beta_grid;
};

/// Log-spaced default grid 1e-4 .. 1e2.
inline std::vector<double> default_hyper_grid() {
  std::vector<double> grid;
  for (int e = -4; e <= 2; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

struct HyperParams {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Grid-search (alpha, beta) by k-fold cross-validation with contiguous
/// folds (the data are treated as ordered; shuffling would leak). Returns the
/// pair with the lowest mean validation NMSE; ties go to the smallest alpha,
/// then the smallest beta.
inline HyperParams cross_validate(const Matrix& design, const Matrix& targets,
                                  const Matrix& lap, const CvConfig& cfg) {
  const int n = static_cast<int>(design.rows());
  if (cfg.folds < 2) throw validation_error("cross_validate: need at least 2 folds");
  if (n < cfg.folds)
    throw validation_error("cross_validate: " + std::to_string(n) + " samples cannot fill " +
                           std::to_string(cfg.folds) + " folds");
  if (cfg.alpha_grid.empty() || cfg.beta_grid.empty())
    throw validation_error("cross_validate: empty hyperparameter grid");

  std::vector<double> alphas = cfg.alpha_grid;
  std::vector<double> betas = cfg.beta_grid;
  std::sort(alphas.begin(), alphas.end());
  std::sort(betas.begin(), betas.end());

  // fold f covers rows [f*n/folds, (f+1)*n/folds)
  std::vector<int> bounds(cfg.folds + 1);
  for (int f = 0; f <= cfg.folds; ++f) bounds[f] = static_cast<int>(std::int64_t(f) * n / cfg.folds);

  HyperParams best;
  double best_score = std::numeric_limits<double>::infinity();
  for (double alpha : alphas) {
    for (double beta : betas) {
      double score = 0.0;
      for (int f = 0; f < cfg.folds; ++f) {
        const int lo = bounds[f], hi = bounds[f + 1];
        const int n_val = hi - lo;
        const int n_train = n - n_val;
        Matrix train_design(n_train, design.cols());
        Matrix train_targets(n_train, targets.cols());
        train_design.topRows(lo) = design.topRows(lo);
        train_targets.topRows(lo) = targets.topRows(lo);
        train_design.bottomRows(n_train - lo) = design.bottomRows(n - hi);
        train_targets.bottomRows(n_train - lo) = targets.bottomRows(n - hi);

        const Matrix coeffs =
            solve_batch(LrgProblem{train_design, train_targets, lap, alpha, beta});
        const Matrix val_pred = design.middleRows(lo, n_val) * coeffs;
        score += nmse(val_pred, targets.middleRows(lo, n_val));
      }
      score /= cfg.folds;
      if (score < best_score) {
        best_score = score;
        best = HyperParams{alpha, beta};
      }
    }
  }
  return best;
}

}  // namespace lrg
