#pragma once

// Batch linear regression over graphs: the multi-output ridge problem whose
// predictions are regularized by the Laplacian quadratic form. Coefficients
// W (K x M) solve the normal equations
//
//   [(I_M + beta L) (x) Phi'Phi + alpha I] vec(W) = vec(Phi'T)
//
// with (x) the Kronecker product and vec() column-stacking, so column m of W
// holds the K coefficients of node m. beta = 0 decouples the nodes and the
// solve reduces to per-node ridge regression, which doubles as the graph-free
// LR baseline.

#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "lrg/errors.hpp"
#include "lrg/features.hpp"
#include "lrg/graph.hpp"

namespace lrg {

struct LrgProblem {
  Matrix design;     // Phi: N x K feature-mapped inputs
  Matrix targets;    // T: N x M, one graph signal per row
  Matrix laplacian;  // L: M x M
  double alpha = 0.0;
  double beta = 0.0;
};

inline void check_problem(const LrgProblem& p) {
  if (p.design.rows() == 0 || p.design.cols() == 0)
    throw validation_error("problem has an empty design matrix");
  if (p.targets.rows() != p.design.rows())
    throw validation_error("design has " + std::to_string(p.design.rows()) +
                           " rows but targets have " + std::to_string(p.targets.rows()));
  if (p.laplacian.rows() != p.laplacian.cols() || p.laplacian.rows() != p.targets.cols())
    throw validation_error("Laplacian size " + std::to_string(p.laplacian.rows()) +
                           " does not match target dimension " + std::to_string(p.targets.cols()));
  if (p.alpha < 0.0 || p.beta < 0.0)
    throw validation_error("alpha and beta must be nonnegative");
}

/// Normal-equations matrix (I_M + beta L) (x) gram + alpha I, assembled
/// block-wise from a precomputed K x K gram matrix.
inline Matrix normal_matrix_from_gram(const Matrix& lap, const Matrix& gram,
                                      double alpha, double beta) {
  const int m = static_cast<int>(lap.rows());
  const int k = static_cast<int>(gram.rows());
  if (lap.rows() != lap.cols() || gram.rows() != gram.cols())
    throw validation_error("normal_matrix: Laplacian and gram must be square");
  Matrix f = Matrix::Zero(m * k, m * k);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double c = (i == j ? 1.0 : 0.0) + beta * lap(i, j);
      if (c != 0.0) f.block(i * k, j * k, k, k) = c * gram;
    }
  }
  f.diagonal().array() += alpha;
  return f;
}

/// Normal-equations matrix built from the design matrix itself.
inline Matrix normal_matrix(const Matrix& lap, const Matrix& design, double alpha, double beta) {
  if (alpha < 0.0 || beta < 0.0)
    throw validation_error("alpha and beta must be nonnegative");
  const Matrix gram = design.transpose() * design;
  return normal_matrix_from_gram(lap, gram, alpha, beta);
}

/// Optimal coefficients, K x M. Uses a Cholesky solve of the (symmetric
/// positive definite for alpha > 0) normal matrix; the inverse itself is
/// never formed here.
inline Matrix solve_batch(const LrgProblem& p) {
  check_problem(p);
  const int k = static_cast<int>(p.design.cols());
  const int m = static_cast<int>(p.targets.cols());
  const Matrix f = normal_matrix(p.laplacian, p.design, p.alpha, p.beta);

  Eigen::LLT<Matrix> llt(f);
  if (llt.info() != Eigen::Success)
    throw numerical_error("normal matrix is singular or indefinite "
                          "(alpha = 0 with a rank-deficient gram matrix?)");

  const Matrix projected = p.design.transpose() * p.targets;  // Phi'T, K x M
  const Eigen::Map<const Vector> rhs(projected.data(), m * k);
  const Vector w = llt.solve(rhs);
  if (!w.allFinite()) throw numerical_error("batch solve produced non-finite coefficients");
  return Eigen::Map<const Matrix>(w.data(), k, m);
}

/// Predicted graph signal W' phi(x) for a single raw input.
inline Vector predict(const Matrix& coeffs, const Vector& x, const FeatureMap& map) {
  if (coeffs.rows() != map.output_dim())
    throw validation_error("coefficients have " + std::to_string(coeffs.rows()) +
                           " rows but the feature map produces " +
                           std::to_string(map.output_dim()) + " features");
  return coeffs.transpose() * map.apply(x);
}

/// Training cost in its definition form: squared residuals, the Frobenius
/// penalty, and the per-sample smoothness penalty of the predictions.
inline double cost(const Matrix& coeffs, const LrgProblem& p) {
  check_problem(p);
  if (coeffs.rows() != p.design.cols() || coeffs.cols() != p.targets.cols())
    throw validation_error("coefficient matrix has the wrong shape");
  double total = p.alpha * coeffs.squaredNorm();
  for (int n = 0; n < p.design.rows(); ++n) {
    const Vector y = coeffs.transpose() * p.design.row(n).transpose();
    total += (p.targets.row(n).transpose() - y).squaredNorm();
    total += p.beta * y.dot(p.laplacian * y);
  }
  return total;
}

/// The same cost evaluated through trace identities; algebraically identical
/// to cost() and used as a cross-check of it.
inline double cost_trace(const Matrix& coeffs, const LrgProblem& p) {
  check_problem(p);
  const Matrix gram = p.design.transpose() * p.design;
  const Matrix gw = gram * coeffs;
  return (p.targets.transpose() * p.targets).trace() -
         2.0 * (p.targets.transpose() * p.design * coeffs).trace() +
         (coeffs.transpose() * gw).trace() + p.alpha * coeffs.squaredNorm() +
         p.beta * (coeffs.transpose() * gw * p.laplacian).trace();
}

}  // namespace lrg
