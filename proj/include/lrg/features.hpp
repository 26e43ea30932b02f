#pragma once

// Input feature maps and design-matrix assembly. Feature maps are fixed at
// construction (random parameters are drawn once from a seed) and know nothing
// about any graph, so a design matrix never changes as nodes are added.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "lrg/errors.hpp"
#include "lrg/graph.hpp"

namespace lrg {

class FeatureMap {
 public:
  enum class Kind { identity, random_sigmoid };

  /// phi(x) = x. Output dimension equals the input dimension.
  static FeatureMap identity(int input_dim) {
    if (input_dim < 1)
      throw validation_error("identity feature map needs input_dim >= 1");
    FeatureMap map;
    map.kind_ = Kind::identity;
    map.input_dim_ = input_dim;
    map.output_dim_ = input_dim;
    return map;
  }

  /// phi_i(x) = logistic(f_i'x + g_i) with f_i, g_i drawn i.i.d. from N(0,1).
  /// The same seed always reproduces the same parameters.
  static FeatureMap random_sigmoid(int input_dim, int output_dim, std::uint64_t seed) {
    if (input_dim < 1 || output_dim < 1)
      throw validation_error("random_sigmoid feature map needs positive dimensions");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    Matrix weights(output_dim, input_dim);
    for (int i = 0; i < output_dim; ++i)
      for (int j = 0; j < input_dim; ++j) weights(i, j) = n01(rng);
    Vector biases(output_dim);
    for (int i = 0; i < output_dim; ++i) biases(i) = n01(rng);
    return sigmoid_with_params(std::move(weights), std::move(biases), seed);
  }

  /// Sigmoid map with explicitly supplied parameters.
  static FeatureMap sigmoid_with_params(Matrix weights, Vector biases, std::uint64_t seed = 0) {
    if (weights.rows() != biases.size())
      throw validation_error("sigmoid parameters disagree: " + std::to_string(weights.rows()) +
                             " weight rows vs " + std::to_string(biases.size()) + " biases");
    if (!weights.allFinite() || !biases.allFinite())
      throw validation_error("sigmoid parameters must be finite");
    FeatureMap map;
    map.kind_ = Kind::random_sigmoid;
    map.input_dim_ = static_cast<int>(weights.cols());
    map.output_dim_ = static_cast<int>(weights.rows());
    map.weights_ = std::move(weights);
    map.biases_ = std::move(biases);
    map.seed_ = seed;
    return map;
  }

  Kind kind() const { return kind_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  std::uint64_t seed() const { return seed_; }
  const Matrix& weights() const { return weights_; }
  const Vector& biases() const { return biases_; }

  /// Feature vector for one input.
  Vector apply(const Vector& x) const {
    if (x.size() != input_dim_)
      throw validation_error("feature map expects inputs of dimension " +
                             std::to_string(input_dim_) + ", got " + std::to_string(x.size()));
    if (!x.allFinite()) throw validation_error("feature map input has non-finite entries");
    if (kind_ == Kind::identity) return x;
    Vector pre = weights_ * x + biases_;
    return ((-pre.array()).exp() + 1.0).inverse().matrix();
  }

  /// Stacks apply() row-wise over an N x I input matrix.
  Matrix design_matrix(const Matrix& inputs) const {
    if (inputs.rows() == 0) throw validation_error("design_matrix: empty input set");
    Matrix phi(inputs.rows(), output_dim_);
    for (int n = 0; n < inputs.rows(); ++n)
      phi.row(n) = apply(inputs.row(n).transpose()).transpose();
    return phi;
  }

 private:
  FeatureMap() = default;

  Kind kind_ = Kind::identity;
  int input_dim_ = 0;
  int output_dim_ = 0;
  std::uint64_t seed_ = 0;
  Matrix weights_;
  Vector biases_;
};

}  // namespace lrg
