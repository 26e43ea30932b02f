#pragma once

// Dataset shaping: lag and column-split pairings of signal tables, smooth
// synthetic graph signals, and a fully synthetic dataset generator used when
// no real measurements are available.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "lrg/errors.hpp"
#include "lrg/eval.hpp"
#include "lrg/graph.hpp"

namespace lrg {

struct Dataset {
  Matrix inputs;                        // N_total x I
  Matrix targets_clean;                 // N_total x M
  std::vector<Coordinate> node_coords;  // optional, one per target column
  int train_count = 0;
  int test_count = 0;
  bool targets_are_clean = true;  // synthetic truth vs raw measurements
};

/// Marks the first `train_count` samples as training data and the rest as the
/// test set.
inline Dataset with_split(Dataset ds, int train_count) {
  const int total = static_cast<int>(ds.inputs.rows());
  if (train_count < 1 || train_count >= total)
    throw validation_error("train split " + std::to_string(train_count) +
                           " leaves no test data out of " + std::to_string(total) + " samples");
  ds.train_count = train_count;
  ds.test_count = total - train_count;
  return ds;
}

/// Pairs row n with row n + lag: the input is today's readings over all
/// nodes, the target the readings `lag` steps later. lag = 0 pairs each row
/// with itself.
inline Dataset make_lagged_pairs(const Matrix& signals, int lag) {
  if (lag < 0) throw validation_error("lag must be nonnegative");
  const int rows = static_cast<int>(signals.rows());
  if (rows <= lag)
    throw validation_error("cannot lag-pair " + std::to_string(rows) + " rows by " +
                           std::to_string(lag) + ": no pairs formable");
  Dataset ds;
  const int n = rows - lag;
  ds.inputs = signals.topRows(n);
  ds.targets_clean = signals.bottomRows(n);
  return ds;
}

/// Splits the columns into an input group (first `input_count`) and an output
/// group (next `output_count`); every row becomes one input-output pair.
inline Dataset split_in_out(const Matrix& signals, int input_count, int output_count) {
  if (input_count < 1 || output_count < 1)
    throw validation_error("column split needs positive input and output counts");
  if (input_count + output_count > signals.cols())
    throw validation_error("column split " + std::to_string(input_count) + "+" +
                           std::to_string(output_count) + " exceeds " +
                           std::to_string(signals.cols()) + " columns");
  if (signals.rows() == 0) throw validation_error("column split: no sample rows");
  Dataset ds;
  ds.inputs = signals.leftCols(input_count);
  ds.targets_clean = signals.middleCols(input_count, output_count);
  return ds;
}

/// Draws `count` smooth graph signals y = (I + gamma L)^{-1} z with z i.i.d.
/// standard normal, one signal per row. gamma = 0 returns white noise; large
/// gamma pushes the signals toward the Laplacian's null space.
inline Matrix smooth_signals(const Matrix& lap, double gamma, int count, std::uint64_t seed) {
  if (gamma < 0.0) throw validation_error("smoothing strength must be nonnegative");
  if (count < 1) throw validation_error("smooth_signals: count must be positive");
  const int m = static_cast<int>(lap.rows());

  Matrix smoother = gamma * lap;
  smoother.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(smoother);
  if (llt.info() != Eigen::Success)
    throw numerical_error("smooth_signals: I + gamma L is not positive definite");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix draws(count, m);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < m; ++j) draws(i, j) = n01(rng);
  return llt.solve(draws.transpose()).transpose();
}

// Synthetic stand-in for a geodesic sensor network: random station
// coordinates in a boxed region, a ground-truth linear map whose per-node
// coefficient profiles are smooth over the graph, and Gaussian inputs.
struct SyntheticSpec {
  int nodes = 25;
  int input_dim = 25;
  int samples = 90;     // training pool plus test rows
  double gamma = 5.0;   // smoothness of the ground-truth coefficient profiles
  std::uint64_t seed = 1;
  double lat_min = 55.0, lat_max = 69.0;
  double lon_min = 11.0, lon_max = 24.0;
};

inline std::vector<Coordinate> random_coordinates(const SyntheticSpec& spec) {
  if (spec.nodes < 2) throw validation_error("synthetic dataset needs at least 2 nodes");
  std::mt19937_64 rng(mix_seed(spec.seed, 1));
  std::uniform_real_distribution<double> lat(spec.lat_min, spec.lat_max);
  std::uniform_real_distribution<double> lon(spec.lon_min, spec.lon_max);
  std::vector<Coordinate> coords(spec.nodes);
  for (int i = 0; i < spec.nodes; ++i)
    coords[i] = Coordinate{"node_" + std::to_string(i + 1), lat(rng), lon(rng)};
  return coords;
}

inline Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.input_dim < 1 || spec.samples < 2)
    throw validation_error("synthetic dataset needs input_dim >= 1 and samples >= 2");
  Dataset ds;
  ds.node_coords = random_coordinates(spec);
  const Matrix lap = laplacian(geodesic_adjacency(ds.node_coords));

  // Each input dimension contributes a coefficient profile that is smooth
  // across the graph, so clean targets are smooth graph signals.
  const Matrix truth_map = smooth_signals(lap, spec.gamma, spec.input_dim, mix_seed(spec.seed, 2));

  std::mt19937_64 rng(mix_seed(spec.seed, 3));
  std::normal_distribution<double> n01(0.0, 1.0);
  ds.inputs.resize(spec.samples, spec.input_dim);
  for (int i = 0; i < spec.samples; ++i)
    for (int j = 0; j < spec.input_dim; ++j) ds.inputs(i, j) = n01(rng);

  ds.targets_clean = ds.inputs * truth_map;
  ds.targets_are_clean = true;
  return ds;
}

}  // namespace lrg
