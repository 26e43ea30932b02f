#pragma once

// Undirected weighted graphs: Laplacian construction, the smoothness quadratic
// form, geodesic-distance adjacency from coordinates, and single-node expansion
// that preserves all existing edges.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrg/errors.hpp"

namespace lrg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Coordinate {
  std::string name;
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

namespace detail {

inline std::string entry_str(int i, int j, double v) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ") = " + std::to_string(v);
}

inline void check_adjacency(const Matrix& a) {
  if (a.rows() == 0 || a.rows() != a.cols())
    throw validation_error("adjacency must be square and non-empty, got " +
                           std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  for (int i = 0; i < a.rows(); ++i) {
    if (a(i, i) != 0.0)
      throw validation_error("adjacency has a self-loop at " + entry_str(i, i, a(i, i)));
    for (int j = 0; j < a.cols(); ++j) {
      if (!std::isfinite(a(i, j)) || a(i, j) < 0.0)
        throw validation_error("adjacency has a negative or non-finite weight at " +
                               entry_str(i, j, a(i, j)));
      if (a(i, j) != a(j, i))
        throw validation_error("adjacency is not symmetric at " + entry_str(i, j, a(i, j)) +
                               " vs " + entry_str(j, i, a(j, i)));
    }
  }
}

}  // namespace detail

/// Graph Laplacian D - A for a validated adjacency matrix (symmetric,
/// nonnegative, zero diagonal). Rows of the result sum to zero.
inline Matrix laplacian(const Matrix& adjacency) {
  detail::check_adjacency(adjacency);
  Matrix l = -adjacency;
  l.diagonal() += adjacency.rowwise().sum();
  return l;
}

// An immutable undirected weighted graph. The Laplacian is built once and kept
// consistent with the adjacency; growth happens only through append_node().
class Graph {
 public:
  static Graph from_adjacency(Matrix adjacency) {
    Matrix l = ::lrg::laplacian(adjacency);
    return Graph(std::move(adjacency), std::move(l));
  }

  int node_count() const { return static_cast<int>(adjacency_.rows()); }
  const Matrix& adjacency() const { return adjacency_; }
  const Matrix& laplacian() const { return laplacian_; }

  friend Graph append_node(const Graph& g, const Vector& attachment);

 private:
  Graph(Matrix adjacency, Matrix lap)
      : adjacency_(std::move(adjacency)), laplacian_(std::move(lap)) {}

  Matrix adjacency_;
  Matrix laplacian_;
};

/// Smoothness quadratic form y'Ly. Equals the weighted sum of squared signal
/// differences across edges; zero for constant signals on connected graphs.
inline double smoothness(const Vector& signal, const Matrix& lap) {
  if (signal.size() != lap.rows() || lap.rows() != lap.cols())
    throw validation_error("smoothness: signal length " + std::to_string(signal.size()) +
                           " does not match Laplacian size " + std::to_string(lap.rows()));
  return signal.dot(lap * signal);
}

inline void check_attachment(const Vector& attachment, int node_count) {
  if (attachment.size() != node_count)
    throw validation_error("attachment length " + std::to_string(attachment.size()) +
                           " does not match node count " + std::to_string(node_count));
  for (int i = 0; i < attachment.size(); ++i)
    if (!std::isfinite(attachment(i)) || attachment(i) < 0.0)
      throw validation_error("attachment has a negative or non-finite weight at index " +
                             std::to_string(i) + ": " + std::to_string(attachment(i)));
}

/// Grows the graph by one node with the given edge weights to existing nodes.
/// Existing edges are untouched; the new Laplacian is assembled in block form
/// [[L + diag(a), -a], [-a', sum(a)]] rather than recomputed from scratch.
inline Graph append_node(const Graph& g, const Vector& attachment) {
  const int m = g.node_count();
  check_attachment(attachment, m);

  Matrix adjacency(m + 1, m + 1);
  adjacency.topLeftCorner(m, m) = g.adjacency();
  adjacency.topRightCorner(m, 1) = attachment;
  adjacency.bottomLeftCorner(1, m) = attachment.transpose();
  adjacency(m, m) = 0.0;

  Matrix lap(m + 1, m + 1);
  lap.topLeftCorner(m, m) = g.laplacian();
  lap.topLeftCorner(m, m).diagonal() += attachment;
  lap.topRightCorner(m, 1) = -attachment;
  lap.bottomLeftCorner(1, m) = -attachment.transpose();
  lap(m, m) = attachment.sum();

  return Graph(std::move(adjacency), std::move(lap));
}

/// Great-circle distance in km between two (lat, lon) points in degrees,
/// on a sphere of radius 6371 km (haversine formula).
inline double haversine_km(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double kDegToRad = M_PI / 180.0;
  const double lat1 = lat1_deg * kDegToRad;
  const double lat2 = lat2_deg * kDegToRad;
  const double dlat = (lat2_deg - lat1_deg) * kDegToRad;
  const double dlon = (lon2_deg - lon1_deg) * kDegToRad;
  const double s1 = std::sin(0.5 * dlat);
  const double s2 = std::sin(0.5 * dlon);
  const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

/// Adjacency from geographic coordinates: a_ij = exp(-d_ij^2 / S) with S the
/// sum of squared pairwise distances over all ordered pairs i != j (each
/// unordered pair counted twice). Off-diagonal weights land in (0, 1].
inline Matrix geodesic_adjacency(const std::vector<Coordinate>& coords) {
  const int m = static_cast<int>(coords.size());
  if (m < 2)
    throw validation_error("geodesic_adjacency needs at least 2 coordinates, got " +
                           std::to_string(m));

  Matrix dist2 = Matrix::Zero(m, m);
  double sum = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const double d = haversine_km(coords[i].lat_deg, coords[i].lon_deg,
                                    coords[j].lat_deg, coords[j].lon_deg);
      dist2(i, j) = dist2(j, i) = d * d;
      sum += 2.0 * d * d;
    }
  }
  if (sum == 0.0)
    throw validation_error("geodesic_adjacency: all pairwise distances are zero");

  Matrix adjacency = (-dist2 / sum).array().exp();
  adjacency.diagonal().setZero();
  return adjacency;
}

}  // namespace lrg
