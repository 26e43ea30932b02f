#pragma once

// Node-recursive updating of the batch solution: when a node joins the graph,
// the grown normal matrix is the bordered matrix [[b, c], [c', d]] with
//
//   b = F + beta diag(a) (x) gram,   c = -beta a (x) gram,
//   d = (1 + beta sum(a)) gram + alpha I,
//
// and its inverse follows from the Schur complement z = (Q^{-1} + h)^{-1},
// h = beta diag(a) (x) gram - c d^{-1} c'. All of F, Q, h and d share the
// eigenvectors of the gram matrix: writing gram = V diag(lambda) V', every
// MK x MK quantity splits into K independent M x M blocks in that basis. The
// update therefore applies the Woodbury identity per block at
// O(K M^3 + (MK)^2 K) cost instead of the O((MK)^3) a dense solve would need,
// and materializes the dense F, Q and W afterwards. The numbers produced are
// the same ones the dense formulas define.
//
// The state's gram matrix, sample count and hyperparameters stay fixed for
// the lifetime of a chain; only the graph and coefficient dimensions grow.

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "lrg/errors.hpp"
#include "lrg/graph.hpp"
#include "lrg/lrg.hpp"

namespace lrg {

struct SpectralCache {
  Matrix basis;                  // V: K x K orthonormal eigenvectors of gram
  Vector eigenvalues;            // lambda: K
  std::vector<Matrix> f_blocks;  // per eigenvalue: lambda (I + beta L) + alpha I, M x M
  std::vector<Matrix> q_blocks;  // inverses of f_blocks, carried recursively
};

struct RecursionState {
  Graph graph;
  Matrix coeffs;             // W: K x M
  Matrix f;                  // normal matrix of the current graph, MK x MK
  Matrix q;                  // F^{-1}, MK x MK
  double alpha = 0.0;
  double beta = 0.0;
  Matrix gram;               // Phi'Phi: K x K
  Matrix design_t;           // Phi': K x N
  Matrix projected_targets;  // Phi'T: K x M, extended exactly on every update
  SpectralCache spectral;
  bool verify = false;       // re-check F Q = I after each update, rebuild on drift
  int fallback_count = 0;    // times the verify fallback re-solved from scratch

  int node_count() const { return graph.node_count(); }
  int feature_dim() const { return static_cast<int>(gram.rows()); }
  int sample_count() const { return static_cast<int>(design_t.cols()); }
};

namespace detail {

// Dense MK x MK matrix from per-eigenvalue blocks: sum_k B_k (x) v_k v_k'.
// Exactly symmetric when every block is.
inline Matrix dense_from_spectral(const std::vector<Matrix>& blocks, const Matrix& basis) {
  const int k = static_cast<int>(basis.rows());
  const int m = blocks.empty() ? 0 : static_cast<int>(blocks.front().rows());
  Matrix out = Matrix::Zero(m * k, m * k);
  Matrix outer(k, k);
  for (int kk = 0; kk < k; ++kk) {
    outer.noalias() = basis.col(kk) * basis.col(kk).transpose();
    const Matrix& blk = blocks[kk];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j <= i; ++j) out.block(i * k, j * k, k, k) += blk(i, j) * outer;
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < i; ++j)
      out.block(j * k, i * k, k, k) = out.block(i * k, j * k, k, k).transpose();
  return out;
}

inline std::pair<std::vector<Matrix>, std::vector<Matrix>> make_spectral_blocks(
    const Matrix& lap, const Vector& eigenvalues, double alpha, double beta) {
  const int m = static_cast<int>(lap.rows());
  const int k = static_cast<int>(eigenvalues.size());
  std::vector<Matrix> f_blocks(k), q_blocks(k);
  for (int kk = 0; kk < k; ++kk) {
    Matrix fb = eigenvalues(kk) * (Matrix::Identity(m, m) + beta * lap);
    fb.diagonal().array() += alpha;
    Eigen::LLT<Matrix> llt(fb);
    if (llt.info() != Eigen::Success)
      throw numerical_error("recursion block factorization failed (eigenvalue " +
                            std::to_string(eigenvalues(kk)) + ")");
    Matrix qb = llt.solve(Matrix::Identity(m, m));
    qb = 0.5 * (qb + qb.transpose()).eval();
    f_blocks[kk] = std::move(fb);
    q_blocks[kk] = std::move(qb);
  }
  return {std::move(f_blocks), std::move(q_blocks)};
}

// Full batch re-solve of the state in place: fresh normal matrix, fresh
// inverse blocks, coefficients from the exactly-maintained projected targets.
inline void rebuild_from_batch(RecursionState& s) {
  const int m = s.node_count();
  const int k = s.feature_dim();
  const Matrix& lap = s.graph.laplacian();
  s.f = normal_matrix_from_gram(lap, s.gram, s.alpha, s.beta);
  Eigen::LLT<Matrix> llt(s.f);
  if (llt.info() != Eigen::Success)
    throw numerical_error("batch rebuild failed: normal matrix not positive definite");
  const Eigen::Map<const Vector> rhs(s.projected_targets.data(), m * k);
  const Vector w = llt.solve(rhs);
  s.coeffs = Eigen::Map<const Matrix>(w.data(), k, m);
  auto [fb, qb] = make_spectral_blocks(lap, s.spectral.eigenvalues, s.alpha, s.beta);
  s.spectral.f_blocks = std::move(fb);
  s.spectral.q_blocks = std::move(qb);
  s.q = dense_from_spectral(s.spectral.q_blocks, s.spectral.basis);
}

}  // namespace detail

/// Max-norm of F Q - I, the state's inverse-consistency residual.
inline double inverse_residual(const RecursionState& s) {
  const int n = static_cast<int>(s.f.rows());
  return (s.f * s.q - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

/// Starts a recursion chain: batch-solves the initial graph and caches the
/// inverse of the normal matrix through its spectral blocks.
inline RecursionState init_state(const Graph& g, const Matrix& design, const Matrix& targets,
                                 double alpha, double beta, bool verify = false) {
  if (alpha <= 0.0)
    throw validation_error("recursion requires alpha > 0 for a positive definite system");
  LrgProblem problem{design, targets, g.laplacian(), alpha, beta};
  Matrix coeffs = solve_batch(problem);  // validates dimensions

  Matrix gram = design.transpose() * design;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success)
    throw numerical_error("eigendecomposition of the gram matrix failed");

  SpectralCache spectral;
  spectral.basis = es.eigenvectors();
  spectral.eigenvalues = es.eigenvalues();
  auto [fb, qb] =
      detail::make_spectral_blocks(g.laplacian(), spectral.eigenvalues, alpha, beta);
  spectral.f_blocks = std::move(fb);
  spectral.q_blocks = std::move(qb);

  Matrix f = normal_matrix_from_gram(g.laplacian(), gram, alpha, beta);
  Matrix q = detail::dense_from_spectral(spectral.q_blocks, spectral.basis);
  Matrix projected = design.transpose() * targets;

  return RecursionState{g,
                        std::move(coeffs),
                        std::move(f),
                        std::move(q),
                        alpha,
                        beta,
                        std::move(gram),
                        design.transpose(),
                        std::move(projected),
                        std::move(spectral),
                        verify,
                        0};
}

/// (Q^{-1} + H)^{-1} computed as Q - Q H (I + Q H)^{-1} Q. Needs no inverse of
/// H, so singular H is fine (H = 0 returns Q unchanged). Symmetrized result.
inline Matrix woodbury_inverse_update(const Matrix& q, const Matrix& h) {
  if (q.rows() != q.cols() || h.rows() != h.cols() || q.rows() != h.rows())
    throw validation_error("woodbury_inverse_update: size mismatch, Q is " +
                           std::to_string(q.rows()) + "x" + std::to_string(q.cols()) +
                           ", H is " + std::to_string(h.rows()) + "x" + std::to_string(h.cols()));
  if (h.isZero(0.0)) return q;
  const int n = static_cast<int>(q.rows());
  const Matrix qh = q * h;
  Eigen::PartialPivLU<Matrix> lu(Matrix::Identity(n, n) + qh);
  const Matrix x = lu.solve(q);
  if (!x.allFinite())
    throw numerical_error("woodbury_inverse_update: I + Q H is numerically singular");
  Matrix z = q - qh * x;
  return 0.5 * (z + z.transpose()).eval();
}

// The bordered partition of the grown normal matrix, assembled densely.
// Reassembling [[interior, border], [border', corner]] must reproduce the
// normal matrix of the appended graph; tests and the verify path rely on it.
struct BorderBlocks {
  Matrix interior;    // MK x MK
  Matrix border;      // MK x K
  Matrix corner;      // K x K
  Matrix woodbury_h;  // interior minus F minus border corner^{-1} border'
};

inline BorderBlocks border_blocks(const RecursionState& s, const Vector& attachment) {
  const int m = s.node_count();
  const int k = s.feature_dim();
  check_attachment(attachment, m);

  BorderBlocks blocks;
  blocks.interior = s.f;
  for (int i = 0; i < m; ++i)
    blocks.interior.block(i * k, i * k, k, k) += (s.beta * attachment(i)) * s.gram;
  blocks.border.resize(m * k, k);
  for (int i = 0; i < m; ++i)
    blocks.border.block(i * k, 0, k, k) = (-s.beta * attachment(i)) * s.gram;
  blocks.corner = (1.0 + s.beta * attachment.sum()) * s.gram;
  blocks.corner.diagonal().array() += s.alpha;

  blocks.woodbury_h = blocks.interior - s.f;
  Eigen::LLT<Matrix> llt(blocks.corner);
  if (llt.info() != Eigen::Success)
    throw numerical_error("border_blocks: corner block is not positive definite");
  blocks.woodbury_h.noalias() -= blocks.border * llt.solve(blocks.border.transpose());
  return blocks;
}

/// One recursion step: absorbs a node with edge weights `attachment` and its
/// N training observations, returning the state for the grown graph. The
/// result matches the batch solution of the appended graph.
inline RecursionState add_node(const RecursionState& s, const Vector& attachment,
                               const Vector& new_node_targets) {
  const int m = s.node_count();
  const int k = s.feature_dim();
  check_attachment(attachment, m);
  if (new_node_targets.size() != s.sample_count())
    throw validation_error("new node carries " + std::to_string(new_node_targets.size()) +
                           " observations, expected " + std::to_string(s.sample_count()));
  if (!new_node_targets.allFinite())
    throw validation_error("new node targets must be finite");

  const double beta = s.beta;
  const double alpha = s.alpha;
  const double attach_sum = attachment.sum();
  const Matrix& basis = s.spectral.basis;
  const Vector& lambda = s.spectral.eigenvalues;

  const Vector phit = s.design_t * new_node_targets;       // Phi' tbar, K
  const Vector phit_b = basis.transpose() * phit;          // in the gram eigenbasis
  const Matrix coeffs_b = basis.transpose() * s.coeffs;    // K x M

  // A disconnected node (or beta = 0) decouples from the existing graph:
  // the old coefficients are untouched and the new column is plain ridge.
  const bool decoupled = (beta == 0.0) || attachment.isZero(0.0);

  std::vector<Matrix> f_blocks(k), q_blocks(k);
  Matrix coeffs_b_next(k, m + 1);
  for (int kk = 0; kk < k; ++kk) {
    const double lam = lambda(kk);
    const double corner = (1.0 + beta * attach_sum) * lam + alpha;  // d in this basis
    const Matrix& fb = s.spectral.f_blocks[kk];
    const Matrix& qb = s.spectral.q_blocks[kk];

    Matrix z;
    Vector border_q;
    double corner_q;
    if (decoupled) {
      z = qb;
      border_q = Vector::Zero(m);
      corner_q = 1.0 / corner;
      coeffs_b_next(kk, m) = corner_q * phit_b(kk);
    } else {
      const double coupling = beta * lam;  // border block is -coupling * a
      Matrix h = coupling * Matrix(attachment.asDiagonal());
      h.noalias() -= (coupling * coupling / corner) * (attachment * attachment.transpose());
      z = woodbury_inverse_update(qb, h);
      const Vector za = z * attachment;
      border_q = (coupling / corner) * za;
      // corner of the block inverse: d^{-1} + d^{-1} c' z c d^{-1}
      corner_q = 1.0 / corner + (coupling * coupling / (corner * corner)) * attachment.dot(za);

      const Vector fw = fb * coeffs_b.row(kk).transpose();
      coeffs_b_next.row(kk).head(m) = (z * fw + phit_b(kk) * border_q).transpose();
      coeffs_b_next(kk, m) = border_q.dot(fw) + corner_q * phit_b(kk);
    }

    Matrix fb_next(m + 1, m + 1);
    fb_next.topLeftCorner(m, m) = fb;
    fb_next.topLeftCorner(m, m).diagonal() += (beta * lam) * attachment;
    fb_next.topRightCorner(m, 1) = (-beta * lam) * attachment;
    fb_next.bottomLeftCorner(1, m) = fb_next.topRightCorner(m, 1).transpose();
    fb_next(m, m) = corner;

    Matrix qb_next(m + 1, m + 1);
    qb_next.topLeftCorner(m, m) = z;
    qb_next.topRightCorner(m, 1) = border_q;
    qb_next.bottomLeftCorner(1, m) = border_q.transpose();
    qb_next(m, m) = corner_q;

    f_blocks[kk] = std::move(fb_next);
    q_blocks[kk] = std::move(qb_next);
  }

  Matrix coeffs_next(k, m + 1);
  if (decoupled) {
    coeffs_next.leftCols(m) = s.coeffs;  // exact: no influence flows backwards
    coeffs_next.col(m) = basis * coeffs_b_next.col(m);
  } else {
    coeffs_next = basis * coeffs_b_next;
  }

  const int grown = (m + 1) * k;
  Matrix f_next(grown, grown);
  f_next.topLeftCorner(m * k, m * k) = s.f;
  for (int i = 0; i < m; ++i) {
    f_next.block(i * k, i * k, k, k) += (beta * attachment(i)) * s.gram;
    f_next.block(i * k, m * k, k, k) = (-beta * attachment(i)) * s.gram;
    f_next.block(m * k, i * k, k, k) = (-beta * attachment(i)) * s.gram;
  }
  f_next.bottomRightCorner(k, k) = (1.0 + beta * attach_sum) * s.gram;
  f_next.bottomRightCorner(k, k).diagonal().array() += alpha;

  Matrix q_next;
  if (decoupled) {
    q_next = Matrix::Zero(grown, grown);
    q_next.topLeftCorner(m * k, m * k) = s.q;
    Vector corner_diag =
        ((1.0 + beta * attach_sum) * lambda.array() + alpha).inverse().matrix();
    q_next.bottomRightCorner(k, k).noalias() =
        basis * corner_diag.asDiagonal() * basis.transpose();
  } else {
    q_next = detail::dense_from_spectral(q_blocks, basis);
  }

  Matrix projected_next(k, m + 1);
  projected_next.leftCols(m) = s.projected_targets;
  projected_next.col(m) = phit;

  RecursionState next{append_node(s.graph, attachment),
                      std::move(coeffs_next),
                      std::move(f_next),
                      std::move(q_next),
                      alpha,
                      beta,
                      s.gram,
                      s.design_t,
                      std::move(projected_next),
                      SpectralCache{basis, lambda, std::move(f_blocks), std::move(q_blocks)},
                      s.verify,
                      s.fallback_count};

  if (next.verify && inverse_residual(next) > 1e-6) {
    detail::rebuild_from_batch(next);
    ++next.fallback_count;
  }
  return next;
}

// ---------------------------------------------------------------------------
// State snapshots: versioned binary format, native endianness.
// Header: magic, version, M, K, N, alpha, beta, verify, fallback_count.
// Body: row-major matrices (adjacency, coeffs, f, q, gram, design_t,
// projected_targets, basis, eigenvalues, then the per-eigenvalue blocks).

namespace detail {

constexpr std::uint32_t kStateMagic = 0x4C524753;  // "LRGS"
constexpr std::uint32_t kStateVersion = 1;

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw io_error("state snapshot truncated");
  return v;
}

inline void write_matrix(std::ostream& out, const Matrix& mat) {
  write_pod<std::int64_t>(out, mat.rows());
  write_pod<std::int64_t>(out, mat.cols());
  for (int i = 0; i < mat.rows(); ++i)
    for (int j = 0; j < mat.cols(); ++j) write_pod<double>(out, mat(i, j));
}

inline Matrix read_matrix(std::istream& in) {
  const auto rows = read_pod<std::int64_t>(in);
  const auto cols = read_pod<std::int64_t>(in);
  if (rows < 0 || cols < 0 || rows > (1 << 24) || cols > (1 << 24))
    throw io_error("state snapshot has implausible matrix dimensions");
  Matrix mat(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) mat(i, j) = read_pod<double>(in);
  return mat;
}

}  // namespace detail

inline void save_state(const RecursionState& s, std::ostream& out) {
  using namespace detail;
  write_pod(out, kStateMagic);
  write_pod(out, kStateVersion);
  write_pod<std::int64_t>(out, s.node_count());
  write_pod<std::int64_t>(out, s.feature_dim());
  write_pod<std::int64_t>(out, s.sample_count());
  write_pod<double>(out, s.alpha);
  write_pod<double>(out, s.beta);
  write_pod<std::uint8_t>(out, s.verify ? 1 : 0);
  write_pod<std::int64_t>(out, s.fallback_count);
  write_matrix(out, s.graph.adjacency());
  write_matrix(out, s.coeffs);
  write_matrix(out, s.f);
  write_matrix(out, s.q);
  write_matrix(out, s.gram);
  write_matrix(out, s.design_t);
  write_matrix(out, s.projected_targets);
  write_matrix(out, s.spectral.basis);
  write_matrix(out, s.spectral.eigenvalues);
  for (const Matrix& b : s.spectral.f_blocks) write_matrix(out, b);
  for (const Matrix& b : s.spectral.q_blocks) write_matrix(out, b);
  if (!out) throw io_error("failed to write state snapshot");
}

inline RecursionState load_state(std::istream& in) {
  using namespace detail;
  if (read_pod<std::uint32_t>(in) != kStateMagic)
    throw io_error("not a state snapshot (bad magic)");
  if (read_pod<std::uint32_t>(in) != kStateVersion)
    throw io_error("unsupported state snapshot version");
  const auto m = read_pod<std::int64_t>(in);
  const auto k = read_pod<std::int64_t>(in);
  const auto n = read_pod<std::int64_t>(in);
  const double alpha = read_pod<double>(in);
  const double beta = read_pod<double>(in);
  const bool verify = read_pod<std::uint8_t>(in) != 0;
  const auto fallback_count = read_pod<std::int64_t>(in);

  Matrix adjacency = read_matrix(in);
  Matrix coeffs = read_matrix(in);
  Matrix f = read_matrix(in);
  Matrix q = read_matrix(in);
  Matrix gram = read_matrix(in);
  Matrix design_t = read_matrix(in);
  Matrix projected = read_matrix(in);
  Matrix basis = read_matrix(in);
  Matrix eigenvalues = read_matrix(in);
  SpectralCache spectral;
  spectral.basis = std::move(basis);
  spectral.eigenvalues = eigenvalues.col(0);
  spectral.f_blocks.resize(k);
  spectral.q_blocks.resize(k);
  for (int kk = 0; kk < k; ++kk) spectral.f_blocks[kk] = read_matrix(in);
  for (int kk = 0; kk < k; ++kk) spectral.q_blocks[kk] = read_matrix(in);

  if (adjacency.rows() != m || coeffs.rows() != k || coeffs.cols() != m ||
      f.rows() != m * k || q.rows() != m * k || gram.rows() != k || design_t.cols() != n ||
      projected.cols() != m || spectral.eigenvalues.size() != k)
    throw io_error("state snapshot dimensions are inconsistent");

  RecursionState s{Graph::from_adjacency(std::move(adjacency)),
                   std::move(coeffs),
                   std::move(f),
                   std::move(q),
                   alpha,
                   beta,
                   std::move(gram),
                   std::move(design_t),
                   std::move(projected),
                   std::move(spectral),
                   verify,
                   static_cast<int>(fallback_count)};
  return s;
}

inline void save_state(const RecursionState& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  save_state(s, out);
  if (!out) throw io_error("failed writing state snapshot to '" + path + "'");
}

inline RecursionState load_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open state snapshot '" + path + "'");
  return load_state(in);
}

}  // namespace lrg
