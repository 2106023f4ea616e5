#include "mlop/sketch.hpp"

#include "mlop/errors.hpp"
#include "mlop/io.hpp"

#include <Eigen/QR>

#include <string>

namespace mlop {

SketchMatrix SketchMatrix::identity(Index n) {
  if (n < 1) throw ConfigError("identity sketch needs n >= 1");
  return SketchMatrix(Eigen::MatrixXd(), n, n, true);
}

SketchMatrix SketchMatrix::from_matrix(Eigen::MatrixXd s) {
  if (s.rows() < 1 || s.cols() < 1 || s.cols() > s.rows()) {
    throw ConfigError("sketch must be n x m with 1 <= m <= n");
  }
  const Eigen::MatrixXd gram = s.transpose() * s;
  const double err = (gram - Eigen::MatrixXd::Identity(s.cols(), s.cols())).cwiseAbs().maxCoeff();
  if (err > 1e-10) {
    throw ConfigError("sketch columns are not orthonormal (max |S^T S - I| = " + std::to_string(err) + ")");
  }
  const Index n = s.rows();
  const Index m = s.cols();
  return SketchMatrix(std::move(s), n, m, false);
}

Eigen::MatrixXd SketchMatrix::matrix() const {
  if (identity_) return Eigen::MatrixXd::Identity(ambient_dim_, ambient_dim_);
  return s_;
}

Vector SketchMatrix::project(const VectorRef& x) const {
  if (x.size() != ambient_dim_) {
    throw ConfigError("dimension mismatch: vector of length " + std::to_string(x.size()) +
                      " for a sketch over R^" + std::to_string(ambient_dim_));
  }
  if (identity_) return x;
  return s_.transpose() * x;
}

Matrix SketchMatrix::project_rows(const Matrix& x) const {
  if (x.cols() != ambient_dim_) {
    throw ConfigError("dimension mismatch: points in R^" + std::to_string(x.cols()) +
                      " for a sketch over R^" + std::to_string(ambient_dim_));
  }
  if (identity_) return x;
  return x * s_;
}

SketchMatrix build_sketch(const PointCloud& p, Index m, Rng& rng) {
  const Index n = p.dim();
  const Index j = p.size();
  if (m < 1 || m > n) {
    throw ConfigError("sketch dimension " + std::to_string(m) + " outside [1, " + std::to_string(n) + "]");
  }
  Eigen::MatrixXd g(j, m);
  // Row-major fill order keeps the stream layout independent of Eigen's storage.
  for (Index r = 0; r < j; ++r) {
    for (Index c = 0; c < m; ++c) g(r, c) = rng.normal();
  }
  const Eigen::MatrixXd b = p.points().transpose() * g;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_probe(b);
  rank_probe.setThreshold(1e-10);
  const Index rank = rank_probe.rank();
  if (rank < m) {
    throw DegenerateSketchError(static_cast<std::size_t>(m), static_cast<std::size_t>(rank));
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(b);
  Eigen::MatrixXd s = qr.householderQ() * Eigen::MatrixXd::Identity(n, m);
  // Fix column signs so that diag(R) > 0; this makes S a function of B alone.
  const Eigen::MatrixXd r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  for (Index c = 0; c < m; ++c) {
    if (r(c, c) < 0.0) s.col(c) *= -1.0;
  }
  return SketchMatrix::from_matrix(std::move(s));
}

double sketched_norm(const SketchMatrix& s, const VectorRef& x) { return s.project(x).norm(); }

double sketched_dist(const SketchMatrix& s, const VectorRef& x, const VectorRef& y) {
  if (x.size() != y.size()) throw ConfigError("dimension mismatch between the two points");
  return sketched_norm(s, x - y);
}

void save_sketch(const SketchMatrix& s, const std::filesystem::path& path) {
  save_matrix(Matrix(s.matrix()), path);
}

SketchMatrix load_sketch(const std::filesystem::path& path) {
  Matrix m = load_matrix(path);
  Eigen::MatrixXd dense = m;
  if (dense.rows() == dense.cols() && dense.isIdentity(0.0)) return SketchMatrix::identity(dense.rows());
  return SketchMatrix::from_matrix(std::move(dense));
}

}  // namespace mlop
