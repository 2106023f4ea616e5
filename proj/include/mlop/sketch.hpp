#pragma once

#include "mlop/core.hpp"
#include "mlop/rng.hpp"

#include <filesystem>

namespace mlop {

// n x m matrix S with orthonormal columns. Norms of x in R^n are evaluated
// as |S^T x|, which discards the ambient directions that carry mostly noise.
// Immutable once built.
class SketchMatrix {
 public:
  // Square identity sketch (m = n): sketched norms are exact.
  static SketchMatrix identity(Index n);
  // Wraps an existing matrix; throws ConfigError unless S^T S = I to 1e-10.
  static SketchMatrix from_matrix(Eigen::MatrixXd s);

  Index ambient_dim() const { return ambient_dim_; }
  Index sketch_dim() const { return sketch_dim_; }
  bool is_identity() const { return identity_; }
  // Materialised S (the identity is built on demand).
  Eigen::MatrixXd matrix() const;

  // S^T x.
  Vector project(const VectorRef& x) const;
  // Rows of X mapped to rows of X S.
  Matrix project_rows(const Matrix& x) const;

 private:
  SketchMatrix(Eigen::MatrixXd s, Index n, Index m, bool identity)
      : s_(std::move(s)), ambient_dim_(n), sketch_dim_(m), identity_(identity) {}

  Eigen::MatrixXd s_;
  Index ambient_dim_;
  Index sketch_dim_;
  bool identity_;
};

// Randomised range finder over the rows of P: G ~ N(0,1)^{J x m},
// B = P^T G, B = S R (thin QR). Throws DegenerateSketchError when B has
// numerical rank below m; the caller may retry with a smaller m.
SketchMatrix build_sketch(const PointCloud& p, Index m, Rng& rng);

double sketched_norm(const SketchMatrix& s, const VectorRef& x);
double sketched_dist(const SketchMatrix& s, const VectorRef& x, const VectorRef& y);

// Distances between rows of already projected coordinates.
inline double projected_dist(const Matrix& a, Index i, const Matrix& b, Index j) {
  return (a.row(i) - b.row(j)).norm();
}

// S stored as an n-row, m-column CSV.
void save_sketch(const SketchMatrix& s, const std::filesystem::path& path);
SketchMatrix load_sketch(const std::filesystem::path& path);

}  // namespace mlop
