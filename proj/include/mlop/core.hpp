#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mlop {

using Index = Eigen::Index;

// Points are stored one per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using VectorRef = Eigen::Ref<const Vector>;

// An ordered, immutable set of points in R^n.
//
// Invariants (checked on construction): at least one point, every
// coordinate finite. Optional labels carry per-point parameter coordinates
// (e.g. the (t, u) a sample was generated from) and must have one row per
// point.
class PointCloud {
 public:
  explicit PointCloud(Matrix points);
  PointCloud(Matrix points, Matrix labels);

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }

  const Matrix& points() const { return points_; }
  auto point(Index i) const { return points_.row(i).transpose(); }

  bool has_labels() const { return labels_.has_value(); }
  const Matrix& labels() const { return *labels_; }

  // Copy of the selected rows (labels follow).
  PointCloud subset(std::span<const Index> indices) const;

 private:
  Matrix points_;
  std::optional<Matrix> labels_;
};

}  // namespace mlop
