#include "mlop/core.hpp"

#include "mlop/errors.hpp"

#include <cmath>
#include <string>

namespace mlop {

namespace {

void check_points(const Matrix& points) {
  if (points.rows() < 1) throw ConfigError("point cloud must contain at least one point");
  if (points.cols() < 1) throw ConfigError("point cloud must have ambient dimension >= 1");
  for (Index i = 0; i < points.rows(); ++i) {
    for (Index k = 0; k < points.cols(); ++k) {
      if (!std::isfinite(points(i, k))) {
        throw ConfigError("non-finite coordinate at point " + std::to_string(i) + ", coordinate " +
                          std::to_string(k));
      }
    }
  }
}

}  // namespace

PointCloud::PointCloud(Matrix points) : points_(std::move(points)) { check_points(points_); }

PointCloud::PointCloud(Matrix points, Matrix labels)
    : points_(std::move(points)), labels_(std::move(labels)) {
  check_points(points_);
  if (labels_->rows() != points_.rows()) {
    throw ConfigError("label count " + std::to_string(labels_->rows()) +
                      " does not match point count " + std::to_string(points_.rows()));
  }
}

PointCloud PointCloud::subset(std::span<const Index> indices) const {
  Matrix rows(static_cast<Index>(indices.size()), dim());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] < 0 || indices[r] >= size()) throw ConfigError("subset index out of range");
    rows.row(static_cast<Index>(r)) = points_.row(indices[r]);
  }
  if (!labels_) return PointCloud(std::move(rows));
  Matrix lab(static_cast<Index>(indices.size()), labels_->cols());
  for (std::size_t r = 0; r < indices.size(); ++r) lab.row(static_cast<Index>(r)) = labels_->row(indices[r]);
  return PointCloud(std::move(rows), std::move(lab));
}

}  // namespace mlop
