#include "mlop/metrics.hpp"

#include "mlop/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <unordered_map>

namespace mlop {

double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median of an empty list");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

NearestErrors nearest_reference_errors(const PointCloud& q, const PointCloud& reference,
                                       const SketchMatrix& s) {
  const Matrix qp = s.project_rows(q.points());
  const Matrix rp = s.project_rows(reference.points());
  NearestErrors out;
  out.distances.resize(static_cast<std::size_t>(qp.rows()));
  out.nearest.resize(static_cast<std::size_t>(qp.rows()));
  for (Index i = 0; i < qp.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Index arg = 0;
    for (Index r = 0; r < rp.rows(); ++r) {
      const double d2 = (qp.row(i) - rp.row(r)).squaredNorm();
      if (d2 < best) {
        best = d2;
        arg = r;
      }
    }
    out.distances[static_cast<std::size_t>(i)] = std::sqrt(best);
    out.nearest[static_cast<std::size_t>(i)] = arg;
  }
  const double count = static_cast<double>(out.distances.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double d : out.distances) {
    sum += d;
    sum_sq += d * d;
    out.max = std::max(out.max, d);
  }
  out.mean = sum / count;
  out.rmse = std::sqrt(sum_sq / count);
  double var = 0.0;
  for (double d : out.distances) var += (d - out.mean) * (d - out.mean);
  out.variance = var / count;
  return out;
}

double sketched_diameter(const PointCloud& x, const SketchMatrix& s) {
  const Matrix xp = s.project_rows(x.points());
  double best = 0.0;
  for (Index i = 0; i < xp.rows(); ++i) {
    for (Index k = i + 1; k < xp.rows(); ++k) best = std::max(best, (xp.row(i) - xp.row(k)).squaredNorm());
  }
  return std::sqrt(best);
}

double relative_error(const PointCloud& q, const PointCloud& reference, const SketchMatrix& s) {
  const double diameter = sketched_diameter(reference, s);
  if (!(diameter > 0.0)) throw ConfigError("reference cloud has zero diameter");
  return nearest_reference_errors(q, reference, s).mean / diameter;
}

SnrSummary background_snr(const Matrix& images, const Matrix& masks) {
  if (images.rows() != masks.rows() || images.cols() != masks.cols()) {
    throw ConfigError("images and masks differ in shape");
  }
  if (images.rows() < 1) throw ConfigError("no images");
  SnrSummary out;
  std::vector<double> finite;
  for (Index i = 0; i < images.rows(); ++i) {
    double sum = 0.0;
    Index count = 0;
    for (Index k = 0; k < images.cols(); ++k) {
      if (masks(i, k) != 0.0) {
        sum += images(i, k);
        ++count;
      }
    }
    if (count < 2) throw ConfigError("image " + std::to_string(i) + " has fewer than two background pixels");
    const double mu = sum / static_cast<double>(count);
    double ss = 0.0;
    for (Index k = 0; k < images.cols(); ++k) {
      if (masks(i, k) != 0.0) ss += (images(i, k) - mu) * (images(i, k) - mu);
    }
    const double sigma = std::sqrt(ss / static_cast<double>(count - 1));
    if (sigma == 0.0) {
      out.per_image.push_back(std::numeric_limits<double>::infinity());
      ++out.excluded;
      continue;
    }
    out.per_image.push_back(mu / sigma);
    finite.push_back(mu / sigma);
  }
  out.median = finite.empty() ? std::numeric_limits<double>::infinity() : median(std::move(finite));
  return out;
}

Matrix nearest_masks(const PointCloud& images, const PointCloud& reference, const Matrix& reference_masks,
                     const SketchMatrix& s) {
  if (reference_masks.rows() != reference.size()) throw ConfigError("one mask per reference image required");
  const auto nearest = nearest_reference_errors(images, reference, s).nearest;
  Matrix out(images.size(), reference_masks.cols());
  for (Index i = 0; i < images.size(); ++i) out.row(i) = reference_masks.row(nearest[static_cast<std::size_t>(i)]);
  return out;
}

std::optional<Vector> local_first_eigenvector(const PointCloud& x, const Matrix& x_projected,
                                              const VectorRef& center, double h, Index min_points) {
  std::vector<Index> members;
  for (Index j = 0; j < x_projected.rows(); ++j) {
    if ((x_projected.row(j).transpose() - center).norm() < h) members.push_back(j);
  }
  if (static_cast<Index>(members.size()) < min_points) return std::nullopt;

  const Index n = x.dim();
  Matrix local(static_cast<Index>(members.size()), n);
  for (std::size_t r = 0; r < members.size(); ++r) local.row(static_cast<Index>(r)) = x.points().row(members[r]);
  const Eigen::RowVectorXd mean = local.colwise().mean();
  local.rowwise() -= mean;
  const Eigen::MatrixXd cov = local.transpose() * local / static_cast<double>(members.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed on a local covariance");
  if (!(eig.eigenvalues()(n - 1) > 0.0)) throw NumericalError("degenerate local covariance (coincident neighbours)");
  Vector v = eig.eigenvectors().col(n - 1).normalized();
  for (Index k = 0; k < n; ++k) {
    if (std::abs(v(k)) > 1e-12) {
      if (v(k) < 0.0) v = -v;
      break;
    }
  }
  return v;
}

PcaAngleError local_pca_angle_error(const PointCloud& x, const PointCloud& reference, double h,
                                    const SketchMatrix& s) {
  if (!(h > 0.0)) throw ConfigError("PCA radius must be positive");
  const Matrix xp = s.project_rows(x.points());
  const Matrix rp = s.project_rows(reference.points());
  const auto nearest = nearest_reference_errors(x, reference, s).nearest;

  std::unordered_map<Index, std::optional<Vector>> reference_dirs;
  PcaAngleError out;
  for (Index i = 0; i < x.size(); ++i) {
    // The point itself plus at least two neighbours.
    const auto own = local_first_eigenvector(x, xp, xp.row(i).transpose(), h, 3);
    const Index r = nearest[static_cast<std::size_t>(i)];
    auto it = reference_dirs.find(r);
    if (it == reference_dirs.end()) {
      it = reference_dirs.emplace(r, local_first_eigenvector(reference, rp, rp.row(r).transpose(), h, 3)).first;
    }
    if (!own || !it->second) {
      ++out.skipped;
      continue;
    }
    const double c = std::min(1.0, std::abs(own->dot(*it->second)));
    out.per_point.push_back(std::acos(c) * 180.0 / std::numbers::pi);
  }
  if (out.per_point.empty()) throw ConfigError("no point has enough neighbours for local PCA");
  out.median_deg = median(out.per_point);
  return out;
}

void to_json(nlohmann::json& j, const ExperimentReport& r) {
  j = nlohmann::json{{"schema_version", ExperimentReport::kSchemaVersion},
                     {"experiment", r.experiment},
                     {"relative_error", r.relative_error},
                     {"relative_error_initial", r.relative_error_initial},
                     {"rmse_initial", r.rmse_initial},
                     {"rmse", r.rmse},
                     {"max_error_initial", r.max_error_initial},
                     {"max_error", r.max_error},
                     {"max_rel_error_initial", r.max_rel_error_initial},
                     {"max_rel_error", r.max_rel_error},
                     {"variance_initial", r.variance_initial},
                     {"variance", r.variance},
                     {"fill_distance_initial", r.fill_distance_initial},
                     {"fill_distance_final", r.fill_distance_final},
                     {"runtime_ms", r.runtime_ms},
                     {"iterations_run", r.iterations_run},
                     {"converged", r.converged},
                     {"sketch_dim", r.sketch_dim},
                     {"max_iters_reached", !r.converged},
                     {"supports", r.supports},
                     {"config", r.config}};
  j["snr_initial"] = r.snr_initial ? nlohmann::json(*r.snr_initial) : nlohmann::json(nullptr);
  j["snr_final"] = r.snr_final ? nlohmann::json(*r.snr_final) : nlohmann::json(nullptr);
  j["pca_angle_deg"] = r.pca_angle_deg ? nlohmann::json(*r.pca_angle_deg) : nlohmann::json(nullptr);
}

}  // namespace mlop
