#pragma once

#include "mlop/core.hpp"
#include "mlop/sketch.hpp"

#include "json.hpp"

#include <optional>
#include <vector>

namespace mlop {

// Median; even lengths average the two central values. Throws on empty input.
double median(std::vector<double> values);

// Distance from every q to its nearest reference point (sketched), with
// summary statistics. variance is the population variance of the distances.
struct NearestErrors {
  std::vector<double> distances;
  std::vector<Index> nearest;  // index into the reference
  double mean = 0.0;
  double rmse = 0.0;
  double max = 0.0;
  double variance = 0.0;
};
NearestErrors nearest_reference_errors(const PointCloud& q, const PointCloud& reference,
                                       const SketchMatrix& s);

// Largest sketched distance between two reference points.
double sketched_diameter(const PointCloud& x, const SketchMatrix& s);

// Mean nearest-reference distance divided by the sketched diameter of the
// reference. Throws ConfigError for a reference of diameter zero.
double relative_error(const PointCloud& q, const PointCloud& reference, const SketchMatrix& s);

// mu / sigma over the background pixels of each image (sigma is the sample
// standard deviation). Images with sigma = 0 are excluded from the median and
// counted in `excluded`; if every image is excluded the median is +inf.
struct SnrSummary {
  double median = 0.0;
  std::vector<double> per_image;  // +inf for excluded images
  Index excluded = 0;
};
SnrSummary background_snr(const Matrix& images, const Matrix& masks);

// Background mask for each image, taken from its nearest clean reference image.
Matrix nearest_masks(const PointCloud& images, const PointCloud& reference, const Matrix& reference_masks,
                     const SketchMatrix& s);

// First principal direction (unit, sign-normalised so its first clearly
// nonzero entry is positive) of the points of x strictly within sketched
// distance h of `center`, using the full-dimensional covariance. Returns
// nullopt when fewer than `min_points` points qualify.
std::optional<Vector> local_first_eigenvector(const PointCloud& x, const Matrix& x_projected,
                                              const VectorRef& center, double h, Index min_points);

// For each x_i with at least two other points within h: angle in degrees
// between its local first eigenvector and the one computed the same way on
// the reference around x_i's nearest reference point, sign invariant.
struct PcaAngleError {
  double median_deg = 0.0;
  std::vector<double> per_point;
  Index skipped = 0;
};
PcaAngleError local_pca_angle_error(const PointCloud& x, const PointCloud& reference, double h,
                                    const SketchMatrix& s);

// Metrics record written as report.json.
struct ExperimentReport {
  static constexpr int kSchemaVersion = 1;
  std::string experiment;
  double relative_error = 0.0;
  double relative_error_initial = 0.0;
  double rmse_initial = 0.0;
  double rmse = 0.0;
  double max_error_initial = 0.0;
  double max_error = 0.0;
  double max_rel_error_initial = 0.0;  // max error / reference diameter
  double max_rel_error = 0.0;
  double variance_initial = 0.0;
  double variance = 0.0;
  double fill_distance_initial = 0.0;
  double fill_distance_final = 0.0;
  std::optional<double> snr_initial;
  std::optional<double> snr_final;
  std::optional<double> pca_angle_deg;
  double runtime_ms = 0.0;
  Index iterations_run = 0;
  bool converged = false;
  Index sketch_dim = 0;  // columns of the sketch actually used
  nlohmann::json supports;
  nlohmann::json config;
};

void to_json(nlohmann::json& j, const ExperimentReport& r);

}  // namespace mlop
