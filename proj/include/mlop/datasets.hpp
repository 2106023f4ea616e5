#pragma once

#include "mlop/core.hpp"
#include "mlop/rng.hpp"
#include "mlop/sketch.hpp"

#include "json.hpp"

#include <array>
#include <optional>
#include <span>
#include <string_view>

namespace mlop {

// Synthetic manifolds used by the experiments. Unless noted otherwise,
// samples lie on a tensor grid in parameter space whose per-axis counts are
// proportional to the embedded length of each axis (so spacing is roughly
// uniform on the manifold), with just enough points to reach the requested
// count; surplus grid points are dropped at evenly spaced flat indices.
enum class DatasetKind {
  kO2,             // 1-D: orthogonal 2x2 matrices, randomly rotated into R^60
  kConeSegment,    // 3-D cone collapsing onto a 1-D segment, R^60
  kCylinder2d,     // 2-D cylinder, R^60
  kCylinder6d,     // 6-D cylinder over a 5-sphere, R^60
  kEllipseImages,  // 20x20 images of centred ellipses, R^400
  kGridLine,       // 1-D segment, R^n (unit tests)
};

std::string_view kind_name(DatasetKind kind);
DatasetKind parse_kind(std::string_view name);  // throws ConfigError
Index default_ambient_dim(DatasetKind kind);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kCylinder2d;
  Index count = 816;               // J
  double noise = 0.0;              // U(-noise, noise) per coordinate; N(0, noise^2) per pixel for images
  Index ambient_dim = 0;           // 0: the kind's default
  std::uint64_t seed = 0;
  double reference_density = 4.0;  // reference has this many times more samples
  double radius = 1.5;             // cylinder2d radius

  void validate() const;
  Index resolved_ambient_dim() const { return ambient_dim > 0 ? ambient_dim : default_ambient_dim(kind); }
};

void to_json(nlohmann::json& j, const DatasetSpec& s);
void from_json(const nlohmann::json& j, DatasetSpec& s);

// Noise-free samples plus a denser noise-free reference of the same manifold.
struct ManifoldSample {
  PointCloud clean;
  PointCloud reference;
  // Images only: 1 marks a background pixel of the clean image.
  std::optional<Matrix> masks;
  std::optional<Matrix> reference_masks;
  // O(2) only: the random orthogonal embedding A (points are A p^).
  std::optional<Eigen::MatrixXd> embedding;
};

ManifoldSample gen_o2(Index count, Rng& rng, double reference_density = 4.0, Index ambient_dim = 60);
ManifoldSample gen_cone_segment(Index count, double reference_density = 4.0, Index ambient_dim = 60);
ManifoldSample gen_cylinder2d(Index count, double radius = 1.5, double reference_density = 4.0,
                              Index ambient_dim = 60);
ManifoldSample gen_cylinder6d(Index count, double reference_density = 4.0, Index ambient_dim = 60);
ManifoldSample gen_ellipse_images(Index count, double reference_density = 4.0);
// Unit-length segment with random origin and direction drawn from rng.
ManifoldSample gen_grid_line(Index count, Index ambient_dim, Rng& rng, double reference_density = 4.0);

// rows x cols lattice with the given spacing in the first two coordinates of R^n.
PointCloud gen_grid_plane(Index rows, Index cols, double spacing, Index ambient_dim);

// Closed-form parameterisations (exposed for tests).
Vector o2_point(double theta, Index ambient_dim);
Vector cone_point(double t, double r, double u, Index ambient_dim);
Vector cylinder2d_point(double t, double u, double radius, Index ambient_dim);
// Five angles u1..u5; x6 closes with sin(u5).
std::array<double, 6> sphere5_coords(std::span<const double, 5> u, double radius);
Vector cylinder6d_point(double t, std::span<const double, 5> u, double radius, Index ambient_dim);
// Clean image and background mask of an ellipse with horizontal radius a and
// vertical radius b (pixels). Background pixels are 1, the ellipse is 0.
struct EllipseImage {
  Vector pixels;
  Vector background;
};
inline constexpr Index kImageSide = 20;
EllipseImage ellipse_image(double a, double b);

PointCloud add_uniform_noise(const PointCloud& p, double sigma, Rng& rng);
PointCloud add_gaussian_noise(const PointCloud& p, double sigma, Rng& rng);

// Parameter tuples for a tensor grid over the given axes (see DatasetKind).
struct Axis {
  double lo;
  double hi;
  double extent;  // embedded length, drives the per-axis count
};
Matrix tensor_grid(std::span<const Axis> axes, Index count);

struct Dataset {
  DatasetSpec spec;
  PointCloud points;  // P (noisy)
  PointCloud clean;   // P before noise
  PointCloud reference;
  std::optional<Matrix> masks;
  std::optional<Matrix> reference_masks;
  std::optional<Eigen::MatrixXd> embedding;
};

// Seeds: dataset-embedding (O(2) rotation, line direction) and
// dataset-noise, both derived from spec.seed.
Dataset generate(const DatasetSpec& spec);

// max over y in X of #(X within closed ball(y, k h)) / k^d: the density
// constant of an h-rho set at scale k, measured on the sample itself.
double hrho_density(const PointCloud& x, double h, double k, int intrinsic_dim, const SketchMatrix& s);

}  // namespace mlop
