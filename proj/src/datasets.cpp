#include "mlop/datasets.hpp"

#include "mlop/errors.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

namespace mlop {

namespace {

constexpr double kPi = std::numbers::pi;

struct KindEntry {
  DatasetKind kind;
  std::string_view name;
  Index ambient_dim;
};

constexpr std::array<KindEntry, 6> kKinds{{
    {DatasetKind::kO2, "o2", 60},
    {DatasetKind::kConeSegment, "cone_segment", 60},
    {DatasetKind::kCylinder2d, "cylinder2d", 60},
    {DatasetKind::kCylinder6d, "cylinder6d", 60},
    {DatasetKind::kEllipseImages, "ellipse_images", kImageSide * kImageSide},
    {DatasetKind::kGridLine, "grid_line", 8},
}};

void require_count(Index count) {
  if (count < 2) throw ConfigError("sample count must be >= 2, got " + std::to_string(count));
}

Index reference_count(Index count, double density) {
  if (!(density >= 1.0)) throw ConfigError("reference_density must be >= 1");
  return static_cast<Index>(std::ceil(density * static_cast<double>(count)));
}

template <typename F>
PointCloud sample_grid(std::span<const Axis> axes, Index count, Index ambient_dim, F&& point_at) {
  const Matrix params = tensor_grid(axes, count);
  Matrix pts(count, ambient_dim);
  for (Index r = 0; r < count; ++r) pts.row(r) = point_at(params.row(r)).transpose();
  return PointCloud(std::move(pts), params);
}

// Leading coordinates as given, zero elsewhere (no normalisation).
Vector padded(Index ambient_dim, std::initializer_list<double> head) {
  Vector v = Vector::Zero(ambient_dim);
  Index k = 0;
  for (double x : head) v(k++) = x;
  return v;
}

}  // namespace

std::string_view kind_name(DatasetKind kind) {
  for (const auto& e : kKinds) {
    if (e.kind == kind) return e.name;
  }
  return "unknown";
}

DatasetKind parse_kind(std::string_view name) {
  for (const auto& e : kKinds) {
    if (e.name == name) return e.kind;
  }
  throw ConfigError("unknown dataset kind '" + std::string(name) + "'");
}

Index default_ambient_dim(DatasetKind kind) {
  for (const auto& e : kKinds) {
    if (e.kind == kind) return e.ambient_dim;
  }
  return 0;
}

void DatasetSpec::validate() const {
  require_count(count);
  if (!(noise >= 0.0)) throw ConfigError("noise must be non-negative");
  if (ambient_dim < 0) throw ConfigError("ambient_dim must be non-negative");
  if (!(reference_density >= 1.0)) throw ConfigError("reference_density must be >= 1");
  if (!(radius > 0.0)) throw ConfigError("radius must be positive");
  const Index n = resolved_ambient_dim();
  switch (kind) {
    case DatasetKind::kO2:
    case DatasetKind::kConeSegment:
      if (n < 4) throw ConfigError("this manifold needs ambient_dim >= 4");
      break;
    case DatasetKind::kCylinder2d:
      if (n < 4) throw ConfigError("cylinder2d needs ambient_dim >= 4");
      break;
    case DatasetKind::kCylinder6d:
      if (n < 7) throw ConfigError("cylinder6d needs ambient_dim >= 7");
      break;
    case DatasetKind::kEllipseImages:
      if (n != kImageSide * kImageSide) throw ConfigError("ellipse_images are fixed to R^400");
      break;
    case DatasetKind::kGridLine:
      if (n < 1) throw ConfigError("grid_line needs ambient_dim >= 1");
      break;
  }
}

void to_json(nlohmann::json& j, const DatasetSpec& s) {
  j = nlohmann::json{{"kind", kind_name(s.kind)},
                     {"count", s.count},
                     {"noise", s.noise},
                     {"ambient_dim", s.resolved_ambient_dim()},
                     {"seed", s.seed},
                     {"reference_density", s.reference_density},
                     {"radius", s.radius}};
}

void from_json(const nlohmann::json& j, DatasetSpec& s) {
  static const std::set<std::string> known{"kind", "count", "noise", "ambient_dim",
                                           "seed", "reference_density", "radius"};
  if (!j.is_object()) throw ConfigError("dataset spec must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown dataset key '" + key + "'");
  }
  try {
    s = DatasetSpec{};
    if (j.contains("kind")) s.kind = parse_kind(j.at("kind").get<std::string>());
    if (j.contains("count")) s.count = j.at("count").get<Index>();
    if (j.contains("noise")) s.noise = j.at("noise").get<double>();
    if (j.contains("ambient_dim")) s.ambient_dim = j.at("ambient_dim").get<Index>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("reference_density")) s.reference_density = j.at("reference_density").get<double>();
    if (j.contains("radius")) s.radius = j.at("radius").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("dataset spec: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Matrix tensor_grid(std::span<const Axis> axes, Index count) {
  const auto k = static_cast<Index>(axes.size());
  if (k < 1) throw ConfigError("tensor grid needs at least one axis");
  if (count < 1) throw ConfigError("tensor grid needs count >= 1");
  double volume = 1.0;
  for (const auto& a : axes) {
    if (!(a.extent > 0.0)) throw ConfigError("axis extent must be positive");
    volume *= a.extent;
  }
  const double spacing = std::pow(volume / static_cast<double>(count), 1.0 / static_cast<double>(k));
  std::vector<Index> counts(static_cast<std::size_t>(k));
  for (Index a = 0; a < k; ++a) {
    counts[static_cast<std::size_t>(a)] = std::max<Index>(1, std::llround(axes[static_cast<std::size_t>(a)].extent / spacing));
  }
  auto product = [&] {
    Index p = 1;
    for (Index c : counts) p *= c;
    return p;
  };
  auto coarseness = [&](Index a) {
    return axes[static_cast<std::size_t>(a)].extent / static_cast<double>(counts[static_cast<std::size_t>(a)]);
  };
  // Refine the coarsest axis until the grid is large enough ...
  while (product() < count) {
    Index worst = 0;
    for (Index a = 1; a < k; ++a) {
      if (coarseness(a) > coarseness(worst)) worst = a;
    }
    ++counts[static_cast<std::size_t>(worst)];
  }
  // ... then coarsen the finest axes while it stays large enough.
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<Index> order(static_cast<std::size_t>(k));
    for (Index a = 0; a < k; ++a) order[static_cast<std::size_t>(a)] = a;
    std::sort(order.begin(), order.end(), [&](Index x, Index y) { return coarseness(x) < coarseness(y); });
    for (Index a : order) {
      auto& c = counts[static_cast<std::size_t>(a)];
      if (c > 1 && product() / c * (c - 1) >= count) {
        --c;
        changed = true;
        break;
      }
    }
  }

  const Index total = product();
  Matrix out(count, k);
  for (Index r = 0; r < count; ++r) {
    // Evenly spaced flat indices; exact when total == count.
    Index flat = static_cast<Index>((static_cast<__int128>(r) * total) / count);
    for (Index a = k - 1; a >= 0; --a) {
      const auto sa = static_cast<std::size_t>(a);
      const Index c = counts[sa];
      const Index idx = flat % c;
      flat /= c;
      const double frac = c == 1 ? 0.5 : static_cast<double>(idx) / static_cast<double>(c - 1);
      out(r, a) = axes[sa].lo + (axes[sa].hi - axes[sa].lo) * frac;
    }
  }
  return out;
}

Vector o2_point(double theta, Index ambient_dim) {
  return padded(ambient_dim, {std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta)});
}

Vector cone_point(double t, double r, double u, Index ambient_dim) {
  const Vector v1 = padded(ambient_dim, {1, 1, 1, 1});
  const Vector v2 = padded(ambient_dim, {0, 1, -1, 0});
  const Vector v3 = padded(ambient_dim, {1, 0, 0, -1});
  return t * v1 + std::exp(-r * r) / std::sqrt(2.0) * (std::cos(u) * v2 + std::sin(u) * v3);
}

Vector cylinder2d_point(double t, double u, double radius, Index ambient_dim) {
  const Vector v1 = Vector::Ones(ambient_dim);
  const Vector v2 = padded(ambient_dim, {0, 1, -1, 0});
  const Vector v3 = padded(ambient_dim, {1, 0, 0, -1});
  return t * v1 + radius / std::sqrt(2.0) * (std::cos(u) * v2 + std::sin(u) * v3);
}

std::array<double, 6> sphere5_coords(std::span<const double, 5> u, double radius) {
  std::array<double, 6> x{};
  double sines = radius;
  for (std::size_t k = 0; k < 5; ++k) {
    x[k] = sines * std::cos(u[k]);
    sines *= std::sin(u[k]);
  }
  x[5] = sines;
  return x;
}

Vector cylinder6d_point(double t, std::span<const double, 5> u, double radius, Index ambient_dim) {
  constexpr Index kIntrinsic = 6;
  Vector p = Vector::Zero(ambient_dim);
  p.head(kIntrinsic + 1).setConstant(t);
  const auto x = sphere5_coords(u, radius);
  for (std::size_t k = 0; k < 6; ++k) p(static_cast<Index>(k)) += radius * radius * x[k];
  return p;
}

EllipseImage ellipse_image(double a, double b) {
  const Index side = kImageSide;
  const double centre = static_cast<double>(side) / 2.0;
  EllipseImage img{Vector(side * side), Vector(side * side)};
  for (Index row = 0; row < side; ++row) {
    for (Index col = 0; col < side; ++col) {
      const double x = (static_cast<double>(col) + 0.5 - centre) / a;
      const double y = (static_cast<double>(row) + 0.5 - centre) / b;
      const bool inside = x * x + y * y <= 1.0;
      img.pixels(row * side + col) = inside ? 0.0 : 1.0;
      img.background(row * side + col) = inside ? 0.0 : 1.0;
    }
  }
  return img;
}

// ---------------------------------------------------------------------------

ManifoldSample gen_o2(Index count, Rng& rng, double reference_density, Index ambient_dim) {
  require_count(count);
  Eigen::MatrixXd g(ambient_dim, ambient_dim);
  for (Index r = 0; r < ambient_dim; ++r) {
    for (Index c = 0; c < ambient_dim; ++c) g(r, c) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd a = qr.householderQ();
  // Sign fix on diag(R) makes A Haar-distributed.
  for (Index c = 0; c < ambient_dim; ++c) {
    if (qr.matrixQR()(c, c) < 0.0) a.col(c) *= -1.0;
  }

  auto ring = [&](Index n) {
    Matrix pts(n, ambient_dim);
    Matrix labels(n, 1);
    for (Index k = 0; k < n; ++k) {
      // [-pi, pi) so that the periodic endpoint is not duplicated.
      const double theta = -kPi + 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
      labels(k, 0) = theta;
      pts.row(k) = (a * o2_point(theta, ambient_dim)).transpose();
    }
    return PointCloud(std::move(pts), std::move(labels));
  };
  return {ring(count), ring(reference_count(count, reference_density)), std::nullopt, std::nullopt, a};
}

ManifoldSample gen_cone_segment(Index count, double reference_density, Index ambient_dim) {
  require_count(count);
  // Embedded lengths: |v1| = 2; the radial factor spans ~1; the angular arc
  // uses the mean radius of exp(-R^2) over [0, 2.5].
  const std::array<Axis, 3> axes{{{0.0, 2.0, 4.0}, {0.0, 2.5, 1.0}, {0.1 * kPi, 1.5 * kPi, 1.4 * kPi * 0.354}}};
  auto at = [&](const auto& prm) { return cone_point(prm(0), prm(1), prm(2), ambient_dim); };
  return {sample_grid(axes, count, ambient_dim, at),
          sample_grid(axes, reference_count(count, reference_density), ambient_dim, at), {}, {}, {}};
}

ManifoldSample gen_cylinder2d(Index count, double radius, double reference_density, Index ambient_dim) {
  require_count(count);
  const double n = static_cast<double>(ambient_dim);
  const std::array<Axis, 2> axes{{{0.0, 2.0, 2.0 * std::sqrt(n)}, {0.1 * kPi, 1.5 * kPi, 1.4 * kPi * radius}}};
  auto at = [&](const auto& prm) { return cylinder2d_point(prm(0), prm(1), radius, ambient_dim); };
  return {sample_grid(axes, count, ambient_dim, at),
          sample_grid(axes, reference_count(count, reference_density), ambient_dim, at), {}, {}, {}};
}

ManifoldSample gen_cylinder6d(Index count, double reference_density, Index ambient_dim) {
  require_count(count);
  constexpr double kRadius = 1.5;
  const double arc = 0.5 * kPi * kRadius * kRadius * kRadius;
  std::array<Axis, 6> axes{};
  axes[0] = {0.0, 2.0, 2.0 * std::sqrt(7.0)};
  for (std::size_t k = 1; k < 6; ++k) axes[k] = {0.1 * kPi, 0.6 * kPi, arc};
  auto at = [&](const auto& prm) {
    const std::array<double, 5> u{prm(1), prm(2), prm(3), prm(4), prm(5)};
    return cylinder6d_point(prm(0), u, kRadius, ambient_dim);
  };
  return {sample_grid(axes, count, ambient_dim, at),
          sample_grid(axes, reference_count(count, reference_density), ambient_dim, at), {}, {}, {}};
}

ManifoldSample gen_ellipse_images(Index count, double reference_density) {
  require_count(count);
  const Index pixels = kImageSide * kImageSide;
  const std::array<Axis, 2> axes{{{3.0, 8.0, 5.0}, {3.0, 8.0, 5.0}}};
  auto images = [&](Index n) {
    const Matrix radii = tensor_grid(axes, n);
    Matrix pts(n, pixels);
    Matrix masks(n, pixels);
    for (Index r = 0; r < n; ++r) {
      const EllipseImage img = ellipse_image(radii(r, 0), radii(r, 1));
      pts.row(r) = img.pixels.transpose();
      masks.row(r) = img.background.transpose();
    }
    return std::pair{PointCloud(std::move(pts), radii), std::move(masks)};
  };
  auto [clean, masks] = images(count);
  auto [reference, reference_masks] = images(reference_count(count, reference_density));
  return {std::move(clean), std::move(reference), std::move(masks), std::move(reference_masks), std::nullopt};
}

ManifoldSample gen_grid_line(Index count, Index ambient_dim, Rng& rng, double reference_density) {
  require_count(count);
  Vector origin(ambient_dim);
  Vector direction(ambient_dim);
  for (Index k = 0; k < ambient_dim; ++k) origin(k) = rng.uniform(-1.0, 1.0);
  do {
    for (Index k = 0; k < ambient_dim; ++k) direction(k) = rng.normal();
  } while (direction.norm() == 0.0);
  direction.normalize();
  auto line = [&](Index n) {
    Matrix pts(n, ambient_dim);
    Matrix labels(n, 1);
    for (Index k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(n - 1);
      labels(k, 0) = t;
      pts.row(k) = (origin + t * direction).transpose();
    }
    return PointCloud(std::move(pts), std::move(labels));
  };
  return {line(count), line(reference_count(count, reference_density)), {}, {}, {}};
}

PointCloud gen_grid_plane(Index rows, Index cols, double spacing, Index ambient_dim) {
  if (rows < 1 || cols < 1 || ambient_dim < 2) throw ConfigError("grid plane needs rows, cols >= 1 and n >= 2");
  Matrix pts = Matrix::Zero(rows * cols, ambient_dim);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      pts(r * cols + c, 0) = spacing * static_cast<double>(c);
      pts(r * cols + c, 1) = spacing * static_cast<double>(r);
    }
  }
  return PointCloud(std::move(pts));
}

PointCloud add_uniform_noise(const PointCloud& p, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw ConfigError("noise magnitude must be non-negative");
  if (sigma == 0.0) return p;
  Matrix pts = p.points();
  for (Index i = 0; i < pts.rows(); ++i) {
    for (Index k = 0; k < pts.cols(); ++k) pts(i, k) += rng.uniform(-sigma, sigma);
  }
  return p.has_labels() ? PointCloud(std::move(pts), p.labels()) : PointCloud(std::move(pts));
}

PointCloud add_gaussian_noise(const PointCloud& p, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw ConfigError("noise magnitude must be non-negative");
  if (sigma == 0.0) return p;
  Matrix pts = p.points();
  for (Index i = 0; i < pts.rows(); ++i) {
    for (Index k = 0; k < pts.cols(); ++k) pts(i, k) += sigma * rng.normal();
  }
  return p.has_labels() ? PointCloud(std::move(pts), p.labels()) : PointCloud(std::move(pts));
}

Dataset generate(const DatasetSpec& spec) {
  spec.validate();
  const Index n = spec.resolved_ambient_dim();
  Rng embed_rng(derive_seed(spec.seed, seed_tag::kDatasetEmbedding));
  Rng noise_rng(derive_seed(spec.seed, seed_tag::kDatasetNoise));

  ManifoldSample s = [&]() -> ManifoldSample {
    switch (spec.kind) {
      case DatasetKind::kO2:
        return gen_o2(spec.count, embed_rng, spec.reference_density, n);
      case DatasetKind::kConeSegment:
        return gen_cone_segment(spec.count, spec.reference_density, n);
      case DatasetKind::kCylinder2d:
        return gen_cylinder2d(spec.count, spec.radius, spec.reference_density, n);
      case DatasetKind::kCylinder6d:
        return gen_cylinder6d(spec.count, spec.reference_density, n);
      case DatasetKind::kEllipseImages:
        return gen_ellipse_images(spec.count, spec.reference_density);
      case DatasetKind::kGridLine:
        return gen_grid_line(spec.count, n, embed_rng, spec.reference_density);
    }
    throw ConfigError("unhandled dataset kind");
  }();

  PointCloud noisy = spec.kind == DatasetKind::kEllipseImages ? add_gaussian_noise(s.clean, spec.noise, noise_rng)
                                                              : add_uniform_noise(s.clean, spec.noise, noise_rng);
  return Dataset{spec,
                 std::move(noisy),
                 std::move(s.clean),
                 std::move(s.reference),
                 std::move(s.masks),
                 std::move(s.reference_masks),
                 std::move(s.embedding)};
}

double hrho_density(const PointCloud& x, double h, double k, int intrinsic_dim, const SketchMatrix& s) {
  if (!(h > 0.0) || !(k >= 1.0) || intrinsic_dim < 1) throw ConfigError("hrho_density needs h > 0, k >= 1, d >= 1");
  const Matrix xp = s.project_rows(x.points());
  const double r = k * h;
  Index best = 0;
  for (Index i = 0; i < xp.rows(); ++i) {
    Index c = 0;
    for (Index j = 0; j < xp.rows(); ++j) {
      if ((xp.row(i) - xp.row(j)).norm() <= r) ++c;
    }
    best = std::max(best, c);
  }
  return static_cast<double>(best) / std::pow(k, intrinsic_dim);
}

}  // namespace mlop
