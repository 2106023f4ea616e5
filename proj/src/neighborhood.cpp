#include "mlop/neighborhood.hpp"

#include "mlop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace mlop {

void to_json(nlohmann::json& j, const SupportParams& s) {
  j = nlohmann::json{{"h0", s.h0}, {"nu", s.nu},   {"c1", s.c1},
                     {"h_hat0", s.h_hat0}, {"h1", s.h1}, {"h2", s.h2}};
}

namespace {

double median_in_place(std::vector<double>& v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

double fill_distance_projected(const Matrix& projected) {
  const Index count = projected.rows();
  if (count < 2) throw ConfigError("fill distance needs at least two points");
  std::vector<double> nearest(static_cast<std::size_t>(count), std::numeric_limits<double>::infinity());
  for (Index i = 0; i < count; ++i) {
    for (Index k = i + 1; k < count; ++k) {
      const double d2 = (projected.row(i) - projected.row(k)).squaredNorm();
      auto& ni = nearest[static_cast<std::size_t>(i)];
      auto& nk = nearest[static_cast<std::size_t>(k)];
      ni = std::min(ni, d2);
      nk = std::min(nk, d2);
    }
  }
  for (double& d : nearest) d = std::sqrt(d);
  return median_in_place(nearest);
}

double fill_distance(const PointCloud& x, const SketchMatrix& s) {
  if (x.size() < 2) throw ConfigError("fill distance needs at least two points");
  return fill_distance_projected(s.project_rows(x.points()));
}

GuaranteeRadius guarantee_radius(const PointCloud& p, const PointCloud& q, double h0, Index nu,
                                 const SketchMatrix& s, double c_max) {
  if (nu < 1) throw ConfigError("nu must be >= 1");
  if (!(h0 > 0.0)) throw ConfigError("h0 must be positive");
  if (p.dim() != q.dim()) throw ConfigError("P and Q live in different ambient dimensions");

  const Matrix pp = s.project_rows(p.points());
  const Matrix qp = s.project_rows(q.points());
  const auto k = static_cast<std::size_t>(nu);

  double required = h0;
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(p.size()));
  for (Index i = 0; i < q.size(); ++i) {
    dists.clear();
    bool self_skipped = false;
    for (Index j = 0; j < p.size(); ++j) {
      const double d = projected_dist(qp, i, pp, j);
      // Identical coordinates project identically, so only exact zeros can be q itself.
      if (d == 0.0 && !self_skipped && p.points().row(j) == q.points().row(i)) {
        self_skipped = true;
        continue;
      }
      dists.push_back(d);
    }
    if (dists.size() < k) {
      throw UnreachableSupportError("point " + std::to_string(i) + " of Q has only " +
                                    std::to_string(dists.size()) + " candidate neighbours, needs " +
                                    std::to_string(nu));
    }
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k - 1), dists.end());
    required = std::max(required, dists[k - 1]);
  }
  const double c1 = required / h0;
  if (c1 > c_max) {
    throw UnreachableSupportError("support multiplier " + std::to_string(c1) + " exceeds c_max " +
                                  std::to_string(c_max));
  }
  return {c1, required};
}

SupportParams estimate_supports(const PointCloud& p, const PointCloud& q0, const SketchMatrix& s,
                                Rng& rng) {
  const Index j = p.size();
  const Index i = q0.size();
  if (i < 1 || i > j) throw ConfigError("estimate_supports needs 1 <= I <= J");

  SupportParams out;
  out.h0 = fill_distance(p, s);
  out.nu = j / i;
  const auto attraction = guarantee_radius(p, q0, out.h0, out.nu, s);
  out.c1 = attraction.c1;
  out.h_hat0 = attraction.h_hat0;
  out.h1 = attraction.h_hat0;

  if (i < 2) {
    // A single reconstruction point has no repulsion partner.
    out.h2 = out.h1;
    return out;
  }
  const auto picks = rng.sample_without_replacement(static_cast<std::size_t>(j), static_cast<std::size_t>(i));
  std::vector<Index> idx(picks.begin(), picks.end());
  const PointCloud q_rand = p.subset(idx);
  const double h0_rand = fill_distance(q_rand, s);
  if (!(h0_rand > 0.0)) throw UnreachableSupportError("random Q sample has zero fill distance");
  out.h2 = guarantee_radius(q_rand, q_rand, h0_rand, 1, s).h_hat0;
  return out;
}

Index predicted_support_count(int intrinsic_dim, Index nu) {
  if (intrinsic_dim < 1 || nu < 1) throw ConfigError("predicted_support_count needs d >= 1, nu >= 1");
  return static_cast<Index>(std::floor(std::pow(2.0, 1.5 * intrinsic_dim) * static_cast<double>(nu)));
}

Index count_within(const PointCloud& x, const VectorRef& center, double r, const SketchMatrix& s) {
  const Matrix xp = s.project_rows(x.points());
  const Vector c = s.project(center);
  Index count = 0;
  for (Index j = 0; j < xp.rows(); ++j) {
    if ((xp.row(j).transpose() - c).norm() <= r) ++count;
  }
  return count;
}

}  // namespace mlop
