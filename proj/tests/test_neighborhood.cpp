#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mlop/datasets.hpp"
#include "mlop/errors.hpp"
#include "mlop/neighborhood.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace mlop;

namespace {

PointCloud line_points(std::vector<double> xs) {
  Matrix m(static_cast<Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) m(static_cast<Index>(i), 0) = xs[i];
  return PointCloud(m);
}

// Number of P points within the closed ball of radius r around q, not
// counting one P point that coincides with q.
Index oracle_count(const Matrix& p, const Vector& q, double r, const Eigen::MatrixXd& s) {
  Index count = 0;
  bool skipped = false;
  for (Index j = 0; j < p.rows(); ++j) {
    if (!skipped && p.row(j).transpose() == q) {
      skipped = true;
      continue;
    }
    if (testutil::oracle_dist(s, q, p.row(j).transpose()) <= r) ++count;
  }
  return count;
}

// Smallest radius >= h0 at which every q sees nu points: scan every candidate
// radius (all pairwise distances plus h0) in increasing order and return the
// first for which the quantifier holds.
double oracle_h_hat0(const Matrix& p, const Matrix& q, double h0, Index nu, const Eigen::MatrixXd& s) {
  std::vector<double> candidates{h0};
  for (Index i = 0; i < q.rows(); ++i) {
    for (Index j = 0; j < p.rows(); ++j) {
      const double d = testutil::oracle_dist(s, q.row(i).transpose(), p.row(j).transpose());
      if (d >= h0) candidates.push_back(d);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  for (double r : candidates) {
    bool all = true;
    for (Index i = 0; i < q.rows() && all; ++i) all = oracle_count(p, q.row(i).transpose(), r, s) >= nu;
    if (all) return r;
  }
  return -1.0;
}

}  // namespace

TEST_CASE("fill distance of small hand examples") {
  const SketchMatrix id = SketchMatrix::identity(1);
  CHECK(fill_distance(line_points({0, 1, 3}), id) == 1.0);
  CHECK(fill_distance(line_points({0, 2.5}), id) == 2.5);
  CHECK(fill_distance(line_points({0, 0.5, 1.0, 1.5, 2.0, 2.5}), id) == doctest::Approx(0.5));
  // Even count: nearest distances {1, 1, 2, 2} -> 1.5.
  CHECK(fill_distance(line_points({0, 1, 5, 7}), id) == 1.5);
  CHECK_THROWS_AS(fill_distance(line_points({4}), id), ConfigError);
}

TEST_CASE("fill distance on a uniform grid equals the spacing") {
  const PointCloud g = gen_grid_plane(7, 9, 0.37, 5);
  CHECK(fill_distance(g, SketchMatrix::identity(5)) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("fill distance matches the brute-force oracle and is permutation and translation invariant") {
  for (unsigned seed = 0; seed < 5; ++seed) {
    Matrix m = testutil::random_matrix(37, 6, seed);
    const SketchMatrix id = SketchMatrix::identity(6);
    const double f = fill_distance(PointCloud(m), id);
    CHECK(f == doctest::Approx(testutil::oracle_fill(m, testutil::eye(6))).epsilon(1e-12));

    std::vector<Index> perm(37);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), std::mt19937(seed));
    CHECK(fill_distance(PointCloud(m).subset(perm), id) == doctest::Approx(f).epsilon(1e-12));

    Matrix shifted = m;
    shifted.rowwise() += Eigen::RowVectorXd::Constant(6, 3.25);
    CHECK(fill_distance(PointCloud(shifted), id) == doctest::Approx(f).epsilon(1e-10));
  }
}

TEST_CASE("guarantee radius on a 1-D grid: end points need two steps") {
  const PointCloud grid = line_points({0, 1, 2, 3, 4, 5, 6, 7});
  const SketchMatrix id = SketchMatrix::identity(1);
  const GuaranteeRadius r = guarantee_radius(grid, grid, 1.0, 2, id);
  CHECK(r.c1 == doctest::Approx(2.0));
  CHECK(r.h_hat0 == doctest::Approx(2.0));
  // Interior points alone are satisfied at c = 1.
  const PointCloud interior = line_points({1, 2, 3, 4, 5, 6});
  CHECK(guarantee_radius(grid, interior, 1.0, 2, id).c1 == doctest::Approx(1.0));
}

TEST_CASE("guarantee radius is one when every q has a P neighbour within h0") {
  const PointCloud p = line_points({0, 0.75, 2.0, 3.0, 4.0});
  const PointCloud q = line_points({0, 2.0, 4.0});
  CHECK(guarantee_radius(p, q, 1.0, 1, SketchMatrix::identity(1)).c1 == 1.0);
}

TEST_CASE("a far-away q makes the support unreachable") {
  const PointCloud p = line_points({0, 1, 2});
  const PointCloud q = line_points({0, 1000});
  CHECK_THROWS_AS(guarantee_radius(p, q, 1.0, 1, SketchMatrix::identity(1)), UnreachableSupportError);
  CHECK_THROWS_AS(guarantee_radius(p, p, 1.0, 3, SketchMatrix::identity(1)), UnreachableSupportError);
}

TEST_CASE("guarantee radius matches the brute-force scan on random instances") {
  for (unsigned seed = 0; seed < 8; ++seed) {
    const Matrix pm = testutil::random_matrix(40, 3, 100 + seed);
    std::vector<Index> idx;
    for (Index i = 0; i < 40; i += 4) idx.push_back(i);
    const PointCloud p(pm);
    const PointCloud q = p.subset(idx);
    const SketchMatrix id = SketchMatrix::identity(3);
    const double h0 = fill_distance(p, id);
    double prev = 0.0;
    for (Index nu : {1, 2, 4, 7}) {
      const GuaranteeRadius r = guarantee_radius(p, q, h0, nu, id);
      CHECK(r.h_hat0 == doctest::Approx(oracle_h_hat0(pm, q.points(), h0, nu, testutil::eye(3))).epsilon(1e-12));
      CHECK(r.c1 >= 1.0);
      CHECK(r.c1 >= prev);  // monotone in nu
      prev = r.c1;
    }
  }
}

TEST_CASE("predicted support counts") {
  CHECK(predicted_support_count(2, 5) == 40);
  CHECK(predicted_support_count(1, 1) == 2);
  CHECK(predicted_support_count(3, 2) == 45);
  CHECK_THROWS_AS(predicted_support_count(0, 1), ConfigError);
}

TEST_CASE("count_within counts the closed ball") {
  const PointCloud p = line_points({0, 1, 2, 3});
  Vector c(1);
  c << 1.0;
  CHECK(count_within(p, c, 1.0, SketchMatrix::identity(1)) == 3);
  CHECK(count_within(p, c, 0.999, SketchMatrix::identity(1)) == 1);
}

TEST_CASE("support estimation: nu, the defining quantifier and the h2 scale") {
  const PointCloud p = gen_grid_plane(30, 30, 1.0, 4);
  const SketchMatrix id = SketchMatrix::identity(4);
  for (Index i_size : {900, 180, 100}) {
    Rng pick(i_size);
    const auto sel = pick.sample_without_replacement(900, static_cast<std::size_t>(i_size));
    const std::vector<Index> idx(sel.begin(), sel.end());
    const PointCloud q0 = p.subset(idx);
    Rng rng(5);
    const SupportParams s = estimate_supports(p, q0, id, rng);
    CHECK(s.nu == 900 / i_size);
    CHECK(s.h0 == doctest::Approx(1.0));
    CHECK(s.h1 == s.h_hat0);
    CHECK(s.h_hat0 >= s.h0);
    for (Index i = 0; i < q0.size(); ++i) {
      CHECK(oracle_count(p.points(), q0.point(i), s.h1, testutil::eye(4)) >= s.nu);
    }
    CHECK(s.h2 <= 2.0 * s.h1);
    CHECK(s.h2 >= 0.5 * s.h1);
  }
}

TEST_CASE("816 points with 163 reconstruction points gives nu = 5") {
  const ManifoldSample m = gen_cylinder2d(816);
  std::vector<Index> idx(163);
  std::iota(idx.begin(), idx.end(), Index{0});
  for (auto& v : idx) v *= 5;
  Rng rng(1);
  const SupportParams s = estimate_supports(m.clean, m.clean.subset(idx), SketchMatrix::identity(60), rng);
  CHECK(s.nu == 5);
}

TEST_CASE("interior support count on a grid is close to the predicted count") {
  const PointCloud p = gen_grid_plane(40, 40, 1.0, 3);
  const SketchMatrix id = SketchMatrix::identity(3);
  const Index nu = 5;
  // Interior q's only, so that the boundary does not inflate h_hat0.
  std::vector<Index> idx;
  for (Index r = 5; r < 35; r += 3) {
    for (Index c = 5; c < 35; c += 3) idx.push_back(r * 40 + c);
  }
  const PointCloud q = p.subset(idx);
  const GuaranteeRadius g = guarantee_radius(p, q, fill_distance(p, id), nu, id);
  const double radius = 2.0 * std::sqrt(2.0) * g.h_hat0;
  const double predicted = static_cast<double>(predicted_support_count(2, nu));
  for (Index i = 0; i < q.size(); ++i) {
    const double count = static_cast<double>(oracle_count(p.points(), q.point(i), radius, testutil::eye(3)));
    CHECK(count <= 2.0 * predicted);
    CHECK(count >= 0.5 * predicted);
  }
}
