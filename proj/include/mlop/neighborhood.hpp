#pragma once

#include "mlop/core.hpp"
#include "mlop/rng.hpp"
#include "mlop/sketch.hpp"

#include "json.hpp"

namespace mlop {

// Support geometry of the reconstruction.
//
//   h0      median nearest-neighbour distance of P (fill distance)
//   nu      floor(J / I): P points each reconstruction point serves
//   c1      smallest c >= 1 with >= nu P points within c*h0 of every q
//   h_hat0  c1 * h0
//   h1      attraction support (= h_hat0 for the pair (P, Q0))
//   h2      repulsion support (= h_hat0 for a random I-subset of P paired
//           with itself, nu = 1)
//
// The weight functions are only evaluated up to cutoff_mult * h, where the
// Gaussian has decayed below e^-8. Supports are assumed to stay below the
// reach of the underlying manifold; that is not checked.
struct SupportParams {
  double h0 = 0.0;
  Index nu = 0;
  double c1 = 0.0;
  double h_hat0 = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
};

void to_json(nlohmann::json& j, const SupportParams& s);

// Median over points of the sketched distance to the nearest other point.
// Even counts take the mean of the two central values. Needs >= 2 points.
double fill_distance(const PointCloud& x, const SketchMatrix& s);
double fill_distance_projected(const Matrix& projected);

struct GuaranteeRadius {
  double c1;
  double h_hat0;
};

// Smallest c >= 1 such that the closed sketched ball of radius c*h0 around
// every q contains at least nu points of P. A q never counts itself: one P
// point with coordinates identical to q is excluded.
//
// The minimiser is computed exactly: it is the largest nu-th neighbour
// distance over Q (floored at h0), so h_hat0 is returned as that distance
// and the defining condition holds at radius h_hat0 without rounding slack.
// Throws UnreachableSupportError when the required c exceeds c_max or some
// q has fewer than nu candidates.
GuaranteeRadius guarantee_radius(const PointCloud& p, const PointCloud& q, double h0, Index nu,
                                 const SketchMatrix& s, double c_max = 64.0);

// h1 from (P, Q0); h2 from a uniform I-subset of P drawn from rng.
SupportParams estimate_supports(const PointCloud& p, const PointCloud& q0, const SketchMatrix& s,
                                Rng& rng);

// floor(2^{1.5 d} nu): expected number of P points within 2*sqrt(2)*h_hat0
// for a d-dimensional manifold. Diagnostic only.
Index predicted_support_count(int intrinsic_dim, Index nu);

// Number of points of x within the closed sketched ball of radius r around
// `center` (in ambient coordinates).
Index count_within(const PointCloud& x, const VectorRef& center, double r, const SketchMatrix& s);

}  // namespace mlop
