#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mlop/datasets.hpp"
#include "mlop/errors.hpp"
#include "mlop/solver.hpp"
#include "scenarios.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mlop;

namespace {

using scenarios::Instance;
using scenarios::kernel;
using scenarios::random_instance;
using scenarios::worst_relative_fd_error;

SolverConfig line_config(Index q_size) {
  SolverConfig c;
  c.q_size = q_size;
  c.sketch_dim = 8;
  c.max_iters = 60;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("H_eps norm") {
  const SketchMatrix id = SketchMatrix::identity(2);
  CHECK(h_eps_norm(Vector::Zero(2), 0.1, id) == doctest::Approx(0.31623).epsilon(1e-5));
  Vector v(2);
  v << 3.0, 0.0;
  CHECK(h_eps_norm(v, 0.1, id) == doctest::Approx(3.01662).epsilon(1e-5));
  CHECK(h_eps_norm(v, 1e-14, id) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("eta and its derivative") {
  CHECK(eta(1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(eta_abs_deriv(1.0) == doctest::Approx(1.0));
  CHECK(eta(2.0) == doctest::Approx(1.0 / 24.0));
  CHECK(eta_abs_deriv(2.0) == doctest::Approx(1.0 / 16.0));
  CHECK_THROWS_AS(eta(1e-15), CoincidentPointsError);
  CHECK_THROWS_AS(eta_abs_deriv(0.0), CoincidentPointsError);
}

TEST_CASE("literal attraction coefficient examples") {
  KernelParams k = kernel(1.0, 1.0, 0.0, AttractionModel::kLiteral);
  CHECK(attraction_weight(1.0, k) == doctest::Approx(-std::exp(-1.0)).epsilon(1e-12));
  // Root of the bracket: H_eps distance h1 / sqrt(2).
  k.eps = 0.1;
  const double d_root = std::sqrt(0.5 - 0.1);
  CHECK(std::abs(attraction_weight(d_root, k)) < 1e-14);
  CHECK(attraction_weight(0.0, k) == doctest::Approx(0.8 / std::sqrt(0.1)).epsilon(1e-12));
  CHECK(attraction_weight(0.0, k) == doctest::Approx(2.5298).epsilon(1e-4));
}

TEST_CASE("frozen-weight attraction coefficient and cutoff") {
  const KernelParams k = kernel(1.0, 1.0, 0.1);
  CHECK(attraction_weight(0.0, k) == doctest::Approx(1.0 / std::sqrt(0.1)));
  CHECK(attraction_weight(1.0, k) == doctest::Approx(std::exp(-1.0) / std::sqrt(1.1)));
  CHECK(attraction_weight(2.9, k) == 0.0);  // beyond 2 sqrt(2) h1
  CHECK(attraction_weight(2.8, k) > 0.0);
}

TEST_CASE("repulsion coefficient") {
  const KernelParams k = kernel(1.0, 1.0, 0.1);
  CHECK(repulsion_weight(1.0, k) == doctest::Approx(5.0 / 3.0 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(repulsion_weight(1.0, k) == doctest::Approx(0.61313).epsilon(1e-5));
  for (double d : {0.01, 0.3, 1.0, 2.0, 2.8}) CHECK(repulsion_weight(d, k) > 0.0);
  CHECK(repulsion_weight(10.0, k) == 0.0);
  CHECK_THROWS_AS(repulsion_weight(1e-12, k), CoincidentPointsError);
}

TEST_CASE("coefficients read sketched distances") {
  const PointCloud p(testutil::random_matrix(30, 12, 2));
  Rng rng(1);
  const SketchMatrix s = build_sketch(p, 4, rng);
  const KernelParams k = kernel(1.3, 0.9, 0.1);
  const Vector a = p.point(0), b = p.point(1);
  const double d = testutil::oracle_dist(s.matrix(), a, b);
  CHECK(attraction_coeff(a, b, k, s) == doctest::Approx(attraction_weight(d, k)).epsilon(1e-12));
  CHECK(repulsion_coeff(a, b, k, s) == doctest::Approx(repulsion_weight(d, k)).epsilon(1e-12));
}

TEST_CASE("gradient vanishes for a single coincident pair") {
  Matrix one = Matrix::Zero(1, 3);
  one << 0.5, -1.0, 2.0;
  const PointCloud p(one);
  const SketchMatrix id = SketchMatrix::identity(3);
  for (auto model : {AttractionModel::kFrozenWeight, AttractionModel::kLiteral}) {
    const Objective obj(p, id, kernel(1.0, 1.0, 0.1, model));
    const GradientTerms t = obj.terms(0, one, one);
    CHECK(t.attraction.norm() == 0.0);
    CHECK(t.repulsion.norm() == 0.0);
    CHECK(balance_lambda(t, id) == 0.0);
  }
}

TEST_CASE("gradient vanishes at the centre of a symmetric configuration") {
  const Index n = 4;
  Matrix ring(8, n);
  ring.setZero();
  for (Index k = 0; k < 8; ++k) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / 8.0;
    ring(k, 0) = std::cos(a);
    ring(k, 1) = std::sin(a);
  }
  Matrix q = Matrix::Zero(5, n);
  for (Index k = 0; k < 4; ++k) q.row(k + 1) = 0.5 * ring.row(2 * k);
  const PointCloud p(ring);
  const SketchMatrix id = SketchMatrix::identity(n);
  for (auto model : {AttractionModel::kFrozenWeight, AttractionModel::kLiteral}) {
    const Objective obj(p, id, kernel(1.0, 1.0, 0.1, model));
    const GradientTerms t = obj.terms(0, q, q);
    CHECK(combine_gradient(t, -0.7).norm() < 1e-12);
  }
}

TEST_CASE("analytic gradient matches central differences of the per-point cost") {
  for (auto model : {AttractionModel::kFrozenWeight, AttractionModel::kLiteral}) {
    double worst = 0.0;
    for (unsigned seed = 0; seed < 20; ++seed) worst = std::max(worst, worst_relative_fd_error(model, seed));
    MESSAGE("model " << std::string(model == AttractionModel::kLiteral ? "literal" : "frozen-weight")
                     << ": worst relative error " << worst);
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("frozen-weight potential: radial derivative and zero at the cutoff") {
  // E1 for a single (q, p) pair as a function of their distance r.
  const KernelParams k = kernel(0.8, 1.0, 0.1);
  Matrix pm = Matrix::Zero(1, 2);
  const PointCloud p(pm);
  const SketchMatrix id = SketchMatrix::identity(2);
  const Objective obj(p, id, k);
  auto energy = [&](double r) {
    Matrix q = Matrix::Zero(1, 2);
    q(0, 0) = r;
    return obj.attraction_energy(q, q);
  };
  const double cut = k.cutoff_mult * k.h1;
  CHECK(std::abs(energy(cut - 1e-12)) < 1e-9);
  CHECK(energy(cut + 1e-6) == 0.0);
  for (double r : {0.05, 0.4, 1.0, 2.0}) {
    const double h = 1e-6;
    const double radial = (energy(r + h) - energy(r - h)) / (2.0 * h);
    CHECK(radial == doctest::Approx(attraction_weight(r, k) * r).epsilon(1e-7));
  }
  CHECK(energy(0.0) < energy(1.0));  // grows with distance
}

TEST_CASE("balance at initialisation") {
  GradientTerms equal{Vector::Ones(3), -Vector::Ones(3), 0.0, 0.0};
  CHECK(balance_lambda(equal, SketchMatrix::identity(3)) == -1.0);
  GradientTerms no_pull{Vector::Zero(3), Vector::Ones(3), 0.0, 0.0};
  CHECK(balance_lambda(no_pull, SketchMatrix::identity(3)) == 0.0);
  GradientTerms isolated{Vector::Ones(3), Vector::Zero(3), 0.0, 0.0};
  CHECK(balance_lambda(isolated, SketchMatrix::identity(3)) == 0.0);

  for (unsigned seed = 0; seed < 10; ++seed) {
    const Instance inst = random_instance(seed, 20, 60, 12);
    const PointCloud& p = inst.p;
    Rng rng(seed);
    const SketchMatrix s = build_sketch(p, 6, rng);
    const SupportParams sp = estimate_supports(p, PointCloud(inst.q), s, rng);
    const Objective obj(p, s, kernel(sp.h1, sp.h2, 0.1));
    const std::vector<double> lambda = init_lambda(obj, inst.q);
    const Matrix qp = s.project_rows(inst.q);
    for (Index i = 0; i < inst.q.rows(); ++i) {
      const GradientTerms t = obj.terms(i, inst.q, qp);
      const double l = lambda[static_cast<std::size_t>(i)];
      CHECK(l <= 0.0);
      const double a = sketched_norm(s, t.attraction);
      const double r = std::abs(l) * sketched_norm(s, t.repulsion);
      if (a > 0.0 && r > 0.0) CHECK(std::abs(a - r) <= 1e-10 * std::max(1.0, a));
    }
  }
}

TEST_CASE("Barzilai-Borwein step") {
  const StepRule rule{0.1, 1e-3, 10.0};
  Vector dg(3);
  dg << 1.0, -2.0, 0.5;
  CHECK(bb_step(dg, dg, rule) == doctest::Approx(1.0));
  CHECK(bb_step(2.0 * dg, dg, rule) == doctest::Approx(2.0));
  CHECK(bb_step(dg, Vector::Zero(3), rule) == 0.1);
  CHECK(bb_step(-dg, dg, rule) == 0.1);
  CHECK(bb_step(100.0 * dg, dg, rule) == 10.0);
  CHECK(bb_step(1e-6 * dg, dg, rule) == 1e-3);
}

TEST_CASE("cost of a single coincident pair and linearity in lambda") {
  Matrix one(1, 2);
  one << 1.0, 2.0;
  const PointCloud p(one);
  const SketchMatrix id = SketchMatrix::identity(2);
  const Objective literal(p, id, kernel(1.0, 1.0, 0.1, AttractionModel::kLiteral));
  CHECK(literal.cost(one, std::span<const double>{}) == doctest::Approx(std::sqrt(0.1)).epsilon(1e-12));
  CHECK(literal.cost(one, std::span<const double>{}) == doctest::Approx(0.31623).epsilon(1e-5));

  const Instance inst = random_instance(4);
  const SketchMatrix id8 = SketchMatrix::identity(8);
  const Objective obj(inst.p, id8, kernel(1.5, 1.5, 0.1));
  std::vector<double> lambda = init_lambda(obj, inst.q);
  const double e1 = obj.cost(inst.q, std::span<const double>{});
  const double g1 = obj.cost(inst.q, lambda);
  for (double& l : lambda) l *= 2.0;
  const double g2 = obj.cost(inst.q, lambda);
  CHECK(g2 - e1 == doctest::Approx(2.0 * (g1 - e1)).epsilon(1e-12));
}

TEST_CASE("cost decreases over the first iterations on a noise-free line") {
  Rng rng(2);
  const ManifoldSample line = gen_grid_line(60, 8, rng);
  SolverConfig c = line_config(30);
  c.max_iters = 11;
  const RunResult r = run(line.clean, c);
  REQUIRE(r.trace.size() >= 11);
  int increases = 0;
  for (std::size_t k = 1; k < 11; ++k) increases += r.trace[k].cost > r.trace[k - 1].cost ? 1 : 0;
  MESSAGE("cost increases in the first 10 steps: " << increases);
  CHECK(increases <= 2);
}

TEST_CASE("reconstruction of a noise-free line stays on the line") {
  Rng rng(7);
  const ManifoldSample line = gen_grid_line(80, 8, rng);
  const Matrix& pts = line.clean.points();
  const Vector origin = pts.row(0).transpose();
  const Vector dir = (pts.row(pts.rows() - 1).transpose() - origin).normalized();
  const SolverConfig c = line_config(40);
  const RunResult r = run(line.clean, c);
  const double h0 = r.supports.h0;
  double worst = 0.0;
  for (Index i = 0; i < r.q_final.size(); ++i) {
    const Vector v = r.q_final.point(i) - origin;
    worst = std::max(worst, (v - v.dot(dir) * dir).norm());
  }
  CHECK(worst < 1e-3 * h0);
}

TEST_CASE("zero iterations echo the initial set") {
  Rng rng(1);
  const ManifoldSample line = gen_grid_line(40, 6, rng);
  SolverConfig c = line_config(10);
  c.sketch_dim = 6;
  c.max_iters = 0;
  const RunResult r = run(line.clean, c);
  CHECK(r.iterations == 0);
  CHECK(r.trace.empty());
  CHECK(r.q_final.points() == r.q0.points());
}

TEST_CASE("lambda stays frozen and steps respect the clamp and displacement cap") {
  const ManifoldSample cyl = gen_cylinder2d(200, 1.5, 2.0, 10);
  Rng noise_rng(5);
  const PointCloud p = add_uniform_noise(cyl.clean, 0.05, noise_rng);
  SolverConfig c;
  c.q_size = 40;
  c.sketch_dim = 10;
  const SketchMatrix s = sketch_for_run(p, c);
  Rng rng(9);
  const auto idx = initial_subsample(p, c, s, rng);
  const PointCloud q0 = p.subset(idx);
  Rng support_rng(10);
  const SupportParams sp = estimate_supports(p, q0, s, support_rng);
  Solver solver(p, s, sp, c, q0.points());
  solver.iterate();
  const std::vector<double> frozen = solver.state().lambda;
  for (int k = 0; k < 25; ++k) {
    const Matrix before = solver.state().q_curr;
    solver.iterate();
    CHECK(solver.state().lambda == frozen);
    for (Index i = 0; i < before.rows(); ++i) {
      const double step = solver.state().step[static_cast<std::size_t>(i)];
      CHECK(step > 0.0);
      CHECK(step <= solver.steps().max);
      CHECK((solver.state().q_curr.row(i) - before.row(i)).norm() <= solver.steps().max_displacement * (1 + 1e-12));
    }
  }
}

TEST_CASE("update order within an iteration does not matter") {
  const ManifoldSample cyl = gen_cylinder2d(150, 1.5, 2.0, 10);
  SolverConfig c;
  c.q_size = 30;
  const SketchMatrix s = SketchMatrix::identity(10);
  Rng rng(3);
  const PointCloud q0 = cyl.clean.subset(initial_subsample(cyl.clean, c, s, rng));
  Rng support_rng(4);
  const SupportParams sp = estimate_supports(cyl.clean, q0, s, support_rng);
  Solver forward(cyl.clean, s, sp, c, q0.points());
  Solver reversed(cyl.clean, s, sp, c, q0.points());
  std::vector<Index> order(30);
  for (Index i = 0; i < 30; ++i) order[static_cast<std::size_t>(i)] = 29 - i;
  reversed.set_update_order(order);
  for (int k = 0; k < 10; ++k) {
    forward.iterate();
    reversed.iterate();
  }
  CHECK(forward.state().q_curr == reversed.state().q_curr);
}

TEST_CASE("results do not depend on the thread count and repeat under a fixed seed") {
  const ManifoldSample cyl = gen_cylinder2d(240, 1.5, 2.0, 20);
  Rng noise_rng(11);
  const PointCloud p = add_uniform_noise(cyl.clean, 0.1, noise_rng);
  SolverConfig c;
  c.q_size = 48;
  c.max_iters = 30;
  c.seed = 17;
  const RunResult one = run(p, c);
  c.threads = 3;
  const RunResult three = run(p, c);
  const RunResult again = run(p, c);
  CHECK(one.q_final.points() == three.q_final.points());
  CHECK(three.q_final.points() == again.q_final.points());
  CHECK(one.lambda == three.lambda);
  c.seed = 18;
  const RunResult other = run(p, c);
  CHECK(other.q_final.points() != one.q_final.points());
}

TEST_CASE("coincident reconstruction points abort the evaluation") {
  Rng rng(1);
  const ManifoldSample line = gen_grid_line(20, 4, rng);
  SupportParams sp;
  sp.h0 = sp.h1 = sp.h2 = sp.h_hat0 = 0.2;
  sp.c1 = 1.0;
  sp.nu = 2;
  SolverConfig c;
  c.q_size = 3;
  Matrix q0(3, 4);
  q0.row(0) = line.clean.points().row(3);
  q0.row(1) = line.clean.points().row(3);
  q0.row(2) = line.clean.points().row(8);
  Solver solver(line.clean, SketchMatrix::identity(4), sp, c, q0);
  CHECK_THROWS_AS(solver.evaluate(), CoincidentPointsError);
}

TEST_CASE("initialisation around a point takes its nearest neighbours") {
  Matrix m(6, 1);
  m << 0, 10, 1, 11, 2, 12;
  const PointCloud p(m);
  SolverConfig c;
  c.q_size = 3;
  c.sketch_dim = 1;
  c.init = InitMode::kAroundPoint;
  c.init_index = 1;
  Rng rng(1);
  const auto idx = initial_subsample(p, c, SketchMatrix::identity(1), rng);
  CHECK(idx == std::vector<Index>{1, 3, 5});
}

TEST_CASE("noise-free data of low rank still runs") {
  Rng rng(4);
  const ManifoldSample line = gen_grid_line(50, 12, rng);
  SolverConfig c;
  c.q_size = 10;
  c.max_iters = 3;
  const SketchMatrix s = sketch_for_run(line.clean, c);
  CHECK(s.sketch_dim() <= 2);
  CHECK_NOTHROW(run(line.clean, c));
}

TEST_CASE("trace CSV layout") {
  std::vector<IterationRecord> trace(2);
  trace[1].iter = 1;
  trace[1].cost = 2.5;
  std::ostringstream out;
  write_trace_csv(out, trace);
  const std::string text = out.str();
  CHECK(text.rfind("iter,max_grad_norm,cost,fill_distance_Q,wall_ms\n", 0) == 0);
  CHECK(text.find("\n1,0,2.5,0,0\n") != std::string::npos);
}
