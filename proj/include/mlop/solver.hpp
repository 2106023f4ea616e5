#pragma once

#include "mlop/config.hpp"
#include "mlop/core.hpp"
#include "mlop/errors.hpp"
#include "mlop/neighborhood.hpp"
#include "mlop/sketch.hpp"

#include <cmath>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace mlop {

// Guard used by eta() when no support scale is at hand.
inline constexpr double kDefaultMinSeparation = 1e-12;

// Scalars that enter the attraction/repulsion coefficients.
struct KernelParams {
  double h1 = 1.0;
  double h2 = 1.0;
  double eps = 0.1;
  double cutoff_mult = 2.0 * std::sqrt(2.0);
  double min_separation = 1e-9;  // coincident-point guard, 1e-9 * h2 by default
  AttractionModel attraction = AttractionModel::kFrozenWeight;

  static KernelParams from(const SupportParams& supports, const SolverConfig& config);
};

// sqrt(d^2 + eps) for a precomputed sketched length d.
inline double h_eps(double length, double eps) { return std::sqrt(length * length + eps); }
// sqrt(|S^T v|^2 + eps).
double h_eps_norm(const VectorRef& v, double eps, const SketchMatrix& s);

// eta(r) = 1 / (3 r^3) and |d eta / dr| = 1 / r^4. Both throw
// CoincidentPointsError for r <= min_separation.
double eta(double r, double min_separation = kDefaultMinSeparation);
double eta_abs_deriv(double r, double min_separation = kDefaultMinSeparation);

// Coefficients as functions of the sketched distance between the two points:
//
//   alpha(d) = w / H (1 - 2 H^2 / h1^2)   literal model,  w = exp(-d^2 / h1^2), H = sqrt(d^2 + eps)
//   alpha(d) = w / H                      frozen-weight model
//   beta(d)  = w^ / d (|eta'(d)| + 2 eta(d) d / h2^2),   w^ = exp(-d^2 / h2^2)
//
// Both are zero beyond cutoff_mult * h. beta throws CoincidentPointsError for
// d <= min_separation.
double attraction_weight(double dist, const KernelParams& k);
double repulsion_weight(double dist, const KernelParams& k);
double attraction_coeff(const VectorRef& q, const VectorRef& p, const KernelParams& k,
                        const SketchMatrix& s);
double repulsion_coeff(const VectorRef& q, const VectorRef& q_other, const KernelParams& k,
                       const SketchMatrix& s);

// The two sums making up the gradient of one reconstruction point:
//   attraction = sum_j (q_i - p_j) alpha_j
//   repulsion  = sum_{k != i} (q_i - q_k) beta_k
// Difference vectors live in R^n; only the scalar coefficients use the sketch.
// The energies E1_i and E2_i = sum_k eta w^ are gathered in the same pass.
// E1_i sums H w per data point for the literal model; for the frozen-weight
// model it sums the potential
//   phi(d) = -e^{eps/h1^2} h1 sqrt(pi)/2 [erf(H(c)/h1) - erf(H(d)/h1)],
// c the cutoff distance, whose derivative in q is alpha (q - p) with
// alpha = w / H and which is continuous (zero) at the cutoff.
struct GradientTerms {
  Vector attraction;
  Vector repulsion;
  double attraction_energy = 0.0;
  double repulsion_energy = 0.0;
};

// Per-point balancing factor: lambda = -|S^T attraction| / |S^T repulsion|
// (<= 0). Zero when the repulsion term vanishes (isolated point) or the
// attraction term vanishes.
double balance_lambda(const GradientTerms& terms, const SketchMatrix& s);

// Gradient from its terms for a negative balancing factor:
//   grad = attraction + lambda * repulsion
// so that with lambda <= 0 the second term pushes reconstruction points
// apart (the descent step moves q_i along +|lambda| * repulsion).
inline Vector combine_gradient(const GradientTerms& t, double lambda) {
  return t.attraction + lambda * t.repulsion;
}

// Barzilai-Borwein step <dq, dg> / <dg, dg>, clamped to [min, max]; falls
// back to `initial` when <dg, dg> = 0 or the raw value is not positive.
// The solver additionally shrinks each point's step so that the move
// |gamma grad| stays within ResolvedSteps::max_displacement.
struct StepRule {
  double initial;
  double min;
  double max;
};
double bb_step(const VectorRef& dq, const VectorRef& dg, const StepRule& rule);

// Everything that stays fixed during a run: the data, its projection and the
// kernel scalars. Evaluations take Q and its projection Q S explicitly so
// that all points of one iteration read the same snapshot.
class Objective {
 public:
  Objective(const PointCloud& p, const SketchMatrix& s, KernelParams kernel);

  const PointCloud& data() const { return *p_; }
  const SketchMatrix& sketch() const { return *s_; }
  const KernelParams& kernel() const { return kernel_; }
  const Matrix& projected_data() const { return p_projected_; }

  GradientTerms terms(Index i, const Matrix& q, const Matrix& q_projected) const;

  // Cost restricted to the terms that involve q_i through its own row:
  //   G_i = E1_i - lambda_i sum_{k != i} eta(|q_i - q_k|) w^_ik
  // Its gradient with respect to q_i, with the other points held fixed, is
  // exactly combine_gradient(terms(i), lambda_i).
  double point_cost(Index i, const Matrix& q, const Matrix& q_projected,
                    std::span<const double> lambda) const;

  // G(Q) = E1 - sum_i lambda_i E2_i = sum_i point_cost(i). With an empty
  // lambda the repulsion energy is omitted (pre-initialisation).
  double cost(const Matrix& q, const Matrix& q_projected, std::span<const double> lambda) const;
  double cost(const Matrix& q, std::span<const double> lambda) const;

  // E1 and the lambda-free repulsion sums E2_i = sum_k eta w^.
  double attraction_energy(const Matrix& q, const Matrix& q_projected) const;
  std::vector<double> repulsion_energies(const Matrix& q, const Matrix& q_projected) const;

 private:
  const PointCloud* p_;
  const SketchMatrix* s_;
  KernelParams kernel_;
  Matrix p_projected_;
};

// Mutable state of the descent.
struct SolverState {
  Matrix q_curr;
  Matrix q_prev;
  Matrix grad_curr;  // one gradient per row
  Matrix grad_prev;
  std::vector<double> lambda;
  std::vector<double> step;
  std::vector<double> grad_norms;  // sketched
  Index iter = 0;                  // number of updates applied
  bool lambda_initialized = false;
};

struct IterationRecord {
  Index iter = 0;
  double max_grad_norm = 0.0;
  double cost = 0.0;
  double fill_distance = 0.0;
  double wall_ms = 0.0;
};

// The solver failed numerically at a given iteration (coincident points,
// non-finite gradient). what() carries the diagnostic.
class SolverAbort : public NumericalError {
 public:
  SolverAbort(Index iteration, const std::string& cause);
  Index iteration() const { return iteration_; }

 private:
  Index iteration_;
};

// Jacobi-style gradient descent: every iteration evaluates all I gradients
// against the snapshot Q^(k) (optionally on several threads), then commits
// Q^(k+1) in one step. Results do not depend on the thread count.
class Solver {
 public:
  Solver(const PointCloud& p, const SketchMatrix& s, const SupportParams& supports,
         const SolverConfig& config, Matrix q0);

  // Gradient evaluation at the current iterate. The first call initialises
  // and freezes lambda.
  void evaluate();
  // evaluate(), record, and apply one update unless converged.
  IterationRecord iterate();

  bool converged() const { return converged_; }
  const SolverState& state() const { return state_; }
  const Objective& objective() const { return objective_; }
  const ResolvedSteps& steps() const { return steps_; }

  // Per-point gradient from the current snapshot; requires lambda.
  Vector gradient_at(Index i) const;

  // Update order used inside one commit (testing hook for snapshot
  // semantics). Defaults to 0..I-1.
  void set_update_order(std::vector<Index> order) { order_ = std::move(order); }

 private:
  Objective objective_;
  SolverConfig config_;
  ResolvedSteps steps_;
  SolverState state_;
  Matrix q_projected_;
  std::vector<Index> order_;
  double current_cost_ = 0.0;
  bool evaluated_ = false;
  bool converged_ = false;
};

// Initial lambda for a given configuration (does not touch solver state).
std::vector<double> init_lambda(const Objective& objective, const Matrix& q);

// Q^(0) indices into P for the configured init mode, drawn from rng.
std::vector<Index> initial_subsample(const PointCloud& p, const SolverConfig& config,
                                     const SketchMatrix& s, Rng& rng);

struct RunResult {
  PointCloud q_final;
  PointCloud q0;
  std::vector<Index> q0_indices;
  std::vector<IterationRecord> trace;
  SupportParams supports;
  SketchMatrix sketch;
  std::vector<double> lambda;
  bool converged = false;
  Index iterations = 0;  // updates applied
};

// Sketch built by run(): dimension config.sketch_dim, or the numerical rank of
// the range-finder matrix when P spans fewer dimensions (noise-free data).
SketchMatrix sketch_for_run(const PointCloud& p, const SolverConfig& config);

// Algorithm entry point: sketch from P, Q^(0) by subsampling, supports, then
// descent until the largest sketched gradient norm drops below stop_tol or
// max_iters updates were applied.
RunResult run(const PointCloud& p, const SolverConfig& config);
// Same, with a caller-supplied sketch (e.g. the identity).
RunResult run(const PointCloud& p, const SolverConfig& config, const SketchMatrix& s);

// iter,max_grad_norm,cost,fill_distance_Q,wall_ms
void write_trace_csv(std::ostream& out, std::span<const IterationRecord> trace);

// Runs fn(i) for i in [0, count) on up to `threads` threads. Each index is
// visited exactly once; callers write disjoint outputs.
void parallel_for(Index count, unsigned threads, const std::function<void(Index)>& fn);

}  // namespace mlop
